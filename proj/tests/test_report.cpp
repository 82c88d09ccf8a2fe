#include <sstream>
#include <vector>

#include "doctest.h"
#include "medcap/core/error.hpp"
#include "medcap/run/report.hpp"

using namespace medcap;
using namespace medcap::run;

namespace {

ScoreCard make_card(const std::string& model, const std::string& type, double llm, double meddlc,
                    double pos, double neg) {
    ScoreCard c;
    c.model = model;
    c.model_type = type;
    c.config_digest = "cfg";
    c.neg_per_region = 2;
    c.llm_score = llm;
    c.meddlc = meddlc;
    c.pos_accuracy = pos;
    c.neg_accuracy = neg;
    return c;
}

// The published benchmark rows; the report must reproduce their ordering and
// one-decimal rendering exactly.
std::vector<ScoreCard> reference_cards() {
    return {
        make_card("GPT-4o", "General", 81.5, 50.2, 52.0, 48.4),
        make_card("Claude 3.7 Sonnet", "General", 79.2, 47.5, 49.0, 46.0),
        make_card("LLaMA-3.2 Vision", "General", 75.3, 43.8, 45.1, 42.5),
        make_card("Qwen2.5-VL", "General", 73.4, 41.9, 43.2, 40.6),
        make_card("GPT-4Rol", "Region-specific", 77.1, 45.7, 47.3, 44.0),
        make_card("OMG-LLaVA", "Region-specific", 76.5, 46.1, 47.8, 44.5),
        make_card("MedDAM", "Region-specific", 78.9, 63.6, 65.1, 62.0),
    };
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("report rows sort by stored MedDLC-score, descending") {
    auto csv = emit_report(reference_cards(), ReportFormat::delimited);
    auto lines = lines_of(csv);
    REQUIRE(lines.size() == 8);
    CHECK(lines[0] == "model,type,llm_score,meddlc_score,pos_qa,neg_qa");
    CHECK(lines[1] == "MedDAM,Region-specific,78.9,63.6,65.1,62.0");
    CHECK(lines[2] == "GPT-4o,General,81.5,50.2,52.0,48.4");
    CHECK(lines[3] == "Claude 3.7 Sonnet,General,79.2,47.5,49.0,46.0");
    CHECK(lines[4] == "OMG-LLaVA,Region-specific,76.5,46.1,47.8,44.5");
    CHECK(lines[5] == "GPT-4Rol,Region-specific,77.1,45.7,47.3,44.0");
    CHECK(lines[6] == "LLaMA-3.2 Vision,General,75.3,43.8,45.1,42.5");
    CHECK(lines[7] == "Qwen2.5-VL,General,73.4,41.9,43.2,40.6");
}

TEST_CASE("the report renders stored scores, never recomputed ones") {
    // OMG-LLaVA: (47.8 + 44.5) / 2 = 46.15 would format as "46.2"; the stored
    // published value 46.1 must win.
    auto csv = emit_report(reference_cards(), ReportFormat::delimited);
    CHECK(csv.find(",46.1,") != std::string::npos);
    CHECK(csv.find(",46.2,") == std::string::npos);
}

TEST_CASE("ties sort by model name") {
    auto cards = std::vector<ScoreCard>{make_card("zeta", "General", 50, 40, 40, 40),
                                        make_card("alpha", "General", 50, 40, 40, 40),
                                        make_card("mid", "General", 50, 45, 45, 45)};
    auto lines = lines_of(emit_report(cards, ReportFormat::delimited));
    REQUIRE(lines.size() == 4);
    CHECK(lines[1].rfind("mid,", 0) == 0);
    CHECK(lines[2].rfind("alpha,", 0) == 0);
    CHECK(lines[3].rfind("zeta,", 0) == 0);
}

TEST_CASE("table format aligns columns under a separator") {
    auto text = emit_report(reference_cards(), ReportFormat::table_text);
    auto lines = lines_of(text);
    REQUIRE(lines.size() == 9);
    CHECK(lines[0].rfind("Model", 0) == 0);
    CHECK(lines[0].find("LLM-score") != std::string::npos);
    CHECK(lines[0].find("MedDLC-score") != std::string::npos);
    CHECK(lines[0].find("Pos QA") != std::string::npos);
    CHECK(lines[0].find("Neg QA") != std::string::npos);
    CHECK(lines[1].find_first_not_of('-') == std::string::npos);
    CHECK(lines[1].size() == lines[0].size());
    CHECK(lines[2].rfind("MedDAM", 0) == 0);
    CHECK(lines[2].find("63.6") != std::string::npos);
    // Every data row keeps the same column offsets as the header.
    const auto type_col = lines[0].find("Type");
    CHECK(lines[3].find("General") == type_col);
}

TEST_CASE("machine-readable report round-trips exactly") {
    auto text = emit_report(reference_cards(), ReportFormat::machine_readable);
    CHECK(text.back() == '\n');
    auto j = json::parse(text);
    REQUIRE(j.contains("rows"));
    REQUIRE(j["rows"].size() == 7);
    CHECK(j["rows"][0]["model"] == "MedDAM");
    CHECK(j["rows"][0]["overall"]["meddlc"] == 63.6);
    CHECK(j["rows"][0]["model_type"] == "Region-specific");

    // Parse back into cards and re-emit: byte-identical.
    std::vector<ScoreCard> cards;
    for (const auto& row : j["rows"]) cards.push_back(ScoreCard::from_json(row, "test"));
    CHECK(emit_report(cards, ReportFormat::machine_readable) == text);
}

TEST_CASE("csv cells with commas or quotes are quoted") {
    auto cards = std::vector<ScoreCard>{make_card("model, with comma", "General", 1, 1, 1, 1),
                                        make_card("quote\"inside", "General", 2, 2, 2, 2)};
    auto lines = lines_of(emit_report(cards, ReportFormat::delimited));
    REQUIRE(lines.size() == 3);
    CHECK(lines[1] == "\"quote\"\"inside\",General,2.0,2.0,2.0,2.0");
    CHECK(lines[2] == "\"model, with comma\",General,1.0,1.0,1.0,1.0");
}

TEST_CASE("scorecards round-trip per-dataset detail") {
    ScoreCard c = make_card("m", "General", 65.0, 79.2195767195767, 78.4391534391534, 80.0);
    c.judge_sees_image = true;
    DatasetScore d;
    d.regions = 9;
    d.pos_total = 9;
    d.pos_correct = 8;
    d.neg_total = 10;
    d.neg_correct = 8;
    d.pos_accuracy = 800.0 / 9.0;
    d.neg_accuracy = 80.0;
    d.meddlc = (800.0 / 9.0 + 80.0) / 2.0;
    d.llm_score = 65.0;
    c.per_dataset["vindr_cxr"] = d;

    auto back = ScoreCard::from_json(c.to_json(), "test");
    CHECK(back.model == "m");
    CHECK(back.judge_sees_image);
    CHECK(back.neg_per_region == 2);
    REQUIRE(back.per_dataset.count("vindr_cxr") == 1);
    const auto& bd = back.per_dataset["vindr_cxr"];
    CHECK(bd.regions == 9);
    CHECK(bd.pos_correct == 8);
    CHECK(bd.pos_accuracy == d.pos_accuracy);  // exact double round-trip
    CHECK(bd.meddlc == d.meddlc);
    CHECK(back.meddlc == c.meddlc);
}

TEST_CASE("report format names") {
    CHECK(report_format_from_string("table") == ReportFormat::table_text);
    CHECK(report_format_from_string("table_text") == ReportFormat::table_text);
    CHECK(report_format_from_string("json") == ReportFormat::machine_readable);
    CHECK(report_format_from_string("machine_readable") == ReportFormat::machine_readable);
    CHECK(report_format_from_string("csv") == ReportFormat::delimited);
    CHECK(report_format_from_string("delimited") == ReportFormat::delimited);
    CHECK_THROWS_AS(report_format_from_string("yaml"), Error);
}
