#include "medcap/run/report.hpp"

#include <algorithm>

#include "medcap/core/error.hpp"
#include "medcap/eval/scoring.hpp"

namespace medcap::run {
namespace {

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

json DatasetScore::to_json() const {
    json j;
    j["regions"] = regions;
    j["pos_total"] = pos_total;
    j["pos_correct"] = pos_correct;
    j["neg_total"] = neg_total;
    j["neg_correct"] = neg_correct;
    j["pos_accuracy"] = pos_accuracy;
    j["neg_accuracy"] = neg_accuracy;
    j["meddlc"] = meddlc;
    j["llm_score"] = llm_score;
    return j;
}

DatasetScore DatasetScore::from_json(const json& j) {
    DatasetScore s;
    s.regions = j.value("regions", 0L);
    s.pos_total = j.value("pos_total", 0L);
    s.pos_correct = j.value("pos_correct", 0L);
    s.neg_total = j.value("neg_total", 0L);
    s.neg_correct = j.value("neg_correct", 0L);
    s.pos_accuracy = j.value("pos_accuracy", 0.0);
    s.neg_accuracy = j.value("neg_accuracy", 0.0);
    s.meddlc = j.value("meddlc", 0.0);
    s.llm_score = j.value("llm_score", 0.0);
    return s;
}

json ScoreCard::to_json() const {
    json j;
    j["model"] = model;
    j["model_type"] = model_type;
    j["config_digest"] = config_digest;
    j["judge_sees_image"] = judge_sees_image;
    j["neg_per_region"] = neg_per_region;
    j["per_dataset"] = json::object();
    for (const auto& [name, score] : per_dataset) j["per_dataset"][name] = score.to_json();
    j["overall"] = {{"pos_accuracy", pos_accuracy},
                    {"neg_accuracy", neg_accuracy},
                    {"meddlc", meddlc},
                    {"llm_score", llm_score}};
    return j;
}

ScoreCard ScoreCard::from_json(const json& j, const std::string& origin) {
    ScoreCard c;
    try {
        c.model = j.at("model").get<std::string>();
        c.model_type = j.value("model_type", std::string{"General"});
        c.config_digest = j.value("config_digest", std::string{});
        c.judge_sees_image = j.value("judge_sees_image", false);
        c.neg_per_region = j.value("neg_per_region", 0);
        const json pd = j.value("per_dataset", json::object());
        for (const auto& [name, score] : pd.items())
            c.per_dataset[name] = DatasetScore::from_json(score);
        const json overall = j.value("overall", json::object());
        c.pos_accuracy = overall.value("pos_accuracy", 0.0);
        c.neg_accuracy = overall.value("neg_accuracy", 0.0);
        c.meddlc = overall.value("meddlc", 0.0);
        c.llm_score = overall.value("llm_score", 0.0);
    } catch (const json::exception& e) {
        throw_validation(origin + ": bad scorecard: " + e.what());
    }
    return c;
}

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "table" || s == "table_text") return ReportFormat::table_text;
    if (s == "json" || s == "machine_readable") return ReportFormat::machine_readable;
    if (s == "csv" || s == "delimited") return ReportFormat::delimited;
    throw_config("unknown report format '" + s + "' (expected table, json, or csv)");
}

std::string emit_report(std::vector<ScoreCard> cards, ReportFormat format) {
    std::sort(cards.begin(), cards.end(), [](const ScoreCard& a, const ScoreCard& b) {
        if (a.meddlc != b.meddlc) return a.meddlc > b.meddlc;
        return a.model < b.model;
    });

    if (format == ReportFormat::machine_readable) {
        json j;
        j["rows"] = json::array();
        for (const auto& c : cards) j["rows"].push_back(c.to_json());
        return canonical_dump(j) + "\n";
    }

    if (format == ReportFormat::delimited) {
        std::string out = "model,type,llm_score,meddlc_score,pos_qa,neg_qa\n";
        for (const auto& c : cards) {
            out += csv_cell(c.model) + ',' + csv_cell(c.model_type) + ',' +
                   eval::format_pct(c.llm_score) + ',' + eval::format_pct(c.meddlc) + ',' +
                   eval::format_pct(c.pos_accuracy) + ',' + eval::format_pct(c.neg_accuracy) +
                   '\n';
        }
        return out;
    }

    // table_text
    const std::vector<std::string> headers = {"Model",        "Type",   "LLM-score",
                                              "MedDLC-score", "Pos QA", "Neg QA"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : cards) {
        rows.push_back({c.model, c.model_type, eval::format_pct(c.llm_score),
                        eval::format_pct(c.meddlc), eval::format_pct(c.pos_accuracy),
                        eval::format_pct(c.neg_accuracy)});
    }
    std::vector<size_t> width(headers.size());
    for (size_t i = 0; i < headers.size(); ++i) width[i] = headers[i].size();
    for (const auto& row : rows)
        for (size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());

    auto emit_row = [&](const std::vector<std::string>& row) {
        std::string line;
        for (size_t i = 0; i < row.size(); ++i) {
            if (i > 0) line += "  ";
            line += row[i];
            if (i + 1 < row.size()) line.append(width[i] - row[i].size(), ' ');
        }
        return line + "\n";
    };

    std::string out = emit_row(headers);
    size_t total = 0;
    for (size_t i = 0; i < width.size(); ++i) total += width[i] + (i > 0 ? 2 : 0);
    out += std::string(total, '-') + "\n";
    for (const auto& row : rows) out += emit_row(row);
    return out;
}

}  // namespace medcap::run
