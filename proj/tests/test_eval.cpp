#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "medcap/core/error.hpp"
#include "medcap/eval/judge.hpp"
#include "medcap/eval/scoring.hpp"
#include "medcap/gateway/gateway.hpp"
#include "medcap/prompt/templates.hpp"

using namespace medcap;
using namespace medcap::eval;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("medcap_eval_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

qa::QAItem make_item(const std::string& qa_id, qa::Polarity pol) {
    qa::QAItem it;
    it.qa_id = qa_id;
    it.region_id = "r";
    it.polarity = pol;
    it.expected = pol == qa::Polarity::positive ? "yes" : "no";
    it.question = "Is it so?";
    return it;
}

JudgedAnswer make_answer(const std::string& qa_id, std::optional<bool> verdict) {
    JudgedAnswer a;
    a.qa_id = qa_id;
    a.region_id = "r";
    a.verdict = verdict;
    return a;
}

prompt::TemplateLibrary shipped_templates() {
    return prompt::TemplateLibrary::load(fs::path(MEDCAP_ASSETS_DIR) / "templates" / "prompts");
}

}  // namespace

TEST_CASE("parse_verdict recognizes leading yes/no only") {
    CHECK(parse_verdict("yes") == true);
    CHECK(parse_verdict("Yes, the description mentions it.") == true);
    CHECK(parse_verdict("  NO.") == false);
    CHECK(parse_verdict("No\nyes yes yes") == false);
    CHECK(parse_verdict("YES\nbut actually no") == true);
    CHECK(parse_verdict("\"Yes\"") == true);
    CHECK(parse_verdict("1. no") == false);
    CHECK(parse_verdict("The answer is yes") == std::nullopt);
    CHECK(parse_verdict("maybe") == std::nullopt);
    CHECK(parse_verdict("yesterday") == std::nullopt);
    CHECK(parse_verdict("nope") == std::nullopt);
    CHECK(parse_verdict("") == std::nullopt);
    CHECK(parse_verdict("42") == std::nullopt);
}

TEST_CASE("parse_ratings accepts exactly four bounded integers") {
    auto r = parse_ratings("RATINGS: 80 70 60 50");
    REQUIRE(r.has_value());
    CHECK(r->fluency == 80);
    CHECK(r->relevance == 70);
    CHECK(r->factual_correctness == 60);
    CHECK(r->clinical_plausibility == 50);
    CHECK(r->region_score() == doctest::Approx(65.0));

    CHECK(parse_ratings("  RATINGS: 0 100 0 100  ") .has_value());
    CHECK(parse_ratings("Let me think.\nRATINGS: 1 2 3 4").has_value());
    CHECK(parse_ratings("RATINGS:80 70 60 50").has_value());

    CHECK_FALSE(parse_ratings("RATINGS: 80 70 60").has_value());
    CHECK_FALSE(parse_ratings("RATINGS: 80 70 60 50 40").has_value());
    CHECK_FALSE(parse_ratings("RATINGS: 80 70 60 101").has_value());
    CHECK_FALSE(parse_ratings("RATINGS: 80, 70, 60, 50").has_value());
    CHECK_FALSE(parse_ratings("RATINGS: 80 70 60 fifty").has_value());
    CHECK_FALSE(parse_ratings("RATINGS: 80 70 60 50 and more").has_value());
    CHECK_FALSE(parse_ratings("Sure! RATINGS: 80 70 60 50").has_value());
    CHECK_FALSE(parse_ratings("the ratings are 80 70 60 50").has_value());
    CHECK_FALSE(parse_ratings("RATINGS: -5 70 60 50").has_value());
    CHECK_FALSE(parse_ratings("RATINGS: 999999999999 1 1 1").has_value());
    CHECK_FALSE(parse_ratings("").has_value());

    // Only the first RATINGS line counts; a bad one is not skipped.
    CHECK_FALSE(parse_ratings("RATINGS: junk\nRATINGS: 1 2 3 4").has_value());
}

TEST_CASE("verdict and ratings parsers are total") {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 2000; ++trial) {
        std::string s;
        const size_t len = rng() % 64;
        for (size_t i = 0; i < len; ++i) s += (char)(rng() % 256);
        CHECK_NOTHROW((void)parse_verdict(s));
        CHECK_NOTHROW((void)parse_ratings(s));
        CHECK_NOTHROW((void)parse_ratings("RATINGS:" + s));
    }
}

TEST_CASE("meddlc scoring matches the hand computation") {
    std::vector<qa::QAItem> items;
    std::vector<JudgedAnswer> answers;
    // 13/20 positives correct, 31/50 negatives correct.
    for (int i = 0; i < 20; ++i) {
        auto id = "p" + std::to_string(i);
        items.push_back(make_item(id, qa::Polarity::positive));
        answers.push_back(make_answer(id, i < 13));
    }
    for (int i = 0; i < 50; ++i) {
        auto id = "n" + std::to_string(i);
        items.push_back(make_item(id, qa::Polarity::negative));
        answers.push_back(make_answer(id, i < 31 ? std::optional<bool>(false)
                                                 : std::optional<bool>(true)));
    }
    auto s = score_meddlc(answers, items);
    CHECK(s.pos_total == 20);
    CHECK(s.pos_correct == 13);
    CHECK(s.neg_total == 50);
    CHECK(s.neg_correct == 31);
    CHECK(s.pos_accuracy == doctest::Approx(65.0));
    CHECK(s.neg_accuracy == doctest::Approx(62.0));
    CHECK(s.meddlc == doctest::Approx(63.5));
}

TEST_CASE("missing and unparseable answers count as incorrect") {
    std::vector<qa::QAItem> items = {make_item("p0", qa::Polarity::positive),
                                     make_item("p1", qa::Polarity::positive),
                                     make_item("n0", qa::Polarity::negative)};
    std::vector<JudgedAnswer> answers = {make_answer("p0", true),
                                         make_answer("p1", std::nullopt)};
    // n0 has no answer at all.
    auto s = score_meddlc(answers, items);
    CHECK(s.pos_correct == 1);
    CHECK(s.neg_correct == 0);
    CHECK(s.pos_accuracy == doctest::Approx(50.0));
    CHECK(s.neg_accuracy == doctest::Approx(0.0));
}

TEST_CASE("a one-sided QA set cannot be scored") {
    std::vector<qa::QAItem> only_pos = {make_item("p0", qa::Polarity::positive)};
    std::vector<JudgedAnswer> answers = {make_answer("p0", true)};
    try {
        score_meddlc(answers, only_pos);
        FAIL("expected scoring error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::scoring);
        CHECK(e.exit_code() == 4);
    }
    std::vector<qa::QAItem> only_neg = {make_item("n0", qa::Polarity::negative)};
    std::vector<JudgedAnswer> neg_answers = {make_answer("n0", false)};
    CHECK_THROWS_AS(score_meddlc(neg_answers, only_neg), Error);
    CHECK_THROWS_AS(score_meddlc({}, {}), Error);
}

TEST_CASE("llm score is the mean region score") {
    std::vector<Ratings> regions = {{80, 70, 60, 50}, {90, 80, 70, 60}};
    CHECK(score_llm(regions) == doctest::Approx(70.0));
    CHECK_THROWS_AS(score_llm({}), Error);
    CHECK(aggregate_mean({65.0, 55.0, 75.0}) == doctest::Approx(65.0));
    CHECK_THROWS_AS(aggregate_mean({}), Error);
}

TEST_CASE("format_pct rounds half up on the decimal value") {
    CHECK(format_pct(63.549999999999997) == "63.6");  // (65.1 + 62.0) / 2
    CHECK(format_pct((65.1 + 62.0) / 2.0) == "63.6");
    CHECK(format_pct(46.15) == "46.2");
    CHECK(format_pct(46.149) == "46.1");
    CHECK(format_pct(0.0) == "0.0");
    CHECK(format_pct(100.0) == "100.0");
    CHECK(format_pct(79.96) == "80.0");
    CHECK(format_pct(50.25) == "50.3");
    CHECK(format_pct(88.0 / 9.0 * 10.0) == "97.8");  // 97.777...
}

TEST_CASE("published reference rows stay internally consistent") {
    struct Row {
        const char* model;
        double llm, meddlc, pos, neg;
        const char* rendered;
    };
    // model, LLM-score, MedDLC-score, pos acc, neg acc.
    const Row rows[] = {
        {"GPT-4o", 81.5, 50.2, 52.0, 48.4, "50.2"},
        {"Claude 3.7 Sonnet", 79.2, 47.5, 49.0, 46.0, "47.5"},
        {"LLaMA-3.2 Vision", 75.3, 43.8, 45.1, 42.5, "43.8"},
        {"Qwen2.5-VL", 73.4, 41.9, 43.2, 40.6, "41.9"},
        {"GPT-4Rol", 77.1, 45.7, 47.3, 44.0, "45.7"},
        {"OMG-LLaVA", 76.5, 46.1, 47.8, 44.5, "46.1"},
        {"MedDAM", 78.9, 63.6, 65.1, 62.0, "63.6"},
    };
    for (const auto& row : rows) {
        // Stored MedDLC-score equals the recomputed mean within table
        // precision (the published table is rounded to one decimal).
        CHECK(std::abs(meddlc_overall(row.pos, row.neg) - row.meddlc) <= 0.05 + 1e-12);
        CHECK(format_pct(row.meddlc) == row.rendered);
    }
    // The one row where recomputation and the printed value differ by the
    // maximum allowed amount: (47.8 + 44.5) / 2 = 46.15 vs printed 46.1.
    CHECK(meddlc_overall(47.8, 44.5) == doctest::Approx(46.15));
}

TEST_CASE("judged answers round-trip through json") {
    for (auto verdict : {std::optional<bool>(true), std::optional<bool>(false),
                         std::optional<bool>(std::nullopt)}) {
        JudgedAnswer a;
        a.qa_id = "q1";
        a.region_id = "r1";
        a.verdict = verdict;
        a.raw_reply = "Yes indeed";
        a.request_digest = "abc";
        auto back = JudgedAnswer::from_json(a.to_json(), "test");
        CHECK(back.verdict == verdict);
        CHECK(back.qa_id == a.qa_id);
        CHECK(back.raw_reply == a.raw_reply);
    }
}

TEST_CASE("judge_qa records verdicts without throwing on junk") {
    auto templates = shipped_templates();
    gateway::BackendSpec spec;
    spec.name = "judge";
    spec.mock.rules.push_back({{"opacity"}, "Yes, it does."});
    spec.mock.default_reply = "I cannot say.";
    gateway::Gateway judge(spec, temp_dir("judge_qa"));

    auto item = make_item("q0", qa::Polarity::positive);
    item.question = "Is there increased opacity in the lower lobe?";
    auto a = judge_qa(judge, templates, "The region shows opacity.", item);
    CHECK(a.qa_id == "q0");
    CHECK(a.verdict == true);
    CHECK_FALSE(a.request_digest.empty());

    item.question = "Is something else mentioned?";
    item.qa_id = "q1";
    auto b = judge_qa(judge, templates, "The region shows nothing relevant.", item);
    CHECK(b.qa_id == "q1");
    CHECK(b.verdict == std::nullopt);  // junk reply recorded, not thrown
    CHECK(b.raw_reply == "I cannot say.");
}

TEST_CASE("rate_caption retries once through the stricter template") {
    auto templates = shipped_templates();

    SUBCASE("clean first pass") {
        gateway::BackendSpec spec;
        spec.name = "judge";
        spec.mock.default_reply = "RATINGS: 70 60 50 40";
        gateway::Gateway judge(spec, temp_dir("rate_clean"));
        auto out = rate_caption(judge, templates, "A nodule.", {"lidc_idri", ""});
        CHECK_FALSE(out.retried);
        CHECK(out.ratings.fluency == 70);
        CHECK(out.ratings.region_score() == doctest::Approx(55.0));
    }
    SUBCASE("garbled first pass, useful retry") {
        gateway::BackendSpec spec;
        spec.name = "judge";
        spec.mock.rules.push_back({{"could not be parsed"}, "RATINGS: 10 20 30 40"});
        spec.mock.default_reply = "I rate it ten out of ten";
        gateway::Gateway judge(spec, temp_dir("rate_retry"));
        auto out = rate_caption(judge, templates, "A nodule.", {"lidc_idri", ""});
        CHECK(out.retried);
        CHECK(out.ratings.fluency == 10);
        CHECK(out.ratings.clinical_plausibility == 40);
        CHECK(judge.backend_calls() == 2);
    }
    SUBCASE("two garbled passes are a scoring error") {
        gateway::BackendSpec spec;
        spec.name = "judge";
        spec.mock.default_reply = "still nonsense";
        gateway::Gateway judge(spec, temp_dir("rate_fail"));
        try {
            rate_caption(judge, templates, "A nodule.", {"lidc_idri", ""});
            FAIL("expected scoring error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::scoring);
            CHECK(std::string(e.what()).find("unparseable ratings") != std::string::npos);
        }
        CHECK(judge.backend_calls() == 2);
    }
}
