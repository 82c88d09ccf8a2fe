#pragma once

#include <optional>
#include <string>
#include <vector>

#include "medcap/core/jsonl.hpp"
#include "medcap/qa/bank.hpp"

namespace medcap::eval {

/// True/false for a recognizable yes/no verdict, nullopt otherwise. Total:
/// never throws, any input maps somewhere. The verdict is the first
/// alphabetic run on the first line, case-insensitive.
std::optional<bool> parse_verdict(const std::string& reply);

struct Ratings {
    int fluency = 0;
    int relevance = 0;
    int factual_correctness = 0;
    int clinical_plausibility = 0;

    double region_score() const {
        return (fluency + relevance + factual_correctness + clinical_plausibility) / 4.0;
    }
};

/// Parses the first line whose trimmed form starts with "RATINGS:"; it must
/// carry exactly four integers in [0,100] and nothing else. Total.
std::optional<Ratings> parse_ratings(const std::string& reply);

/// One judged verification answer, joined to its QA item by qa_id.
struct JudgedAnswer {
    std::string qa_id;
    std::string region_id;
    std::optional<bool> verdict;  // nullopt = unparseable, scored as incorrect
    std::string raw_reply;
    std::string request_digest;

    json to_json() const;
    static JudgedAnswer from_json(const json& j, const std::string& origin);
};

struct MedDLCScore {
    long pos_total = 0;
    long pos_correct = 0;
    long neg_total = 0;
    long neg_correct = 0;
    double pos_accuracy = 0.0;  // percent
    double neg_accuracy = 0.0;  // percent
    double meddlc = 0.0;        // percent
};

/// Accuracy over positive and negative questions separately; MedDLC-score is
/// their unweighted mean. A missing or unparseable answer counts as
/// incorrect. Throws a scoring error if either polarity has no questions.
MedDLCScore score_meddlc(const std::vector<JudgedAnswer>& answers,
                         const std::vector<qa::QAItem>& items);

double meddlc_overall(double pos_accuracy, double neg_accuracy);

/// Mean region score across rated regions. Throws a scoring error when empty.
double score_llm(const std::vector<Ratings>& per_region);

/// Unweighted mean across datasets. Throws a scoring error when empty.
double aggregate_mean(const std::vector<double>& per_dataset);

/// Renders a percent with one decimal, round-half-up on the exact decimal
/// value (63.549999... prints as "63.6", not "63.5"). Input must be >= 0.
std::string format_pct(double v);

}  // namespace medcap::eval
