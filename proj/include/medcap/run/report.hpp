#pragma once

#include <map>
#include <string>
#include <vector>

#include "medcap/core/jsonl.hpp"

namespace medcap::run {

struct DatasetScore {
    long regions = 0;
    long pos_total = 0;
    long pos_correct = 0;
    long neg_total = 0;
    long neg_correct = 0;
    double pos_accuracy = 0.0;
    double neg_accuracy = 0.0;
    double meddlc = 0.0;
    double llm_score = 0.0;

    json to_json() const;
    static DatasetScore from_json(const json& j);
};

/// Final result sheet for one captioning backend. The stored overall values
/// are what reports render; nothing is recomputed at render time.
struct ScoreCard {
    std::string model;
    std::string model_type;  // "General" | "Region-specific"
    std::string config_digest;
    bool judge_sees_image = false;
    int neg_per_region = 0;
    std::map<std::string, DatasetScore> per_dataset;  // keyed by dataset id
    double pos_accuracy = 0.0;                        // unweighted means across datasets
    double neg_accuracy = 0.0;
    double meddlc = 0.0;
    double llm_score = 0.0;

    json to_json() const;
    static ScoreCard from_json(const json& j, const std::string& origin);
};

enum class ReportFormat { table_text, machine_readable, delimited };

ReportFormat report_format_from_string(const std::string& s);

/// Rows sorted by stored overall MedDLC-score, descending (model name breaks
/// ties). Columns: Model, Type, LLM-score, MedDLC-score, Pos QA, Neg QA.
std::string emit_report(std::vector<ScoreCard> cards, ReportFormat format);

}  // namespace medcap::run
