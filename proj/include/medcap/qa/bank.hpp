#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medcap/core/jsonl.hpp"
#include "medcap/core/types.hpp"
#include "medcap/ingest/manifest.hpp"

namespace medcap::qa {

enum class Polarity { positive, negative };

const char* to_string(Polarity p);
Polarity polarity_from_string(const std::string& s);

/// One reusable question. question_text may reference {{attribute}} (the
/// template's own canonical wording) and {{site}}.
struct QATemplate {
    std::string template_id;
    std::string attribute;
    Polarity polarity = Polarity::positive;
    std::string question_text;
};

/// Per-dataset question banks, indexed by (dataset, normalized attribute,
/// polarity). Loaded from one JSON file per dataset:
/// {"dataset_id": ..., "templates": [...]}.
class QaLibrary {
public:
    static QaLibrary load(const std::filesystem::path& dir);

    const QATemplate* find(DatasetId dataset, const std::string& attribute, Polarity p) const;
    size_t size() const { return count_; }

private:
    std::map<std::string, QATemplate> index_;  // "<dataset>\x1f<key>\x1f<pol>"
    size_t count_ = 0;
};

struct QAItem {
    std::string qa_id;
    std::string region_id;
    DatasetId dataset = DatasetId::vindr_cxr;
    std::string attribute;  // canonical wording from the template
    Polarity polarity = Polarity::positive;
    std::string question;
    std::string expected;  // "yes" for positive, "no" for negative
    std::string template_id;

    json to_json() const;
    static QAItem from_json(const json& j, const std::string& origin);
};

struct QaPolicy {
    int neg_per_region = 2;
    uint64_t seed = 0;
};

/// Positive questions for every present attribute and pathology label with a
/// bank entry; negatives drawn from explicitly-absent attributes, at most
/// neg_per_region of them, chosen by a per-region deterministic shuffle.
/// Regions with no applicable templates yield no items plus a report entry.
std::vector<QAItem> instantiate_questions(const ingest::RegionRecord& region, DatasetId dataset,
                                          const QaLibrary& lib, const QaPolicy& policy,
                                          ValidationReport* report = nullptr);

}  // namespace medcap::qa
