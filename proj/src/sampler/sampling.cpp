#include "medcap/sampler/sampling.hpp"

#include <algorithm>
#include <map>

#include "medcap/core/error.hpp"
#include "medcap/core/rng.hpp"

namespace medcap::sampler {

std::string to_string(StratifyBy s) {
    switch (s) {
        case StratifyBy::pathology_label: return "pathology_label";
        case StratifyBy::anatomical_site: return "anatomical_site";
    }
    throw_validation("bad stratify_by");
}

StratifyBy stratify_by_from_string(const std::string& s) {
    if (s == "pathology_label") return StratifyBy::pathology_label;
    if (s == "anatomical_site") return StratifyBy::anatomical_site;
    throw_validation("unknown stratify_by: " + s);
}

std::vector<ingest::RegionRecord> sample_regions(const ingest::ImageRecord& rec,
                                                 const SamplingPolicy& policy) {
    if (policy.max_regions < 1) throw_config("max_regions must be >= 1");
    const auto& regions = rec.regions;
    if (static_cast<int>(regions.size()) <= policy.max_regions) return regions;

    auto stratum_of = [&](const ingest::RegionRecord& r) -> std::string {
        if (policy.stratify_by == StratifyBy::pathology_label)
            return r.pathology_labels.empty() ? "" : *r.pathology_labels.begin();
        return r.anatomical_site.value_or("");
    };

    // lexicographic stratum order; indices within a stratum keep input order
    // until the seeded shuffle
    std::map<std::string, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < regions.size(); ++i)
        strata[stratum_of(regions[i])].push_back(i);

    Rng rng(policy.seed);
    for (auto& [_, members] : strata) rng.shuffle(members);

    std::vector<std::size_t> chosen;
    std::map<std::string, std::size_t> cursor;
    while (chosen.size() < static_cast<std::size_t>(policy.max_regions)) {
        bool progressed = false;
        for (auto& [name, members] : strata) {
            auto& at = cursor[name];
            if (at >= members.size()) continue;
            chosen.push_back(members[at++]);
            progressed = true;
            if (chosen.size() == static_cast<std::size_t>(policy.max_regions)) break;
        }
        if (!progressed) break;  // defensive; cannot happen while chosen < |regions|
    }

    std::sort(chosen.begin(), chosen.end());
    std::vector<ingest::RegionRecord> out;
    out.reserve(chosen.size());
    for (std::size_t i : chosen) out.push_back(regions[i]);
    return out;
}

}  // namespace medcap::sampler
