#pragma once

#include <cstdint>
#include <vector>

#include "medcap/ingest/manifest.hpp"

namespace medcap::sampler {

enum class StratifyBy { pathology_label, anatomical_site };

std::string to_string(StratifyBy s);
StratifyBy stratify_by_from_string(const std::string& s);

struct SamplingPolicy {
    int max_regions = 5;
    std::uint64_t seed = 0;
    StratifyBy stratify_by = StratifyBy::pathology_label;
};

/// Up-to-max_regions selection. Small region lists pass through untouched;
/// larger ones are drawn round-robin across lexicographically ordered strata
/// (seeded shuffle within each stratum) so every stratum keeps representation.
/// Chosen regions come back in their original input order.
std::vector<ingest::RegionRecord> sample_regions(const ingest::ImageRecord& rec,
                                                 const SamplingPolicy& policy);

}  // namespace medcap::sampler
