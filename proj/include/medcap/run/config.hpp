#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "medcap/core/jsonl.hpp"
#include "medcap/core/types.hpp"
#include "medcap/sampler/sampling.hpp"

namespace medcap::run {

enum class SourceKind { vindr, lidc, skincon, manifest };

SourceKind source_kind_from_string(const std::string& s);

/// One dataset entry. Paths are kept as written and resolved against the
/// config file's directory, so a relocated tree keeps the same config digest.
struct DatasetSource {
    DatasetId id = DatasetId::vindr_cxr;
    SourceKind kind = SourceKind::manifest;
    std::string table;      // vindr / skincon annotation CSV
    std::string listing;    // lidc scan listing JSON
    std::string image_dir;  // vindr / lidc / skincon
    std::string manifest;   // kind == manifest
    std::string vocab;      // optional vocabulary JSON
};

struct RunConfig {
    std::filesystem::path config_dir;  // directory the config was loaded from
    json raw;                          // exactly what was parsed; digested canonically

    std::uint64_t seed = 0;
    std::string output_dir;
    std::map<std::string, DatasetSource> datasets;  // keyed by dataset id string
    std::string geometry;
    std::string templates_dir;
    std::string qa_dir;
    sampler::SamplingPolicy sampling;
    int neg_per_region = 2;
    bool judge_sees_image = false;
    std::vector<json> caption_backends;  // backend spec JSON, parsed on use
    json judge_backend;
    std::optional<json> detector;           // DetectorSpec JSON
    std::set<std::string> detector_datasets;  // empty = every dataset

    static RunConfig load(const std::filesystem::path& path);
    static RunConfig from_json(const json& j, const std::filesystem::path& config_dir);

    /// sha256 of the canonical config serialization; stamps every run.
    std::string digest() const;

    std::filesystem::path resolve(const std::string& rel) const;
};

}  // namespace medcap::run
