#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "medcap/core/image.hpp"
#include "medcap/ingest/manifest.hpp"

namespace medcap::roi {

enum class DetectorKind { baseline_color_blob, external };

struct DetectorSpec {
    DetectorKind kind = DetectorKind::baseline_color_blob;
    double tau = 12.0;      // Lab distance threshold against border tone
    int min_area = 64;      // pixels per surviving component
    std::optional<std::string> external_command;

    static DetectorSpec from_json(const json& j);
    json to_json() const;
};

/// Boxes sorted by area descending (ties: y0, then x0), always within image
/// bounds. The baseline thresholds a color-difference map against the median
/// border-ring tone and keeps 8-connected components of at least min_area.
/// The external protocol runs `command <image_path>` and reads one
/// `x0 y0 x1 y1` line per box; a nonzero exit is an error carrying stderr.
std::vector<BBox> detect_lesions(const Image& image, const DetectorSpec& spec,
                                 const std::filesystem::path& image_path = {});

/// Fill regions for region-less records; existing regions are untouched.
/// Detected boxes inherit the record's image-level attribute map. Detector
/// failures and empty detections land in the report, never abort the pass.
ingest::Manifest attach_regions(const ingest::Manifest& m, const DetectorSpec& spec,
                                const std::filesystem::path& manifest_dir,
                                ValidationReport& report);

}  // namespace medcap::roi
