#pragma once

#include <filesystem>
#include <map>

#include "medcap/core/image.hpp"
#include "medcap/core/types.hpp"

namespace medcap::sampler {

/// Minimal box containing every nonzero pixel; every edge touches one.
BBox mask_to_bbox(const Image& mask);

/// Grow each dimension by margin x (that dimension), half per side, then clamp
/// to the image. Growth per side is floor(margin * dim / 2): the centered
/// reading of "enlarge by a fixed margin", kept integral toward the inside so
/// a 10% margin on a 101-px box adds 5 px per side.
BBox expand_bbox(const BBox& b, double margin, int image_w, int image_h);

enum class Interp { bilinear, nearest };

struct LetterboxTransform {
    double scale = 1.0;
    int pad_left = 0;
    int pad_top = 0;
    int content_w = 0;
    int content_h = 0;
};

struct Letterboxed {
    Image image;
    LetterboxTransform transform;
};

/// Aspect-preserving resize onto an SxS canvas: scale = S / max(w, h),
/// content centered, border filled with pad_value.
Letterboxed letterbox_resize(const Image& crop, int target_size, std::uint8_t pad_value = 0,
                             Interp interp = Interp::bilinear);

/// Per-dataset geometry knobs, shipped as a data file.
struct DatasetGeometry {
    double margin = 0.0;
    int target_size = 512;
    std::uint8_t pad_value = 0;
};

using GeometryConfig = std::map<DatasetId, DatasetGeometry>;

GeometryConfig load_geometry_config(const std::filesystem::path& path);
const DatasetGeometry& geometry_for(const GeometryConfig& cfg, DatasetId dataset);

}  // namespace medcap::sampler
