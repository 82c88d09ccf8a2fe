#pragma once

#include <optional>

#include "medcap/ingest/manifest.hpp"
#include "medcap/sampler/geometry.hpp"
#include "medcap/sampler/slice_select.hpp"

namespace medcap::sampler {

struct FocalTransform {
    double scale = 1.0;
    int pad_left = 0;
    int pad_top = 0;
    BBox expanded_bbox;
};

/// The unit shipped to a captioning backend: the untouched full image, a
/// letterboxed high-resolution crop of the (expanded) region, and a binary
/// mask aligned to the full image.
struct FocalInput {
    std::string image_ref;
    std::string region_id;
    Image full_image;
    Image crop;
    Image mask;
    FocalTransform transform;
};

/// region_mask, when given, must match the full image extent; without one the
/// mask is the expanded bbox filled solid.
FocalInput build_focal_input(const Image& full, const ingest::RegionRecord& region,
                             const Image* region_mask, const DatasetGeometry& geo);

/// One synthesized LIDC region: the consensus slice for a nodule plus the
/// radiologists' union mask and its tight box.
struct LidcRegionDraft {
    std::string image_id;  // scan:sN candidate slice
    std::string nodule_id;
    SliceSelection selection;
    Image union_mask;
    BBox bbox;
    AttributeMap attributes;
};

/// Walk every volume and nodule (sorted nodule ids) and pick its slice.
/// The caller attaches the drafts to the manifest's placeholder slice images.
std::vector<LidcRegionDraft> synthesize_lidc_regions(const ingest::Manifest& m,
                                                     const MaskLoader& load);

}  // namespace medcap::sampler
