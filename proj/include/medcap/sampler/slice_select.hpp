#pragma once

#include <functional>
#include <string>

#include "medcap/core/image.hpp"
#include "medcap/ingest/manifest.hpp"

namespace medcap::sampler {

enum class TiebreakReason { unique_max, area, lowest_index };

std::string to_string(TiebreakReason r);

struct SliceSelection {
    std::string scan_id;
    std::string nodule_id;
    int slice_index = -1;
    int agreement = 0;
    TiebreakReason tiebreak_reason = TiebreakReason::unique_max;
};

/// Resolves a mask_ref into pixels; injected so selection logic stays pure.
using MaskLoader = std::function<Image(const std::string& ref)>;

/// The slice where the most radiologists drew a nonzero mask for the nodule;
/// ties go to the largest union mask area, then the lowest slice index.
SliceSelection select_slice(const ingest::VolumeRecord& vol, const std::string& nodule_id,
                            const MaskLoader& load);

/// Pixel-wise union of every radiologist's mask for the nodule on one slice.
Image union_mask_for_slice(const ingest::VolumeRecord& vol, const std::string& nodule_id,
                           int slice_index, const MaskLoader& load);

}  // namespace medcap::sampler
