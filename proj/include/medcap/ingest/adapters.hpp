#pragma once

#include <filesystem>
#include <optional>

#include "medcap/ingest/manifest.hpp"

namespace medcap::ingest {

struct AdaptResult {
    Manifest manifest;
    ValidationReport report;
};

/// VinDr-CXR annotation table: header row, then
/// image_id,class_name,x_min,y_min,x_max,y_max[,anatomical_site].
/// "No finding" rows yield an ImageRecord with zero regions. Bad rows land in
/// the report; they never abort the ingest.
AdaptResult adapt_vindr(const std::filesystem::path& annotation_table,
                        const std::filesystem::path& image_dir,
                        const Vocabulary* vocab = nullptr);

/// LIDC-IDRI pre-exported listing (JSON): scans with slice images and
/// per-radiologist, per-slice nodule masks. Emits one VolumeRecord per scan
/// with nodules plus placeholder ImageRecords for every annotated slice;
/// bbox derivation happens later in the sampler. A mask whose extent differs
/// from its slice is a hard error naming the scan.
AdaptResult adapt_lidc(const std::filesystem::path& scan_listing,
                       const std::filesystem::path& image_dir);

/// SkinCon concept table: header row `image_id,<concept>,...`; cells are
/// present/absent/unknown (1/0/blank also accepted). Regions stay empty here;
/// roi-detector fills them in.
AdaptResult adapt_skincon(const std::filesystem::path& image_dir,
                          const std::filesystem::path& concept_table,
                          const Vocabulary* vocab = nullptr);

/// Invariant audit: unique ids, relative refs, positive extents, in-bounds
/// boxes, volume cross-references. With base_dir set, also verifies that
/// mask_refs resolve and match their image extent.
ValidationReport validate_manifest(const Manifest& m,
                                   const std::optional<std::filesystem::path>& base_dir = {},
                                   const Vocabulary* vocab = nullptr);

}  // namespace medcap::ingest
