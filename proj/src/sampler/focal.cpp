#include "medcap/sampler/focal.hpp"

#include "medcap/core/error.hpp"

namespace medcap::sampler {

FocalInput build_focal_input(const Image& full, const ingest::RegionRecord& region,
                             const Image* region_mask, const DatasetGeometry& geo) {
    if (!region.bbox.within(full.width, full.height))
        throw_validation("region " + region.region_id + ": bbox outside image");
    if (region_mask && (region_mask->width != full.width || region_mask->height != full.height))
        throw_validation("region " + region.region_id + ": mask extent mismatch");

    FocalInput out;
    out.region_id = region.region_id;
    out.transform.expanded_bbox = expand_bbox(region.bbox, geo.margin, full.width, full.height);

    Image cropped = crop(full, out.transform.expanded_bbox);
    Letterboxed boxed = letterbox_resize(cropped, geo.target_size, geo.pad_value);
    out.transform.scale = boxed.transform.scale;
    out.transform.pad_left = boxed.transform.pad_left;
    out.transform.pad_top = boxed.transform.pad_top;
    out.crop = std::move(boxed.image);

    if (region_mask) {
        out.mask = to_gray(*region_mask);
    } else {
        out.mask = Image::make(full.width, full.height, 1, 0);
        fill_rect(out.mask, out.transform.expanded_bbox, 255);
    }
    out.full_image = full;
    return out;
}

std::vector<LidcRegionDraft> synthesize_lidc_regions(const ingest::Manifest& m,
                                                     const MaskLoader& load) {
    std::vector<LidcRegionDraft> drafts;
    for (const auto& vol : m.volumes) {
        for (const auto& nodule_id : vol.nodule_ids()) {
            LidcRegionDraft d;
            d.nodule_id = nodule_id;
            d.selection = select_slice(vol, nodule_id, load);
            d.image_id = vol.scan_id + ":s" + std::to_string(d.selection.slice_index);
            d.union_mask = union_mask_for_slice(vol, nodule_id, d.selection.slice_index, load);
            d.bbox = mask_to_bbox(d.union_mask);
            auto it = vol.nodule_attributes.find(nodule_id);
            if (it != vol.nodule_attributes.end()) d.attributes = it->second;
            drafts.push_back(std::move(d));
        }
    }
    return drafts;
}

}  // namespace medcap::sampler
