#include "medcap/sampler/slice_select.hpp"

#include <map>
#include <set>

#include "medcap/core/error.hpp"

namespace medcap::sampler {

std::string to_string(TiebreakReason r) {
    switch (r) {
        case TiebreakReason::unique_max: return "unique_max";
        case TiebreakReason::area: return "area";
        case TiebreakReason::lowest_index: return "lowest_index";
    }
    throw_validation("bad tiebreak reason");
}

namespace {

// slice -> refs of nonzero masks, per distinct radiologist
struct SliceVotes {
    std::set<std::string> radiologists;
    std::vector<std::string> mask_refs;
};

std::map<int, SliceVotes> collect_votes(const ingest::VolumeRecord& vol,
                                        const std::string& nodule_id, const MaskLoader& load) {
    std::map<int, SliceVotes> votes;
    bool found = false;
    std::map<std::string, bool> nonzero_cache;
    for (const auto& ann : vol.annotations) {
        if (ann.nodule_id != nodule_id) continue;
        found = true;
        for (const auto& [slice, ref] : ann.slice_masks) {
            auto it = nonzero_cache.find(ref);
            if (it == nonzero_cache.end())
                it = nonzero_cache.emplace(ref, load(ref).count_nonzero() > 0).first;
            if (!it->second) continue;
            auto& v = votes[slice];
            v.radiologists.insert(ann.radiologist_id);
            v.mask_refs.push_back(ref);
        }
    }
    if (!found)
        throw_validation("unknown nodule " + nodule_id + " in scan " + vol.scan_id);
    return votes;
}

}  // namespace

SliceSelection select_slice(const ingest::VolumeRecord& vol, const std::string& nodule_id,
                            const MaskLoader& load) {
    const auto votes = collect_votes(vol, nodule_id, load);
    if (votes.empty())
        throw_validation("nodule " + nodule_id + " in scan " + vol.scan_id +
                         " has no nonzero mask on any slice");

    std::size_t best_agreement = 0;
    for (const auto& [_, v] : votes)
        best_agreement = std::max(best_agreement, v.radiologists.size());

    std::vector<int> candidates;
    for (const auto& [slice, v] : votes)
        if (v.radiologists.size() == best_agreement) candidates.push_back(slice);

    SliceSelection sel;
    sel.scan_id = vol.scan_id;
    sel.nodule_id = nodule_id;
    sel.agreement = static_cast<int>(best_agreement);

    if (candidates.size() == 1) {
        sel.slice_index = candidates.front();
        sel.tiebreak_reason = TiebreakReason::unique_max;
        return sel;
    }

    std::size_t best_area = 0;
    std::vector<int> by_area;
    for (int slice : candidates) {
        const std::size_t area =
            union_mask_for_slice(vol, nodule_id, slice, load).count_nonzero();
        if (area > best_area) {
            best_area = area;
            by_area = {slice};
        } else if (area == best_area) {
            by_area.push_back(slice);
        }
    }
    // candidates came from an ordered map, so by_area is ascending
    sel.slice_index = by_area.front();
    sel.tiebreak_reason =
        by_area.size() == 1 ? TiebreakReason::area : TiebreakReason::lowest_index;
    return sel;
}

Image union_mask_for_slice(const ingest::VolumeRecord& vol, const std::string& nodule_id,
                           int slice_index, const MaskLoader& load) {
    Image acc;
    for (const auto& ann : vol.annotations) {
        if (ann.nodule_id != nodule_id) continue;
        auto it = ann.slice_masks.find(slice_index);
        if (it == ann.slice_masks.end()) continue;
        Image mask = load(it->second);
        acc = acc.empty() ? mask_union(mask, mask) : mask_union(acc, mask);
    }
    if (acc.empty())
        throw_validation("nodule " + nodule_id + " has no mask on slice " +
                         std::to_string(slice_index));
    return acc;
}

}  // namespace medcap::sampler
