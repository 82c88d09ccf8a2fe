#include "medcap/core/types.hpp"

#include <algorithm>
#include <cctype>

#include "medcap/core/error.hpp"

namespace medcap {

double iou(const BBox& a, const BBox& b) {
    const int ix0 = std::max(a.x0, b.x0);
    const int iy0 = std::max(a.y0, b.y0);
    const int ix1 = std::min(a.x1, b.x1);
    const int iy1 = std::min(a.y1, b.y1);
    if (ix0 > ix1 || iy0 > iy1) return 0.0;
    const double inter = static_cast<double>(ix1 - ix0 + 1) * (iy1 - iy0 + 1);
    const double uni = static_cast<double>(a.area()) + static_cast<double>(b.area()) - inter;
    return inter / uni;
}

std::string to_string(DatasetId id) {
    switch (id) {
        case DatasetId::vindr_cxr: return "vindr_cxr";
        case DatasetId::lidc_idri: return "lidc_idri";
        case DatasetId::skincon: return "skincon";
        case DatasetId::custom: return "custom";
    }
    return "custom";
}

std::string to_string(Modality m) {
    switch (m) {
        case Modality::cxr: return "cxr";
        case Modality::ct_slice: return "ct_slice";
        case Modality::photo: return "photo";
    }
    return "photo";
}

std::string to_string(AttrState s) {
    switch (s) {
        case AttrState::present: return "present";
        case AttrState::absent: return "absent";
        case AttrState::unknown: return "unknown";
    }
    return "unknown";
}

DatasetId dataset_id_from_string(const std::string& s) {
    if (s == "vindr_cxr") return DatasetId::vindr_cxr;
    if (s == "lidc_idri") return DatasetId::lidc_idri;
    if (s == "skincon") return DatasetId::skincon;
    if (s == "custom") return DatasetId::custom;
    throw_validation("unknown dataset id: " + s);
}

Modality modality_from_string(const std::string& s) {
    if (s == "cxr") return Modality::cxr;
    if (s == "ct_slice") return Modality::ct_slice;
    if (s == "photo") return Modality::photo;
    throw_validation("unknown modality: " + s);
}

AttrState attr_state_from_string(const std::string& s) {
    if (s == "present") return AttrState::present;
    if (s == "absent") return AttrState::absent;
    if (s == "unknown") return AttrState::unknown;
    throw_validation("unknown attribute state: " + s);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string normalize_key(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

}  // namespace medcap
