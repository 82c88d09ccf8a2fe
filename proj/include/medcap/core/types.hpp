#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace medcap {

/// Inclusive pixel-coordinate box: (x1, y1) is the last pixel inside the box.
struct BBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
    std::int64_t area() const { return static_cast<std::int64_t>(width()) * height(); }
    bool valid() const { return x0 <= x1 && y0 <= y1; }
    bool contains(const BBox& other) const {
        return x0 <= other.x0 && y0 <= other.y0 && x1 >= other.x1 && y1 >= other.y1;
    }
    bool within(int image_w, int image_h) const {
        return valid() && x0 >= 0 && y0 >= 0 && x1 < image_w && y1 < image_h;
    }
    bool operator==(const BBox&) const = default;
};

double iou(const BBox& a, const BBox& b);

enum class DatasetId { vindr_cxr, lidc_idri, skincon, custom };
enum class Modality { cxr, ct_slice, photo };
enum class AttrState { present, absent, unknown };

std::string to_string(DatasetId id);
std::string to_string(Modality m);
std::string to_string(AttrState s);
DatasetId dataset_id_from_string(const std::string& s);
Modality modality_from_string(const std::string& s);
AttrState attr_state_from_string(const std::string& s);

using AttributeMap = std::map<std::string, AttrState>;

/// Record-level problem log. Adapters collect per-record errors here instead
/// of throwing, so one bad row never aborts an ingest.
struct ValidationEntry {
    std::string record_id;
    std::string reason;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;

    bool ok() const { return entries.empty(); }
    void add(std::string record_id, std::string reason) {
        entries.push_back({std::move(record_id), std::move(reason)});
    }
    void merge(const ValidationReport& other) {
        entries.insert(entries.end(), other.entries.begin(), other.entries.end());
    }
};

std::uint64_t fnv1a64(std::string_view s);

/// Lowercase + collapse runs of whitespace; attribute and label keys are
/// matched in this form everywhere.
std::string normalize_key(std::string_view s);

}  // namespace medcap
