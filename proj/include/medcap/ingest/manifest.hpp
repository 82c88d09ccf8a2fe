#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "medcap/core/jsonl.hpp"
#include "medcap/core/types.hpp"

namespace medcap::ingest {

/// One diagnostically relevant region of one image. Coordinates are inclusive
/// pixels; mask_ref, when present, points at a full-extent binary mask.
struct RegionRecord {
    std::string region_id;
    BBox bbox;
    std::optional<std::string> mask_ref;
    std::set<std::string> pathology_labels;
    AttributeMap attributes;
    std::optional<std::string> anatomical_site;
    json extra = json::object();

    json to_json() const;
    static RegionRecord from_json(const json& j);
};

struct ImageRecord {
    std::string image_id;
    std::string image_ref;  // relative to manifest dir / image_root
    Modality modality = Modality::photo;
    int width = 0;
    int height = 0;
    std::vector<RegionRecord> regions;
    std::optional<std::string> volume_ref;  // scan_id, LIDC only
    AttributeMap attributes;                // image-level concepts (SkinCon)
    json extra = json::object();

    json to_json() const;
    static ImageRecord from_json(const json& j);
};

struct VolumeAnnotation {
    std::string radiologist_id;
    std::string nodule_id;
    std::map<int, std::string> slice_masks;  // slice index -> mask ref
    json extra = json::object();
};

struct VolumeRecord {
    std::string scan_id;
    int slice_count = 0;
    std::vector<VolumeAnnotation> annotations;
    std::map<std::string, AttributeMap> nodule_attributes;  // nodule id -> attribute states
    json extra = json::object();

    json to_json() const;
    static VolumeRecord from_json(const json& j);

    std::set<std::string> nodule_ids() const;
};

struct Manifest {
    DatasetId dataset_id = DatasetId::custom;
    int schema_version = 1;
    std::string image_root = ".";  // relative to the manifest file's directory
    std::vector<ImageRecord> records;
    std::vector<VolumeRecord> volumes;
    json header_extra = json::object();

    const ImageRecord* find_image(const std::string& image_id) const;
    const VolumeRecord* find_volume(const std::string& scan_id) const;
};

/// Line-delimited canonical form: header line, then volume records, then
/// image records, each one JSON object per line. Unknown fields survive a
/// parse/serialize round trip.
std::string serialize_manifest(const Manifest& m);
Manifest parse_manifest(const std::string& text, const std::string& origin = "<memory>");

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

/// Resolve an image_ref/mask_ref against the manifest's directory and its
/// image_root.
std::filesystem::path resolve_ref(const std::filesystem::path& manifest_dir, const Manifest& m,
                                  const std::string& ref);

/// Per-dataset vocabulary data file: valid pathology labels and attribute
/// names. Ships as data so new datasets need no rebuild.
struct Vocabulary {
    std::set<std::string> pathology_labels;
    std::set<std::string> attributes;

    static Vocabulary load(const std::filesystem::path& path);
    bool has_label(const std::string& label) const;
    bool has_attribute(const std::string& name) const;
};

}  // namespace medcap::ingest
