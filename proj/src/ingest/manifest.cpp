#include "medcap/ingest/manifest.hpp"

#include <algorithm>

#include "medcap/core/error.hpp"

namespace medcap::ingest {
namespace {

// Known-key bookkeeping: parse copies the raw object into `extra` and strips
// the keys it consumed; serialize starts from `extra` and writes known keys
// on top. Round trips keep fields we do not understand.
json take_extra(const json& j, std::initializer_list<const char*> known) {
    json extra = j;
    for (const char* k : known) extra.erase(k);
    extra.erase("type");
    return extra;
}

json attrs_to_json(const AttributeMap& attrs) {
    json out = json::object();
    for (const auto& [name, state] : attrs) out[name] = to_string(state);
    return out;
}

AttributeMap attrs_from_json(const json& j, const std::string& where) {
    AttributeMap out;
    if (j.is_null()) return out;
    if (!j.is_object()) throw_validation(where + ": attributes must be an object");
    for (const auto& [name, val] : j.items()) {
        if (!val.is_string())
            throw_validation(where + ": attribute '" + name + "' state must be a string");
        out[name] = attr_state_from_string(val.get<std::string>());
    }
    return out;
}

json bbox_to_json(const BBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

BBox bbox_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4)
        throw_validation(where + ": bbox must be [x0,y0,x1,y1]");
    return BBox{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<T>();
}

std::string require_string(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw_validation(where + ": missing string field '" + key + "'");
    return it->get<std::string>();
}

}  // namespace

json RegionRecord::to_json() const {
    json j = extra;
    j["region_id"] = region_id;
    j["bbox"] = bbox_to_json(bbox);
    if (mask_ref) j["mask_ref"] = *mask_ref;
    j["pathology_labels"] = pathology_labels;
    j["attributes"] = attrs_to_json(attributes);
    if (anatomical_site) j["anatomical_site"] = *anatomical_site;
    return j;
}

RegionRecord RegionRecord::from_json(const json& j) {
    RegionRecord r;
    r.region_id = require_string(j, "region_id", "region");
    const std::string where = "region " + r.region_id;
    r.bbox = bbox_from_json(j.value("bbox", json()), where);
    if (j.contains("mask_ref") && !j["mask_ref"].is_null())
        r.mask_ref = j["mask_ref"].get<std::string>();
    if (j.contains("pathology_labels"))
        r.pathology_labels = j["pathology_labels"].get<std::set<std::string>>();
    r.attributes = attrs_from_json(j.value("attributes", json()), where);
    if (j.contains("anatomical_site") && !j["anatomical_site"].is_null())
        r.anatomical_site = j["anatomical_site"].get<std::string>();
    r.extra = take_extra(j, {"region_id", "bbox", "mask_ref", "pathology_labels",
                             "attributes", "anatomical_site"});
    return r;
}

json ImageRecord::to_json() const {
    json j = extra;
    j["type"] = "image";
    j["image_id"] = image_id;
    j["image_ref"] = image_ref;
    j["modality"] = to_string(modality);
    j["width"] = width;
    j["height"] = height;
    json regs = json::array();
    for (const auto& r : regions) regs.push_back(r.to_json());
    j["regions"] = std::move(regs);
    if (volume_ref) j["volume_ref"] = *volume_ref;
    if (!attributes.empty()) j["attributes"] = attrs_to_json(attributes);
    return j;
}

ImageRecord ImageRecord::from_json(const json& j) {
    ImageRecord r;
    r.image_id = require_string(j, "image_id", "image record");
    const std::string where = "image " + r.image_id;
    r.image_ref = require_string(j, "image_ref", where);
    r.modality = modality_from_string(require_string(j, "modality", where));
    r.width = get_or<int>(j, "width", 0);
    r.height = get_or<int>(j, "height", 0);
    if (j.contains("regions")) {
        if (!j["regions"].is_array()) throw_validation(where + ": regions must be an array");
        for (const auto& rj : j["regions"]) r.regions.push_back(RegionRecord::from_json(rj));
    }
    if (j.contains("volume_ref") && !j["volume_ref"].is_null())
        r.volume_ref = j["volume_ref"].get<std::string>();
    r.attributes = attrs_from_json(j.value("attributes", json()), where);
    r.extra = take_extra(j, {"image_id", "image_ref", "modality", "width", "height",
                             "regions", "volume_ref", "attributes"});
    return r;
}

json VolumeRecord::to_json() const {
    json j = extra;
    j["type"] = "volume";
    j["scan_id"] = scan_id;
    j["slice_count"] = slice_count;
    json anns = json::array();
    for (const auto& a : annotations) {
        json aj = a.extra;
        aj["radiologist_id"] = a.radiologist_id;
        aj["nodule_id"] = a.nodule_id;
        json masks = json::object();
        for (const auto& [slice, ref] : a.slice_masks) masks[std::to_string(slice)] = ref;
        aj["slice_masks"] = std::move(masks);
        anns.push_back(std::move(aj));
    }
    j["annotations"] = std::move(anns);
    json nattrs = json::object();
    for (const auto& [nodule, attrs] : nodule_attributes) nattrs[nodule] = attrs_to_json(attrs);
    j["nodule_attributes"] = std::move(nattrs);
    return j;
}

VolumeRecord VolumeRecord::from_json(const json& j) {
    VolumeRecord v;
    v.scan_id = require_string(j, "scan_id", "volume record");
    const std::string where = "scan " + v.scan_id;
    v.slice_count = get_or<int>(j, "slice_count", 0);
    if (j.contains("annotations")) {
        for (const auto& aj : j["annotations"]) {
            VolumeAnnotation a;
            a.radiologist_id = require_string(aj, "radiologist_id", where);
            a.nodule_id = require_string(aj, "nodule_id", where);
            if (aj.contains("slice_masks")) {
                for (const auto& [key, val] : aj["slice_masks"].items()) {
                    size_t pos = 0;
                    int slice = 0;
                    try {
                        slice = std::stoi(key, &pos);
                    } catch (const std::exception&) {
                        pos = 0;
                    }
                    if (pos != key.size() || slice < 0)
                        throw_validation(where + ": bad slice index '" + key + "'");
                    a.slice_masks[slice] = val.get<std::string>();
                }
            }
            a.extra = take_extra(aj, {"radiologist_id", "nodule_id", "slice_masks"});
            v.annotations.push_back(std::move(a));
        }
    }
    if (j.contains("nodule_attributes")) {
        for (const auto& [nodule, attrs] : j["nodule_attributes"].items())
            v.nodule_attributes[nodule] = attrs_from_json(attrs, where + " nodule " + nodule);
    }
    v.extra = take_extra(j, {"scan_id", "slice_count", "annotations", "nodule_attributes"});
    return v;
}

std::set<std::string> VolumeRecord::nodule_ids() const {
    std::set<std::string> ids;
    for (const auto& a : annotations) ids.insert(a.nodule_id);
    return ids;
}

const ImageRecord* Manifest::find_image(const std::string& image_id) const {
    for (const auto& r : records)
        if (r.image_id == image_id) return &r;
    return nullptr;
}

const VolumeRecord* Manifest::find_volume(const std::string& scan_id) const {
    for (const auto& v : volumes)
        if (v.scan_id == scan_id) return &v;
    return nullptr;
}

std::string serialize_manifest(const Manifest& m) {
    std::vector<json> lines;
    lines.reserve(1 + m.volumes.size() + m.records.size());
    json header = m.header_extra;
    header["type"] = "header";
    header["dataset_id"] = to_string(m.dataset_id);
    header["schema_version"] = m.schema_version;
    header["image_root"] = m.image_root;
    lines.push_back(std::move(header));
    for (const auto& v : m.volumes) lines.push_back(v.to_json());
    for (const auto& r : m.records) lines.push_back(r.to_json());
    std::string out;
    for (const auto& l : lines) {
        out += canonical_dump(l);
        out += '\n';
    }
    return out;
}

Manifest parse_manifest(const std::string& text, const std::string& origin) {
    auto lines = parse_jsonl(text, origin);
    if (lines.empty()) throw_validation(origin + ": empty manifest");
    const json& header = lines.front();
    if (header.value("type", "") != "header")
        throw_validation(origin + ": first line must be the manifest header");
    Manifest m;
    m.dataset_id = dataset_id_from_string(require_string(header, "dataset_id", "header"));
    m.schema_version = get_or<int>(header, "schema_version", 0);
    if (m.schema_version != 1)
        throw_validation(origin + ": unsupported schema_version " +
                         std::to_string(m.schema_version));
    m.image_root = get_or<std::string>(header, "image_root", ".");
    m.header_extra = take_extra(header, {"dataset_id", "schema_version", "image_root"});
    for (size_t i = 1; i < lines.size(); ++i) {
        const json& j = lines[i];
        const std::string kind = j.value("type", "");
        if (kind == "image") {
            m.records.push_back(ImageRecord::from_json(j));
        } else if (kind == "volume") {
            m.volumes.push_back(VolumeRecord::from_json(j));
        } else {
            throw_validation(origin + " line " + std::to_string(i + 1) +
                             ": unknown record type '" + kind + "'");
        }
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
    return parse_manifest(read_text_file(path), path.string());
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
    write_text_file(path, serialize_manifest(m));
}

std::filesystem::path resolve_ref(const std::filesystem::path& manifest_dir, const Manifest& m,
                                  const std::string& ref) {
    return (manifest_dir / m.image_root / ref).lexically_normal();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    json j = read_json_file(path);
    Vocabulary v;
    if (j.contains("pathology_labels"))
        for (const auto& l : j["pathology_labels"])
            v.pathology_labels.insert(normalize_key(l.get<std::string>()));
    if (j.contains("attributes"))
        for (const auto& a : j["attributes"])
            v.attributes.insert(normalize_key(a.get<std::string>()));
    return v;
}

bool Vocabulary::has_label(const std::string& label) const {
    return pathology_labels.count(normalize_key(label)) > 0;
}

bool Vocabulary::has_attribute(const std::string& name) const {
    return attributes.count(normalize_key(name)) > 0;
}

}  // namespace medcap::ingest
