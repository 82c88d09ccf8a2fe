#include "medcap/ingest/adapters.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include "medcap/core/csv.hpp"
#include "medcap/core/error.hpp"
#include "medcap/core/image_io.hpp"

namespace medcap::ingest {
namespace {

std::optional<int> parse_int(const std::string& s) {
    std::string t = s;
    // tolerate surrounding whitespace
    while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.erase(t.begin());
    while (!t.empty() && (t.back() == ' ' || t.back() == '\t')) t.pop_back();
    if (t.empty()) return std::nullopt;
    int v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

/// Locate an image file for a bare id: as-is first, then common extensions.
std::optional<std::string> find_image_file(const std::filesystem::path& dir,
                                           const std::string& image_id) {
    if (std::filesystem::exists(dir / image_id)) return image_id;
    for (const char* ext : {".png", ".jpg", ".jpeg", ".bmp", ".tif"}) {
        std::string candidate = image_id + ext;
        if (std::filesystem::exists(dir / candidate)) return candidate;
    }
    return std::nullopt;
}

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (normalize_key(header[i]) == name) return i;
    return std::nullopt;
}

std::vector<std::string> split_findings(const std::string& cell) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= cell.size()) {
        std::size_t end = cell.find(';', start);
        if (end == std::string::npos) end = cell.size();
        std::size_t a = start, b = end;
        while (a < b && std::isspace((unsigned char)cell[a])) ++a;
        while (b > a && std::isspace((unsigned char)cell[b - 1])) --b;
        if (b > a) out.push_back(cell.substr(a, b - a));
        if (end == cell.size()) break;
        start = end + 1;
    }
    return out;
}

}  // namespace

AdaptResult adapt_vindr(const std::filesystem::path& annotation_table,
                        const std::filesystem::path& image_dir, const Vocabulary* vocab) {
    AdaptResult out;
    out.manifest.dataset_id = DatasetId::vindr_cxr;
    out.manifest.image_root = image_dir.string();

    const auto rows = read_csv(annotation_table);
    if (rows.empty()) return out;

    const auto& header = rows.front().fields;
    std::map<std::string, std::size_t> cols;
    for (const char* required :
         {"image_id", "class_name", "x_min", "y_min", "x_max", "y_max"}) {
        auto idx = find_column(header, required);
        if (!idx) {
            out.report.add("<header>", std::string("missing required column ") + required);
            return out;
        }
        cols[required] = *idx;
    }
    const auto site_col = find_column(header, "anatomical_site");
    const auto present_col = find_column(header, "present_findings");
    const auto absent_col = find_column(header, "absent_findings");

    // group rows by image id, first-seen order
    std::vector<std::string> image_order;
    std::map<std::string, std::vector<const CsvRow*>> by_image;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const CsvRow& row = rows[i];
        if (row.fields.size() <= cols["image_id"] || row.fields[cols["image_id"]].empty()) {
            out.report.add(annotation_table.string() + ":" + std::to_string(row.line_no),
                           "malformed row: no image id");
            continue;
        }
        const std::string& id = row.fields[cols["image_id"]];
        if (!by_image.count(id)) image_order.push_back(id);
        by_image[id].push_back(&row);
    }

    for (const auto& image_id : image_order) {
        auto ref = find_image_file(image_dir, image_id);
        if (!ref) {
            out.report.add(image_id, "missing image");
            continue;
        }
        Image pixels;
        try {
            pixels = load_image(image_dir / *ref);
        } catch (const Error& e) {
            out.report.add(image_id, std::string("unreadable image: ") + e.what());
            continue;
        }

        ImageRecord rec;
        rec.image_id = image_id;
        rec.image_ref = *ref;
        rec.modality = Modality::cxr;
        rec.width = pixels.width;
        rec.height = pixels.height;

        std::size_t next_region = 0;
        for (const CsvRow* rowp : by_image[image_id]) {
            const auto& f = rowp->fields;
            const std::string row_id = image_id + " line " + std::to_string(rowp->line_no);
            std::size_t needed = cols["y_max"] + 1;
            for (const auto& [_, c] : cols) needed = std::max(needed, c + 1);
            if (f.size() < needed) {
                out.report.add(row_id, "malformed row: too few columns");
                continue;
            }
            const std::string label = f[cols["class_name"]];
            if (normalize_key(label) == "no finding") continue;  // zero-region image

            auto x0 = parse_int(f[cols["x_min"]]), y0 = parse_int(f[cols["y_min"]]);
            auto x1 = parse_int(f[cols["x_max"]]), y1 = parse_int(f[cols["y_max"]]);
            if (!x0 || !y0 || !x1 || !y1) {
                out.report.add(row_id, "malformed row: bad coordinate");
                continue;
            }
            BBox box{*x0, *y0, *x1, *y1};
            if (!box.valid()) {
                out.report.add(row_id, "degenerate bbox");
                continue;
            }
            if (!box.within(rec.width, rec.height)) {
                out.report.add(row_id, "out of bounds bbox");
                continue;
            }
            if (vocab && !vocab->has_label(label)) {
                out.report.add(row_id, "unknown label: " + label);
                continue;
            }
            RegionRecord region;
            region.region_id = image_id + ":r" + std::to_string(next_region++);
            region.bbox = box;
            region.pathology_labels.insert(label);
            if (site_col && f.size() > *site_col && !f[*site_col].empty())
                region.anatomical_site = f[*site_col];
            // Optional semicolon-separated attribute columns; negatives need
            // explicit absence, which boxes alone cannot express.
            if (present_col && f.size() > *present_col)
                for (const auto& name : split_findings(f[*present_col]))
                    region.attributes[name] = AttrState::present;
            if (absent_col && f.size() > *absent_col)
                for (const auto& name : split_findings(f[*absent_col]))
                    region.attributes[name] = AttrState::absent;
            rec.regions.push_back(std::move(region));
        }
        out.manifest.records.push_back(std::move(rec));
    }
    return out;
}

AdaptResult adapt_lidc(const std::filesystem::path& scan_listing,
                       const std::filesystem::path& image_dir) {
    AdaptResult out;
    out.manifest.dataset_id = DatasetId::lidc_idri;
    out.manifest.image_root = image_dir.string();

    const json listing = read_json_file(scan_listing);
    if (!listing.contains("scans") || !listing["scans"].is_array())
        throw_validation(scan_listing.string() + ": listing needs a 'scans' array");

    for (const auto& scan : listing["scans"]) {
        const std::string scan_id = scan.value("scan_id", "");
        if (scan_id.empty()) throw_validation(scan_listing.string() + ": scan without scan_id");
        const int slice_count = scan.value("slice_count", 0);
        if (slice_count <= 0)
            throw_validation("scan " + scan_id + ": slice_count must be positive");

        if (!scan.contains("nodules") || scan["nodules"].empty()) {
            out.report.add(scan_id, "no nodules; scan skipped");
            continue;
        }

        std::map<int, std::string> slice_images;
        for (const auto& s : scan.value("slices", json::array())) {
            const int idx = s.value("index", -1);
            if (idx < 0 || idx >= slice_count)
                throw_validation("scan " + scan_id + ": slice index " + std::to_string(idx) +
                                 " outside [0," + std::to_string(slice_count) + ")");
            slice_images[idx] = s.value("image", "");
        }

        VolumeRecord vol;
        vol.scan_id = scan_id;
        vol.slice_count = slice_count;

        std::map<int, std::pair<int, int>> slice_dims;  // index -> (w,h), lazy
        auto dims_of_slice = [&](int idx) -> std::pair<int, int> {
            auto it = slice_dims.find(idx);
            if (it != slice_dims.end()) return it->second;
            auto img_it = slice_images.find(idx);
            if (img_it == slice_images.end() || img_it->second.empty())
                throw_validation("scan " + scan_id + ": no slice image for index " +
                                 std::to_string(idx));
            Image img;
            try {
                img = load_image(image_dir / img_it->second);
            } catch (const Error& e) {
                throw_validation("scan " + scan_id + ": " + e.what());
            }
            return slice_dims[idx] = {img.width, img.height};
        };

        std::set<int> annotated_slices;
        for (const auto& nodule : scan["nodules"]) {
            const std::string nodule_id = nodule.value("nodule_id", "");
            if (nodule_id.empty())
                throw_validation("scan " + scan_id + ": nodule without nodule_id");
            const auto& anns = nodule.value("annotations", json::array());
            if (anns.empty())
                throw_validation("scan " + scan_id + ": nodule " + nodule_id +
                                 " has no annotations");
            if (nodule.contains("attributes")) {
                AttributeMap attrs;
                for (const auto& [name, state] : nodule["attributes"].items())
                    attrs[name] = attr_state_from_string(state.get<std::string>());
                vol.nodule_attributes[nodule_id] = std::move(attrs);
            }
            for (const auto& ann : anns) {
                VolumeAnnotation a;
                a.radiologist_id = ann.value("radiologist_id", "");
                if (a.radiologist_id.empty())
                    throw_validation("scan " + scan_id + ": annotation without radiologist_id");
                a.nodule_id = nodule_id;
                const json masks = ann.value("masks", json::object());
                for (const auto& [key, ref] : masks.items()) {
                    auto idx = parse_int(key);
                    if (!idx || *idx < 0 || *idx >= slice_count)
                        throw_validation("scan " + scan_id + ": mask slice index '" + key +
                                         "' outside [0," + std::to_string(slice_count) + ")");
                    const std::string mask_ref = ref.get<std::string>();
                    Image mask;
                    try {
                        mask = load_mask(image_dir / mask_ref);
                    } catch (const Error& e) {
                        throw_validation("scan " + scan_id + ": " + e.what());
                    }
                    auto [w, h] = dims_of_slice(*idx);
                    if (mask.width != w || mask.height != h)
                        throw_validation("scan " + scan_id + ": dimension mismatch for mask " +
                                         mask_ref + " (" + std::to_string(mask.width) + "x" +
                                         std::to_string(mask.height) + " vs slice " +
                                         std::to_string(w) + "x" + std::to_string(h) + ")");
                    a.slice_masks[*idx] = mask_ref;
                    annotated_slices.insert(*idx);
                }
                vol.annotations.push_back(std::move(a));
            }
        }

        out.manifest.volumes.push_back(vol);
        for (int idx : annotated_slices) {
            ImageRecord rec;
            rec.image_id = scan_id + ":s" + std::to_string(idx);
            rec.image_ref = slice_images.at(idx);
            rec.modality = Modality::ct_slice;
            auto [w, h] = dims_of_slice(idx);
            rec.width = w;
            rec.height = h;
            rec.volume_ref = scan_id;
            out.manifest.records.push_back(std::move(rec));
        }
    }
    return out;
}

AdaptResult adapt_skincon(const std::filesystem::path& image_dir,
                          const std::filesystem::path& concept_table, const Vocabulary* vocab) {
    AdaptResult out;
    out.manifest.dataset_id = DatasetId::skincon;
    out.manifest.image_root = image_dir.string();

    const auto rows = read_csv(concept_table);
    if (rows.empty()) return out;

    const auto& header = rows.front().fields;
    auto id_col = find_column(header, "image_id");
    if (!id_col) {
        out.report.add("<header>", "missing required column image_id");
        return out;
    }
    // concept columns: everything except the id, subject to vocabulary
    std::vector<std::pair<std::size_t, std::string>> concept_cols;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i == *id_col) continue;
        if (header[i].empty()) continue;
        if (vocab && !vocab->has_attribute(header[i])) {
            out.report.add("<header>", "unknown concept: " + header[i]);
            continue;
        }
        concept_cols.emplace_back(i, header[i]);
    }

    std::set<std::string> seen;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const CsvRow& row = rows[i];
        if (row.fields.size() <= *id_col || row.fields[*id_col].empty()) {
            out.report.add(concept_table.string() + ":" + std::to_string(row.line_no),
                           "malformed row: no image id");
            continue;
        }
        const std::string image_id = row.fields[*id_col];
        if (!seen.insert(image_id).second) {
            out.report.add(image_id, "duplicate id");
            continue;
        }
        auto ref = find_image_file(image_dir, image_id);
        if (!ref) {
            out.report.add(image_id, "missing image");
            continue;
        }
        Image pixels;
        try {
            pixels = load_image(image_dir / *ref);
        } catch (const Error& e) {
            out.report.add(image_id, std::string("unreadable image: ") + e.what());
            continue;
        }

        ImageRecord rec;
        rec.image_id = image_id;
        rec.image_ref = *ref;
        rec.modality = Modality::photo;
        rec.width = pixels.width;
        rec.height = pixels.height;
        for (const auto& [col, name] : concept_cols) {
            std::string cell = col < row.fields.size() ? normalize_key(row.fields[col]) : "";
            AttrState state;
            if (cell == "1" || cell == "present" || cell == "yes" || cell == "true") {
                state = AttrState::present;
            } else if (cell == "0" || cell == "absent" || cell == "no" || cell == "false") {
                state = AttrState::absent;
            } else if (cell.empty() || cell == "?" || cell == "unknown" || cell == "na" ||
                       cell == "n/a") {
                state = AttrState::unknown;
            } else {
                out.report.add(image_id, "bad concept value for " + name + ": " + cell);
                state = AttrState::unknown;
            }
            rec.attributes[name] = state;
        }
        out.manifest.records.push_back(std::move(rec));
    }
    return out;
}

ValidationReport validate_manifest(const Manifest& m,
                                   const std::optional<std::filesystem::path>& base_dir,
                                   const Vocabulary* vocab) {
    ValidationReport report;
    if (m.schema_version != 1)
        report.add("<manifest>", "schema_version must be 1, got " +
                                     std::to_string(m.schema_version));

    std::set<std::string> image_ids, region_ids, scan_ids;
    for (const auto& v : m.volumes) {
        if (!scan_ids.insert(v.scan_id).second) report.add(v.scan_id, "duplicate id");
        const auto nodules = v.nodule_ids();
        if (nodules.empty()) report.add(v.scan_id, "volume has no annotations");
        for (const auto& a : v.annotations) {
            if (a.slice_masks.empty())
                report.add(v.scan_id + "/" + a.nodule_id, "annotation has no slice masks");
            for (const auto& [idx, ref] : a.slice_masks) {
                if (idx < 0 || idx >= v.slice_count)
                    report.add(v.scan_id + "/" + a.nodule_id,
                               "slice index out of range: " + std::to_string(idx));
                if (std::filesystem::path(ref).is_absolute())
                    report.add(v.scan_id + "/" + a.nodule_id, "absolute path: " + ref);
            }
        }
        for (const auto& [nodule, _] : v.nodule_attributes)
            if (!nodules.count(nodule))
                report.add(v.scan_id, "attributes for unknown nodule " + nodule);
    }

    for (const auto& rec : m.records) {
        if (!image_ids.insert(rec.image_id).second) report.add(rec.image_id, "duplicate id");
        if (std::filesystem::path(rec.image_ref).is_absolute())
            report.add(rec.image_id, "absolute path: " + rec.image_ref);
        if (rec.width <= 0 || rec.height <= 0) {
            report.add(rec.image_id, "bad extent");
            continue;
        }
        if (rec.volume_ref && !m.find_volume(*rec.volume_ref))
            report.add(rec.image_id, "unknown volume: " + *rec.volume_ref);
        for (const auto& region : rec.regions) {
            if (!region_ids.insert(region.region_id).second)
                report.add(region.region_id, "duplicate id");
            if (!region.bbox.valid()) {
                report.add(region.region_id, "degenerate bbox");
            } else if (!region.bbox.within(rec.width, rec.height)) {
                report.add(region.region_id, "out of bounds bbox");
            }
            if (vocab)
                for (const auto& label : region.pathology_labels)
                    if (!vocab->has_label(label))
                        report.add(region.region_id, "unknown label: " + label);
            if (region.mask_ref) {
                if (std::filesystem::path(*region.mask_ref).is_absolute())
                    report.add(region.region_id, "absolute path: " + *region.mask_ref);
                else if (base_dir) {
                    const auto p = resolve_ref(*base_dir, m, *region.mask_ref);
                    if (!std::filesystem::exists(p)) {
                        report.add(region.region_id, "missing mask: " + *region.mask_ref);
                    } else {
                        Image mask = load_mask(p);
                        if (mask.width != rec.width || mask.height != rec.height)
                            report.add(region.region_id, "mask extent mismatch");
                    }
                }
            }
        }
    }
    return report;
}

}  // namespace medcap::ingest
