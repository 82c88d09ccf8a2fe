#include "medcap/sampler/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "medcap/core/error.hpp"
#include "medcap/core/jsonl.hpp"

namespace medcap::sampler {

BBox mask_to_bbox(const Image& mask) {
    int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            bool set = false;
            for (int c = 0; c < mask.channels; ++c) set |= mask.at(x, y, c) != 0;
            if (!set) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) throw_validation("empty mask");
    return BBox{x0, y0, x1, y1};
}

BBox expand_bbox(const BBox& b, double margin, int image_w, int image_h) {
    if (margin < 0) throw_validation("negative margin");
    if (!b.within(image_w, image_h)) throw_validation("bbox outside image extent");
    const int dx = static_cast<int>(std::floor(margin * b.width() * 0.5));
    const int dy = static_cast<int>(std::floor(margin * b.height() * 0.5));
    BBox out{b.x0 - dx, b.y0 - dy, b.x1 + dx, b.y1 + dy};
    out.x0 = std::max(out.x0, 0);
    out.y0 = std::max(out.y0, 0);
    out.x1 = std::min(out.x1, image_w - 1);
    out.y1 = std::min(out.y1, image_h - 1);
    return out;
}

Letterboxed letterbox_resize(const Image& crop, int target_size, std::uint8_t pad_value,
                             Interp interp) {
    if (crop.empty()) throw_validation("zero-sized crop");
    if (target_size <= 0) throw_validation("target size must be positive");
    const int S = target_size;
    const int longest = std::max(crop.width, crop.height);
    const double scale = static_cast<double>(S) / longest;
    const int content_w = std::max(1, static_cast<int>(std::lround(crop.width * scale)));
    const int content_h = std::max(1, static_cast<int>(std::lround(crop.height * scale)));

    Image content = interp == Interp::bilinear ? resize_bilinear(crop, content_w, content_h)
                                               : resize_nearest(crop, content_w, content_h);

    Letterboxed out;
    out.transform.scale = scale;
    out.transform.pad_left = (S - content_w) / 2;
    out.transform.pad_top = (S - content_h) / 2;
    out.transform.content_w = content_w;
    out.transform.content_h = content_h;
    out.image = Image::make(S, S, crop.channels, pad_value);
    for (int y = 0; y < content_h; ++y)
        for (int x = 0; x < content_w; ++x)
            for (int c = 0; c < crop.channels; ++c)
                out.image.at(x + out.transform.pad_left, y + out.transform.pad_top, c) =
                    content.at(x, y, c);
    return out;
}

GeometryConfig load_geometry_config(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    GeometryConfig cfg;
    for (const auto& [key, val] : j.items()) {
        DatasetGeometry g;
        g.margin = val.value("margin", 0.0);
        g.target_size = val.value("target_size", 512);
        g.pad_value = static_cast<std::uint8_t>(val.value("pad_value", 0));
        if (g.margin < 0) throw_config(path.string() + ": negative margin for " + key);
        if (g.target_size <= 0) throw_config(path.string() + ": bad target_size for " + key);
        cfg[dataset_id_from_string(key)] = g;
    }
    return cfg;
}

const DatasetGeometry& geometry_for(const GeometryConfig& cfg, DatasetId dataset) {
    auto it = cfg.find(dataset);
    if (it == cfg.end())
        throw_config("no geometry configured for dataset " + to_string(dataset));
    return it->second;
}

}  // namespace medcap::sampler
