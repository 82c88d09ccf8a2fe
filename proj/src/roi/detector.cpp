#include "medcap/roi/detector.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>

#include "medcap/core/error.hpp"
#include "medcap/core/image_io.hpp"

namespace medcap::roi {
namespace {

struct Lab {
    float L, a, b;
};

float srgb_to_linear(std::uint8_t v) {
    const float s = v / 255.0f;
    return s <= 0.04045f ? s / 12.92f : std::pow((s + 0.055f) / 1.055f, 2.4f);
}

Lab rgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const float r = srgb_to_linear(r8), g = srgb_to_linear(g8), b = srgb_to_linear(b8);
    // sRGB -> XYZ (D65), normalized to the white point
    float X = (0.4124564f * r + 0.3575761f * g + 0.1804375f * b) / 0.95047f;
    float Y = 0.2126729f * r + 0.7151522f * g + 0.0721750f * b;
    float Z = (0.0193339f * r + 0.1191920f * g + 0.9503041f * b) / 1.08883f;
    auto f = [](float t) {
        return t > 0.008856f ? std::cbrt(t) : (7.787f * t + 16.0f / 116.0f);
    };
    const float fx = f(X), fy = f(Y), fz = f(Z);
    return Lab{116.0f * fy - 16.0f, 500.0f * (fx - fy), 200.0f * (fy - fz)};
}

float delta_e(const Lab& p, const Lab& q) {
    const float dL = p.L - q.L, da = p.a - q.a, db = p.b - q.b;
    return std::sqrt(dL * dL + da * da + db * db);
}

float median_of(std::vector<float>& v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5f * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<BBox> detect_baseline(const Image& image, const DetectorSpec& spec) {
    const Image rgb = to_rgb(image);
    const int w = rgb.width, h = rgb.height;
    std::vector<Lab> lab(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            lab[static_cast<std::size_t>(y) * w + x] =
                rgb_to_lab(rgb.at(x, y, 0), rgb.at(x, y, 1), rgb.at(x, y, 2));

    // median tone of the border ring stands in for background skin
    const int ring = std::max(1, std::min(w, h) / 32);
    std::vector<float> Ls, as, bs;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (x >= ring && x < w - ring && y >= ring && y < h - ring) continue;
            const Lab& p = lab[static_cast<std::size_t>(y) * w + x];
            Ls.push_back(p.L);
            as.push_back(p.a);
            bs.push_back(p.b);
        }
    }
    if (Ls.empty())
        for (const Lab& p : lab) {
            Ls.push_back(p.L);
            as.push_back(p.a);
            bs.push_back(p.b);
        }
    const Lab tone{median_of(Ls), median_of(as), median_of(bs)};

    std::vector<std::uint8_t> fg(lab.size(), 0);
    for (std::size_t i = 0; i < lab.size(); ++i)
        fg[i] = delta_e(lab[i], tone) > spec.tau ? 1 : 0;

    // 8-connected components over the foreground map
    struct Component {
        BBox box;
        std::size_t pixels = 0;
    };
    std::vector<Component> comps;
    std::vector<std::uint8_t> seen(fg.size(), 0);
    std::deque<std::pair<int, int>> queue;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            const std::size_t i0 = static_cast<std::size_t>(y0) * w + x0;
            if (!fg[i0] || seen[i0]) continue;
            Component c{BBox{x0, y0, x0, y0}, 0};
            seen[i0] = 1;
            queue.emplace_back(x0, y0);
            while (!queue.empty()) {
                auto [x, y] = queue.front();
                queue.pop_front();
                ++c.pixels;
                c.box.x0 = std::min(c.box.x0, x);
                c.box.y0 = std::min(c.box.y0, y);
                c.box.x1 = std::max(c.box.x1, x);
                c.box.y1 = std::max(c.box.y1, y);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                        if (!fg[ni] || seen[ni]) continue;
                        seen[ni] = 1;
                        queue.emplace_back(nx, ny);
                    }
                }
            }
            if (c.pixels >= static_cast<std::size_t>(spec.min_area)) comps.push_back(c);
        }
    }

    std::sort(comps.begin(), comps.end(), [](const Component& a, const Component& b) {
        if (a.box.area() != b.box.area()) return a.box.area() > b.box.area();
        if (a.box.y0 != b.box.y0) return a.box.y0 < b.box.y0;
        return a.box.x0 < b.box.x0;
    });
    std::vector<BBox> out;
    out.reserve(comps.size());
    for (const auto& c : comps) out.push_back(c.box);
    return out;
}

std::vector<BBox> detect_external(const Image& image, const DetectorSpec& spec,
                                  const std::filesystem::path& image_path) {
    if (!spec.external_command || spec.external_command->empty())
        throw_config("external detector requires a command");
    if (image_path.empty())
        throw_config("external detector requires the image path on disk");

    const auto err_file =
        std::filesystem::temp_directory_path() /
        ("medcap_det_" + std::to_string(::getpid()) + "_" +
         std::to_string(reinterpret_cast<std::uintptr_t>(&image)) + ".err");
    const std::string cmd = *spec.external_command + " '" + image_path.string() + "' 2>'" +
                            err_file.string() + "'";
    std::string stdout_text;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw_backend("cannot launch detector: " + cmd);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) stdout_text.append(buf, n);
    const int rc = ::pclose(pipe);

    std::string stderr_text;
    {
        std::error_code ec;
        if (std::filesystem::exists(err_file, ec)) {
            std::ifstream ef(err_file);
            std::ostringstream ss;
            ss << ef.rdbuf();
            stderr_text = ss.str();
            std::filesystem::remove(err_file, ec);
        }
    }
    if (rc != 0)
        throw_backend("detector command failed (exit " + std::to_string(rc) +
                      "): " + stderr_text);

    std::vector<BBox> out;
    std::istringstream lines(stdout_text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::istringstream parts(line);
        BBox b;
        if (!(parts >> b.x0 >> b.y0 >> b.x1 >> b.y1))
            throw_backend("detector output not 'x0 y0 x1 y1': " + line);
        if (!b.valid() || !b.within(image.width, image.height))
            throw_backend("detector box outside image: " + line);
        out.push_back(b);
    }
    std::sort(out.begin(), out.end(), [](const BBox& a, const BBox& b) {
        if (a.area() != b.area()) return a.area() > b.area();
        if (a.y0 != b.y0) return a.y0 < b.y0;
        return a.x0 < b.x0;
    });
    return out;
}

}  // namespace

DetectorSpec DetectorSpec::from_json(const json& j) {
    DetectorSpec spec;
    const std::string kind = j.value("kind", "baseline_color_blob");
    if (kind == "baseline_color_blob") {
        spec.kind = DetectorKind::baseline_color_blob;
    } else if (kind == "external") {
        spec.kind = DetectorKind::external;
    } else {
        throw_config("unknown detector kind: " + kind);
    }
    if (j.contains("params")) {
        spec.tau = j["params"].value("tau", spec.tau);
        spec.min_area = j["params"].value("min_area", spec.min_area);
    }
    if (j.contains("external_command") && !j["external_command"].is_null())
        spec.external_command = j["external_command"].get<std::string>();
    if (spec.kind == DetectorKind::external && !spec.external_command)
        throw_config("external detector requires external_command");
    if (spec.tau <= 0 || spec.min_area < 1) throw_config("bad detector params");
    return spec;
}

json DetectorSpec::to_json() const {
    json j;
    j["kind"] = kind == DetectorKind::external ? "external" : "baseline_color_blob";
    j["params"] = {{"tau", tau}, {"min_area", min_area}};
    if (external_command) j["external_command"] = *external_command;
    return j;
}

std::vector<BBox> detect_lesions(const Image& image, const DetectorSpec& spec,
                                 const std::filesystem::path& image_path) {
    if (image.empty()) throw_validation("empty image");
    return spec.kind == DetectorKind::external ? detect_external(image, spec, image_path)
                                               : detect_baseline(image, spec);
}

ingest::Manifest attach_regions(const ingest::Manifest& m, const DetectorSpec& spec,
                                const std::filesystem::path& manifest_dir,
                                ValidationReport& report) {
    ingest::Manifest out = m;
    for (auto& rec : out.records) {
        if (!rec.regions.empty()) continue;
        if (rec.volume_ref) continue;  // LIDC placeholders are the sampler's job
        const auto path = ingest::resolve_ref(manifest_dir, out, rec.image_ref);
        std::vector<BBox> boxes;
        try {
            boxes = detect_lesions(load_image(path), spec, path);
        } catch (const Error& e) {
            report.add(rec.image_id, std::string("detector failed: ") + e.what());
            continue;
        }
        if (boxes.empty()) {
            report.add(rec.image_id, "no ROI");
            continue;
        }
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            ingest::RegionRecord region;
            region.region_id = rec.image_id + ":roi" + std::to_string(i);
            region.bbox = boxes[i];
            region.attributes = rec.attributes;
            rec.regions.push_back(std::move(region));
        }
    }
    return out;
}

}  // namespace medcap::roi
