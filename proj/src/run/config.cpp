#include "medcap/run/config.hpp"

#include "medcap/core/digest.hpp"
#include "medcap/core/error.hpp"
#include "medcap/gateway/gateway.hpp"
#include "medcap/roi/detector.hpp"

namespace medcap::run {

SourceKind source_kind_from_string(const std::string& s) {
    if (s == "vindr") return SourceKind::vindr;
    if (s == "lidc") return SourceKind::lidc;
    if (s == "skincon") return SourceKind::skincon;
    if (s == "manifest") return SourceKind::manifest;
    throw_config("unknown dataset kind '" + s + "'");
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    json j;
    try {
        j = read_json_file(path);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw_config("cannot read config " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

RunConfig RunConfig::from_json(const json& j, const std::filesystem::path& config_dir) {
    if (!j.is_object()) throw_config("run config must be a JSON object");
    RunConfig c;
    // Anchor now: resolved paths end up inside artifacts the run dir outlives
    // (manifest image_root), so they must not depend on a later cwd.
    c.config_dir = config_dir.empty() ? std::filesystem::current_path()
                                      : std::filesystem::absolute(config_dir);
    c.raw = j;

    c.seed = j.value("seed", 0ULL);
    c.output_dir = j.value("output_dir", std::string{});
    if (c.output_dir.empty()) throw_config("run config: missing output_dir");

    if (!j.contains("datasets") || !j.at("datasets").is_object() || j.at("datasets").empty())
        throw_config("run config: datasets must be a non-empty object");
    const json datasets = j.at("datasets");
    for (const auto& [name, dj] : datasets.items()) {
        DatasetSource src;
        src.id = dataset_id_from_string(name);
        src.kind = source_kind_from_string(dj.value("kind", std::string{"manifest"}));
        src.table = dj.value("table", std::string{});
        src.listing = dj.value("listing", std::string{});
        src.image_dir = dj.value("image_dir", std::string{});
        src.manifest = dj.value("manifest", std::string{});
        src.vocab = dj.value("vocab", std::string{});
        switch (src.kind) {
            case SourceKind::vindr:
            case SourceKind::skincon:
                if (src.table.empty() || src.image_dir.empty())
                    throw_config("dataset " + name + ": needs table and image_dir");
                break;
            case SourceKind::lidc:
                if (src.listing.empty() || src.image_dir.empty())
                    throw_config("dataset " + name + ": needs listing and image_dir");
                break;
            case SourceKind::manifest:
                if (src.manifest.empty())
                    throw_config("dataset " + name + ": needs manifest");
                break;
        }
        c.datasets[name] = std::move(src);
    }

    c.geometry = j.value("geometry", std::string{});
    if (c.geometry.empty()) throw_config("run config: missing geometry");
    c.templates_dir = j.value("templates_dir", std::string{});
    if (c.templates_dir.empty()) throw_config("run config: missing templates_dir");
    c.qa_dir = j.value("qa_dir", std::string{});
    if (c.qa_dir.empty()) throw_config("run config: missing qa_dir");

    if (j.contains("sampling")) {
        const json s = j.at("sampling");
        c.sampling.max_regions = s.value("max_regions", 5);
        c.sampling.stratify_by = sampler::stratify_by_from_string(
            s.value("stratify_by", std::string{"pathology_label"}));
    }
    c.sampling.seed = c.seed;
    if (c.sampling.max_regions < 1) throw_config("run config: sampling.max_regions must be >= 1");

    if (j.contains("qa")) c.neg_per_region = j.at("qa").value("neg_per_region", 2);
    if (c.neg_per_region < 0) throw_config("run config: qa.neg_per_region must be >= 0");
    c.judge_sees_image = j.value("judge_sees_image", false);

    if (!j.contains("caption_backends") || !j.at("caption_backends").is_array() ||
        j.at("caption_backends").empty())
        throw_config("run config: caption_backends must be a non-empty array");
    std::set<std::string> backend_names;
    for (const auto& b : j.at("caption_backends")) {
        const auto spec = gateway::BackendSpec::from_json(b);  // validates now
        if (!backend_names.insert(spec.name).second)
            throw_config("run config: duplicate backend name '" + spec.name + "'");
        c.caption_backends.push_back(b);
    }
    if (!j.contains("judge_backend"))
        throw_config("run config: missing judge_backend");
    c.judge_backend = j.at("judge_backend");
    gateway::BackendSpec::from_json(c.judge_backend);

    if (j.contains("detector")) {
        const json d = j.at("detector");
        c.detector = d;
        roi::DetectorSpec::from_json(d);
        if (d.contains("datasets")) {
            for (const auto& name : d.at("datasets")) {
                const std::string n = name.get<std::string>();
                if (!c.datasets.count(n))
                    throw_config("detector.datasets names unknown dataset '" + n + "'");
                c.detector_datasets.insert(n);
            }
        }
    }
    return c;
}

std::string RunConfig::digest() const { return sha256_hex(canonical_dump(raw)); }

std::filesystem::path RunConfig::resolve(const std::string& rel) const {
    std::filesystem::path p(rel);
    if (p.is_absolute()) return p.lexically_normal();
    return (config_dir / p).lexically_normal();
}

}  // namespace medcap::run
