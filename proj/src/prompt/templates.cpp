#include "medcap/prompt/templates.hpp"

#include <algorithm>
#include <set>

#include "medcap/core/digest.hpp"
#include "medcap/core/error.hpp"
#include "medcap/core/jsonl.hpp"

namespace medcap::prompt {
namespace {

TemplateKind kind_from_string(const std::string& s, const std::string& origin) {
    if (s == "caption") return TemplateKind::caption;
    if (s == "judge_verification") return TemplateKind::judge_verification;
    if (s == "judge_rating") return TemplateKind::judge_rating;
    if (s == "judge_rating_retry") return TemplateKind::judge_rating_retry;
    throw_config(origin + ": unknown template kind '" + s + "'");
}

// Every {{name}} occurrence in the body, in order of appearance.
std::vector<std::string> scan_placeholders(const std::string& body) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t open = body.find("{{", pos);
        if (open == std::string::npos) break;
        size_t close = body.find("}}", open + 2);
        if (close == std::string::npos) break;
        out.push_back(body.substr(open + 2, close - open - 2));
        pos = close + 2;
    }
    return out;
}

PromptTemplate parse_template(const json& j, const std::string& origin) {
    PromptTemplate t;
    if (!j.is_object()) throw_config(origin + ": template must be a JSON object");
    if (!j.contains("template_id") || !j.at("template_id").is_string())
        throw_config(origin + ": missing template_id");
    t.template_id = j.at("template_id").get<std::string>();
    t.kind = kind_from_string(j.value("kind", std::string{"caption"}), origin);
    if (j.contains("modality")) {
        t.modality = modality_from_string(j.at("modality").get<std::string>());
    }
    t.version = j.value("version", 1);
    t.body = j.value("body", std::string{});
    if (t.body.empty()) throw_config(origin + ": template body is empty");
    for (const auto& p : j.value("placeholders", json::array()))
        t.placeholders.push_back(p.get<std::string>());
    for (const auto& c : j.value("constraints", json::array()))
        t.constraints.push_back(c.get<std::string>());

    std::set<std::string> declared(t.placeholders.begin(), t.placeholders.end());
    for (const auto& name : scan_placeholders(t.body)) {
        if (!declared.count(name))
            throw_config(origin + ": body references undeclared placeholder '" + name + "'");
    }
    for (const auto& c : t.constraints) {
        if (t.body.find(c) == std::string::npos)
            throw_config(origin + ": constraint not present verbatim in body: '" + c + "'");
    }
    if (t.kind == TemplateKind::caption && !t.modality)
        throw_config(origin + ": caption template must declare a modality");
    return t;
}

}  // namespace

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw_config("template dir not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw_config("no templates in " + dir.string());

    TemplateLibrary lib;
    std::set<std::string> ids;
    for (const auto& f : files) {
        json j = read_json_file(f);
        PromptTemplate t = parse_template(j, f.filename().string());
        if (!ids.insert(t.template_id).second)
            throw_config("duplicate template_id '" + t.template_id + "' in " + f.string());
        lib.templates_.push_back(std::move(t));
    }
    return lib;
}

const PromptTemplate* TemplateLibrary::find(const std::string& template_id) const {
    for (const auto& t : templates_)
        if (t.template_id == template_id) return &t;
    return nullptr;
}

const PromptTemplate& TemplateLibrary::caption_for(Modality m) const {
    for (const auto& t : templates_)
        if (t.kind == TemplateKind::caption && t.modality == m) return t;
    std::string avail;
    for (const auto& t : templates_) {
        if (t.kind != TemplateKind::caption) continue;
        if (!avail.empty()) avail += ", ";
        avail += to_string(*t.modality);
    }
    throw_config("no caption template for modality '" + std::string(to_string(m)) +
                 "' (available: " + (avail.empty() ? "none" : avail) + ")");
}

const PromptTemplate& TemplateLibrary::single(TemplateKind kind, const char* what) const {
    for (const auto& t : templates_)
        if (t.kind == kind) return t;
    throw_config(std::string("no ") + what + " template loaded");
}

std::string render_body(const std::string& body,
                        const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(body.size());
    size_t pos = 0;
    while (pos < body.size()) {
        size_t open = body.find("{{", pos);
        if (open == std::string::npos) {
            out.append(body, pos, std::string::npos);
            break;
        }
        out.append(body, pos, open - pos);
        size_t close = body.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(body, open, std::string::npos);
            break;
        }
        std::string name = body.substr(open + 2, close - open - 2);
        auto it = bindings.find(name);
        if (it == bindings.end()) throw_config("no binding for placeholder '" + name + "'");
        out += it->second;  // appended as-is, never re-scanned
        pos = close + 2;
    }
    return out;
}

RenderedPrompt finish_render(const PromptTemplate& tpl,
                             std::map<std::string, std::string> bindings) {
    RenderedPrompt r;
    r.text = render_body(tpl.body, bindings);
    r.template_id = tpl.template_id;
    r.bindings = std::move(bindings);
    r.digest = sha256_hex(r.text);
    return r;
}

RenderedPrompt TemplateLibrary::render_caption_prompt(Modality modality,
                                                      const RegionContext& ctx) const {
    const PromptTemplate& tpl = caption_for(modality);
    std::map<std::string, std::string> b;
    b["dataset"] = ctx.dataset;
    b["site"] = ctx.resolved_site();
    return finish_render(tpl, std::move(b));
}

RenderedPrompt TemplateLibrary::render_judge_verification_prompt(
    const std::string& caption, const std::string& question) const {
    if (caption.empty()) throw_validation("cannot judge an empty caption");
    const PromptTemplate& tpl = single(TemplateKind::judge_verification, "judge_verification");
    std::map<std::string, std::string> b;
    b["caption_json"] = canonical_dump(json(caption));
    b["question_json"] = canonical_dump(json(question));
    return finish_render(tpl, std::move(b));
}

RenderedPrompt TemplateLibrary::render_llmscore_prompt(const std::string& caption,
                                                       const RegionContext& ctx,
                                                       bool retry) const {
    if (caption.empty()) throw_validation("cannot rate an empty caption");
    const PromptTemplate& tpl =
        single(retry ? TemplateKind::judge_rating_retry : TemplateKind::judge_rating,
               retry ? "judge_rating_retry" : "judge_rating");
    std::map<std::string, std::string> b;
    b["caption_json"] = canonical_dump(json(caption));
    b["dataset"] = ctx.dataset;
    b["site"] = ctx.resolved_site();
    return finish_render(tpl, std::move(b));
}

}  // namespace medcap::prompt
