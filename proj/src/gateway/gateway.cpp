#include "medcap/gateway/gateway.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "medcap/core/digest.hpp"
#include "medcap/core/error.hpp"

namespace medcap::gateway {
namespace {

// Thrown internally for transport failures and 5xx; anything else is final.
struct Retryable {
    std::string message;
};

BackendKind kind_from_string(const std::string& s) {
    if (s == "http_chat") return BackendKind::http_chat;
    if (s == "mock") return BackendKind::mock;
    throw_config("unknown backend kind '" + s + "'");
}

const char* kind_to_string(BackendKind k) {
    return k == BackendKind::http_chat ? "http_chat" : "mock";
}

std::string snippet(const std::string& body) {
    if (body.size() <= 200) return body;
    return body.substr(0, 200) + "...";
}

}  // namespace

const char* to_string(ImageRole role) {
    switch (role) {
        case ImageRole::full_image: return "full_image";
        case ImageRole::focal_crop: return "focal_crop";
        case ImageRole::mask_overlay: return "mask_overlay";
    }
    return "full_image";
}

std::string base64_encode(const std::string& bytes) {
    static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 3 <= bytes.size()) {
        unsigned v = (unsigned char)bytes[i] << 16 | (unsigned char)bytes[i + 1] << 8 |
                     (unsigned char)bytes[i + 2];
        out += tbl[v >> 18];
        out += tbl[(v >> 12) & 63];
        out += tbl[(v >> 6) & 63];
        out += tbl[v & 63];
        i += 3;
    }
    if (i + 1 == bytes.size()) {
        unsigned v = (unsigned char)bytes[i] << 16;
        out += tbl[v >> 18];
        out += tbl[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        unsigned v = (unsigned char)bytes[i] << 16 | (unsigned char)bytes[i + 1] << 8;
        out += tbl[v >> 18];
        out += tbl[(v >> 12) & 63];
        out += tbl[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

BackendSpec BackendSpec::from_json(const json& j) {
    BackendSpec s;
    if (!j.is_object()) throw_config("backend spec must be a JSON object");
    if (!j.contains("name") || !j.at("name").is_string() || j.at("name").get<std::string>().empty())
        throw_config("backend spec: missing name");
    s.name = j.at("name").get<std::string>();
    s.kind = kind_from_string(j.value("kind", std::string{"mock"}));
    s.endpoint = j.value("endpoint", std::string{});
    if (s.kind == BackendKind::http_chat && s.endpoint.empty())
        throw_config("backend '" + s.name + "': http_chat requires endpoint");
    s.model = j.value("model", std::string{});
    s.auth_env = j.value("auth_env", std::string{});
    s.max_parallel = j.value("max_parallel", 4);
    if (s.max_parallel < 1) throw_config("backend '" + s.name + "': max_parallel must be >= 1");
    s.timeout_s = j.value("timeout_s", 60);
    if (j.contains("retry")) {
        const json r = j.at("retry");
        s.retry.max_attempts = r.value("max_attempts", 3);
        s.retry.backoff_base_ms = r.value("backoff_base_ms", 250);
    }
    if (s.retry.max_attempts < 1)
        throw_config("backend '" + s.name + "': retry.max_attempts must be >= 1");
    if (s.retry.backoff_base_ms < 0)
        throw_config("backend '" + s.name + "': retry.backoff_base_ms must be >= 0");
    s.region_aware = j.value("region_aware", true);
    s.model_type = j.value("model_type", std::string{"General"});
    if (s.model_type != "General" && s.model_type != "Region-specific")
        throw_config("backend '" + s.name + "': model_type must be General or Region-specific");
    if (j.contains("mock")) {
        const json m = j.at("mock");
        const json canned = m.value("canned", json::object());
        for (const auto& [k, v] : canned.items()) s.mock.canned[k] = v.get<std::string>();
        const json rules = m.value("rules", json::array());
        for (const auto& r : rules) {
            MockRule rule;
            const json needles = r.value("contains_all", json::array());
            for (const auto& n : needles) rule.contains_all.push_back(n.get<std::string>());
            rule.reply = r.value("reply", std::string{});
            s.mock.rules.push_back(std::move(rule));
        }
        s.mock.default_reply = m.value("default_reply", std::string{});
    }
    return s;
}

json BackendSpec::to_json() const {
    json j;
    j["name"] = name;
    j["kind"] = kind_to_string(kind);
    if (!endpoint.empty()) j["endpoint"] = endpoint;
    if (!model.empty()) j["model"] = model;
    if (!auth_env.empty()) j["auth_env"] = auth_env;
    j["max_parallel"] = max_parallel;
    j["timeout_s"] = timeout_s;
    j["retry"] = {{"max_attempts", retry.max_attempts}, {"backoff_base_ms", retry.backoff_base_ms}};
    j["region_aware"] = region_aware;
    j["model_type"] = model_type;
    if (kind == BackendKind::mock) {
        json m;
        m["canned"] = json::object();
        for (const auto& [k, v] : mock.canned) m["canned"][k] = v;
        m["rules"] = json::array();
        for (const auto& r : mock.rules)
            m["rules"].push_back({{"contains_all", r.contains_all}, {"reply", r.reply}});
        m["default_reply"] = mock.default_reply;
        j["mock"] = m;
    }
    return j;
}

std::string cache_key(const BackendSpec& spec, const GenerationRequest& req) {
    Sha256 h;
    h.update_field("medcap-req-v1");
    h.update_field(spec.name);
    h.update_field(spec.model);
    h.update_field(req.prompt.text);
    for (const auto& img : req.images) {
        h.update_field(to_string(img.role));
        h.update_field(img.png);
    }
    h.update_field(fmt::format("{:.6f}", req.temperature));
    h.update_field(std::to_string(req.max_tokens));
    return h.hex();
}

Gateway::Gateway(BackendSpec spec, std::filesystem::path cache_dir)
    : spec_(std::move(spec)), cache_dir_(std::move(cache_dir)) {}

std::filesystem::path Gateway::cache_path(const std::string& digest) const {
    return cache_dir_ / spec_.name / digest.substr(0, 2) / (digest + ".json");
}

std::optional<CaptionResult> Gateway::load_cached(const std::string& digest) const {
    const auto path = cache_path(digest);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    json j = read_json_file(path);
    CaptionResult r;
    r.text = j.at("response").at("text").get<std::string>();
    r.backend_name = spec_.name;
    r.request_digest = digest;
    r.cached = true;
    r.latency_ms = 0;
    r.attempts = 0;
    r.raw_meta = j.at("response").value("raw_meta", json::object());
    return r;
}

void Gateway::store_cached(const std::string& digest, const GenerationRequest& req,
                           const CaptionResult& result) const {
    json images = json::array();
    for (const auto& img : req.images)
        images.push_back({{"role", to_string(img.role)}, {"sha256", sha256_hex(img.png)}});
    json j;
    j["backend"] = spec_.name;
    j["request"] = {{"prompt_text", req.prompt.text},
                    {"template_id", req.prompt.template_id},
                    {"model", spec_.model},
                    {"temperature", req.temperature},
                    {"max_tokens", req.max_tokens},
                    {"images", images}};
    j["response"] = {{"text", result.text},
                     {"raw_meta", result.raw_meta},
                     {"attempts", result.attempts}};
    const auto path = cache_path(digest);
    std::filesystem::create_directories(path.parent_path());
    write_text_file(path, canonical_dump(j) + "\n");
}

std::string Gateway::call_mock(const GenerationRequest& req, const std::string& digest) {
    backend_calls_.fetch_add(1);
    auto it = spec_.mock.canned.find(digest);
    if (it != spec_.mock.canned.end()) return it->second;
    for (const auto& rule : spec_.mock.rules) {
        bool all = true;
        for (const auto& needle : rule.contains_all) {
            if (req.prompt.text.find(needle) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (all) return rule.reply;
    }
    return spec_.mock.default_reply;
}

std::string Gateway::call_http_once(const GenerationRequest& req, json* raw_meta) {
    backend_calls_.fetch_add(1);

    std::string base = spec_.endpoint;
    std::string path = "/";
    const size_t scheme_end = base.find("://");
    if (scheme_end != std::string::npos) {
        const size_t slash = base.find('/', scheme_end + 3);
        if (slash != std::string::npos) {
            path = base.substr(slash);
            base = base.substr(0, slash);
        }
    }

    httplib::Client cli(base);
    cli.set_connection_timeout(spec_.timeout_s, 0);
    cli.set_read_timeout(spec_.timeout_s, 0);
    cli.set_write_timeout(spec_.timeout_s, 0);

    httplib::Headers headers;
    if (!spec_.auth_env.empty()) {
        const char* token = std::getenv(spec_.auth_env.c_str());
        if (token == nullptr || *token == '\0')
            throw_config("backend '" + spec_.name + "': env var " + spec_.auth_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    json content = json::array();
    content.push_back({{"type", "text"}, {"text", req.prompt.text}});
    for (const auto& img : req.images) {
        if (!spec_.region_aware && img.role == ImageRole::mask_overlay) continue;
        content.push_back(
            {{"type", "image_url"},
             {"image_url", {{"url", "data:image/png;base64," + base64_encode(img.png)}}}});
    }
    json body;
    body["model"] = spec_.model;
    body["messages"] = json::array({json{{"role", "user"}, {"content", content}}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;

    auto res = cli.Post(path, headers, canonical_dump(body), "application/json");
    if (!res) throw Retryable{"transport error: " + httplib::to_string(res.error())};
    if (res->status >= 500)
        throw Retryable{fmt::format("HTTP {}: {}", res->status, snippet(res->body))};
    if (res->status >= 400)
        throw_backend(fmt::format("backend '{}' returned HTTP {}: {}", spec_.name, res->status,
                                  snippet(res->body)));

    json j;
    try {
        j = json::parse(res->body);
    } catch (const json::exception& e) {
        throw_backend("backend '" + spec_.name + "': unparseable response: " + e.what());
    }
    if (!j.contains("choices") || !j.at("choices").is_array() || j.at("choices").empty())
        throw_backend("backend '" + spec_.name + "': response has no choices");
    const json msg = j.at("choices").at(0).value("message", json::object());
    std::string text;
    if (msg.contains("content")) {
        const json& c = msg.at("content");
        if (c.is_string()) {
            text = c.get<std::string>();
        } else if (c.is_array()) {
            for (const auto& part : c)
                if (part.value("type", std::string{}) == "text")
                    text += part.value("text", std::string{});
        }
    }
    if (raw_meta != nullptr) {
        *raw_meta = json{{"status", res->status},
                         {"model", j.value("model", std::string{})},
                         {"usage", j.value("usage", json::object())}};
    }
    return text;
}

CaptionResult Gateway::call_backend(const GenerationRequest& req, const std::string& digest) {
    const auto t0 = std::chrono::steady_clock::now();
    CaptionResult r;
    r.backend_name = spec_.name;
    r.request_digest = digest;
    r.cached = false;

    if (spec_.kind == BackendKind::mock) {
        r.text = call_mock(req, digest);
        r.attempts = 1;
        r.raw_meta = json{{"mock", true}};
    } else {
        for (int attempt = 1;; ++attempt) {
            try {
                r.text = call_http_once(req, &r.raw_meta);
                r.attempts = attempt;
                break;
            } catch (const Retryable& e) {
                if (attempt >= spec_.retry.max_attempts)
                    throw_backend(fmt::format("backend '{}' failed after {} attempts: {}",
                                              spec_.name, attempt, e.message));
                const long delay =
                    (long)spec_.retry.backoff_base_ms * (1L << (attempt - 1));
                std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            }
        }
    }
    if (r.text.empty())
        throw_backend("backend '" + spec_.name + "' returned empty completion");
    r.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    return r;
}

CaptionResult Gateway::generate(const GenerationRequest& req) {
    const std::string digest = cache_key(spec_, req);
    if (auto hit = load_cached(digest)) return *hit;

    std::promise<CaptionResult> prom;
    std::shared_future<CaptionResult> theirs;
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = inflight_.find(digest);
        if (it != inflight_.end()) {
            theirs = it->second;
        } else {
            inflight_.emplace(digest, prom.get_future().share());
        }
    }
    if (theirs.valid()) {
        CaptionResult r = theirs.get();  // rethrows the leader's failure
        r.cached = true;
        r.attempts = 0;
        r.latency_ms = 0;
        return r;
    }

    CaptionResult result;
    try {
        result = call_backend(req, digest);
    } catch (...) {
        prom.set_exception(std::current_exception());
        std::lock_guard<std::mutex> lock(mu_);
        inflight_.erase(digest);
        throw;
    }
    store_cached(digest, req, result);
    prom.set_value(result);
    {
        std::lock_guard<std::mutex> lock(mu_);
        inflight_.erase(digest);
    }
    return result;
}

std::vector<CaptionResult> Gateway::run_batch(const std::vector<GenerationRequest>& reqs,
                                              int parallelism) {
    if (parallelism < 1) throw_config("run_batch: parallelism must be >= 1");
    if (parallelism > spec_.max_parallel)
        throw_config(fmt::format("run_batch: parallelism {} exceeds backend max_parallel {}",
                                 parallelism, spec_.max_parallel));
    std::vector<CaptionResult> results(reqs.size());
    if (reqs.empty()) return results;

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= reqs.size()) break;
            try {
                results[i] = generate(reqs[i]);
            } catch (const Error& e) {
                results[i].backend_name = spec_.name;
                results[i].request_digest = cache_key(spec_, reqs[i]);
                results[i].error = e.what();
            } catch (const std::exception& e) {
                results[i].backend_name = spec_.name;
                results[i].request_digest = cache_key(spec_, reqs[i]);
                results[i].error = e.what();
            }
        }
    };
    const size_t n_threads = std::min<size_t>((size_t)parallelism, reqs.size());
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return results;
}

}  // namespace medcap::gateway
