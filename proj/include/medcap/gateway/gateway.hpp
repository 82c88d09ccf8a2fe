#pragma once

#include <atomic>
#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "medcap/core/jsonl.hpp"
#include "medcap/core/types.hpp"
#include "medcap/prompt/templates.hpp"

namespace medcap::gateway {

enum class BackendKind { http_chat, mock };
enum class ImageRole { full_image, focal_crop, mask_overlay };

const char* to_string(ImageRole role);

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_base_ms = 250;  // delay before attempt n+1 is base * 2^(n-1)
};

struct MockRule {
    std::vector<std::string> contains_all;  // all substrings must appear in prompt text
    std::string reply;
};

struct MockConfig {
    std::map<std::string, std::string> canned;  // request digest -> reply, wins over rules
    std::vector<MockRule> rules;                // first match wins
    std::string default_reply;
};

struct BackendSpec {
    std::string name;
    BackendKind kind = BackendKind::mock;
    std::string endpoint;  // http_chat: scheme://host[:port][/path]
    std::string model;
    std::string auth_env;  // env var holding the bearer token; never cached or logged
    int max_parallel = 4;
    int timeout_s = 60;
    RetryPolicy retry;
    bool region_aware = true;  // if false, the mask overlay image is not sent
    std::string model_type = "General";  // "General" | "Region-specific"
    MockConfig mock;

    static BackendSpec from_json(const json& j);
    json to_json() const;
};

struct RequestImage {
    ImageRole role = ImageRole::full_image;
    std::string png;  // encoded bytes
};

struct GenerationRequest {
    prompt::RenderedPrompt prompt;
    std::vector<RequestImage> images;
    double temperature = 0.0;
    int max_tokens = 512;
};

struct CaptionResult {
    std::string text;
    std::string backend_name;
    std::string request_digest;
    bool cached = false;  // served without a new backend call (disk hit or coalesced)
    long latency_ms = 0;
    int attempts = 0;  // 0 when served from cache
    std::optional<std::string> error;  // only set by run_batch for failed slots
    json raw_meta;
};

/// Digest identifying a request for caching: backend name, model, prompt text,
/// image roles+bytes, temperature, max_tokens. Auth material and timestamps
/// are deliberately excluded.
std::string cache_key(const BackendSpec& spec, const GenerationRequest& req);

/// Serves generation requests through a persistent content-addressed cache at
/// cache_dir/<backend>/<aa>/<digest>.json. Identical requests issued
/// concurrently are coalesced into a single backend call.
class Gateway {
public:
    Gateway(BackendSpec spec, std::filesystem::path cache_dir);

    /// Throws medcap::Error (kind backend) once retries are exhausted.
    CaptionResult generate(const GenerationRequest& req);

    /// Order-preserving; a failed slot carries `error` instead of propagating.
    std::vector<CaptionResult> run_batch(const std::vector<GenerationRequest>& reqs,
                                         int parallelism);

    long backend_calls() const { return backend_calls_.load(); }
    const BackendSpec& spec() const { return spec_; }

private:
    BackendSpec spec_;
    std::filesystem::path cache_dir_;
    std::atomic<long> backend_calls_{0};
    std::mutex mu_;
    std::map<std::string, std::shared_future<CaptionResult>> inflight_;

    std::filesystem::path cache_path(const std::string& digest) const;
    std::optional<CaptionResult> load_cached(const std::string& digest) const;
    void store_cached(const std::string& digest, const GenerationRequest& req,
                      const CaptionResult& result) const;
    CaptionResult call_backend(const GenerationRequest& req, const std::string& digest);
    std::string call_http_once(const GenerationRequest& req, json* raw_meta);
    std::string call_mock(const GenerationRequest& req, const std::string& digest);
};

std::string base64_encode(const std::string& bytes);

}  // namespace medcap::gateway
