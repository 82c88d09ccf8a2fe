#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medcap/core/types.hpp"

namespace medcap::prompt {

enum class TemplateKind { caption, judge_verification, judge_rating, judge_rating_retry };

/// One prompt template asset. Bodies use {{name}} placeholders; every
/// placeholder referenced by the body must be declared, and caption templates
/// must carry their constraint phrases verbatim in the body.
struct PromptTemplate {
    std::string template_id;
    TemplateKind kind = TemplateKind::caption;
    std::optional<Modality> modality;  // caption templates only
    int version = 1;
    std::string body;
    std::vector<std::string> placeholders;
    std::vector<std::string> constraints;
};

struct RenderedPrompt {
    std::string text;
    std::string template_id;
    std::map<std::string, std::string> bindings;
    std::string digest;  // sha256 of text
};

struct RegionContext {
    std::string dataset;            // dataset id string
    std::string site;               // anatomical hint; empty -> "the marked region"
    std::string resolved_site() const { return site.empty() ? "the marked region" : site; }
};

class TemplateLibrary {
public:
    /// Loads every *.json template in dir. Missing dir or malformed file is a
    /// config error naming the offender.
    static TemplateLibrary load(const std::filesystem::path& dir);

    RenderedPrompt render_caption_prompt(Modality modality, const RegionContext& ctx) const;
    /// caption and question are embedded as JSON string literals so hostile
    /// content cannot escape its slot.
    RenderedPrompt render_judge_verification_prompt(const std::string& caption,
                                                    const std::string& question) const;
    RenderedPrompt render_llmscore_prompt(const std::string& caption, const RegionContext& ctx,
                                          bool retry = false) const;

    const PromptTemplate* find(const std::string& template_id) const;

private:
    std::vector<PromptTemplate> templates_;
    const PromptTemplate& caption_for(Modality m) const;
    const PromptTemplate& single(TemplateKind kind, const char* what) const;
};

/// Single-pass {{name}} substitution; substituted values are never re-scanned.
/// Throws on any placeholder without a binding.
std::string render_body(const std::string& body,
                        const std::map<std::string, std::string>& bindings);

RenderedPrompt finish_render(const PromptTemplate& tpl,
                             std::map<std::string, std::string> bindings);

}  // namespace medcap::prompt
