#pragma once

#include <string>
#include <vector>

#include "medcap/eval/scoring.hpp"
#include "medcap/gateway/gateway.hpp"
#include "medcap/prompt/templates.hpp"
#include "medcap/qa/bank.hpp"

namespace medcap::eval {

struct RatingOutcome {
    Ratings ratings;
    bool retried = false;
    std::string raw_reply;
    std::string request_digest;
};

/// Asks the judge backend one verification question about a caption. An
/// unparseable reply is recorded, not thrown; scoring counts it incorrect.
JudgedAnswer judge_qa(gateway::Gateway& judge, const prompt::TemplateLibrary& templates,
                      const std::string& caption, const qa::QAItem& item,
                      const std::vector<gateway::RequestImage>& images = {});

/// Asks for the four factor ratings. On an unparseable reply the judge is
/// re-asked once through the stricter retry template (a distinct prompt, so
/// the cache cannot replay the bad reply); a second failure is a scoring
/// error.
RatingOutcome rate_caption(gateway::Gateway& judge, const prompt::TemplateLibrary& templates,
                           const std::string& caption, const prompt::RegionContext& ctx,
                           const std::vector<gateway::RequestImage>& images = {});

}  // namespace medcap::eval
