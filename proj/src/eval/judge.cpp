#include "medcap/eval/judge.hpp"

#include "medcap/core/error.hpp"

namespace medcap::eval {

JudgedAnswer judge_qa(gateway::Gateway& judge, const prompt::TemplateLibrary& templates,
                      const std::string& caption, const qa::QAItem& item,
                      const std::vector<gateway::RequestImage>& images) {
    gateway::GenerationRequest req;
    req.prompt = templates.render_judge_verification_prompt(caption, item.question);
    req.images = images;
    req.temperature = 0.0;
    req.max_tokens = 256;
    const gateway::CaptionResult res = judge.generate(req);

    JudgedAnswer ans;
    ans.qa_id = item.qa_id;
    ans.region_id = item.region_id;
    ans.verdict = parse_verdict(res.text);
    ans.raw_reply = res.text;
    ans.request_digest = res.request_digest;
    return ans;
}

RatingOutcome rate_caption(gateway::Gateway& judge, const prompt::TemplateLibrary& templates,
                           const std::string& caption, const prompt::RegionContext& ctx,
                           const std::vector<gateway::RequestImage>& images) {
    RatingOutcome out;
    for (int pass = 0; pass < 2; ++pass) {
        gateway::GenerationRequest req;
        req.prompt = templates.render_llmscore_prompt(caption, ctx, /*retry=*/pass == 1);
        req.images = images;
        req.temperature = 0.0;
        req.max_tokens = 256;
        const gateway::CaptionResult res = judge.generate(req);
        out.raw_reply = res.text;
        out.request_digest = res.request_digest;
        out.retried = pass == 1;
        if (auto r = parse_ratings(res.text)) {
            out.ratings = *r;
            return out;
        }
    }
    throw_scoring("unparseable ratings from judge (request " + out.request_digest + ")");
}

}  // namespace medcap::eval
