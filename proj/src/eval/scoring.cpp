#include "medcap/eval/scoring.hpp"

#include <cctype>
#include <cmath>
#include <map>

#include "medcap/core/error.hpp"

namespace medcap::eval {
namespace {

std::string first_line(const std::string& s) {
    const size_t nl = s.find('\n');
    std::string line = nl == std::string::npos ? s : s.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace((unsigned char)s[a])) ++a;
    while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
    return s.substr(a, b - a);
}

}  // namespace

std::optional<bool> parse_verdict(const std::string& reply) {
    const std::string line = first_line(reply);
    size_t i = 0;
    while (i < line.size() && !std::isalpha((unsigned char)line[i])) ++i;
    std::string word;
    while (i < line.size() && std::isalpha((unsigned char)line[i]))
        word += (char)std::tolower((unsigned char)line[i++]);
    if (word == "yes") return true;
    if (word == "no") return false;
    return std::nullopt;
}

std::optional<Ratings> parse_ratings(const std::string& reply) {
    static const std::string tag = "RATINGS:";
    size_t start = 0;
    while (start <= reply.size()) {
        size_t end = reply.find('\n', start);
        if (end == std::string::npos) end = reply.size();
        const std::string line = trim(reply.substr(start, end - start));
        start = end + 1;
        if (line.compare(0, tag.size(), tag) != 0) {
            if (end == reply.size()) break;
            continue;
        }
        // Exactly four integers in [0,100] after the tag, nothing else.
        std::vector<int> vals;
        size_t i = tag.size();
        while (i < line.size()) {
            while (i < line.size() && std::isspace((unsigned char)line[i])) ++i;
            if (i >= line.size()) break;
            if (!std::isdigit((unsigned char)line[i])) return std::nullopt;
            long v = 0;
            size_t digits = 0;
            while (i < line.size() && std::isdigit((unsigned char)line[i])) {
                v = v * 10 + (line[i] - '0');
                if (v > 1000000) return std::nullopt;
                ++i;
                ++digits;
            }
            if (digits == 0 ||
                (i < line.size() && !std::isspace((unsigned char)line[i])))
                return std::nullopt;
            if (v < 0 || v > 100) return std::nullopt;
            vals.push_back((int)v);
        }
        if (vals.size() != 4) return std::nullopt;
        return Ratings{vals[0], vals[1], vals[2], vals[3]};
    }
    return std::nullopt;
}

json JudgedAnswer::to_json() const {
    json j;
    j["qa_id"] = qa_id;
    j["region_id"] = region_id;
    j["verdict"] = verdict ? (*verdict ? "yes" : "no") : "unparseable";
    j["raw_reply"] = raw_reply;
    j["request_digest"] = request_digest;
    return j;
}

JudgedAnswer JudgedAnswer::from_json(const json& j, const std::string& origin) {
    JudgedAnswer a;
    try {
        a.qa_id = j.at("qa_id").get<std::string>();
        a.region_id = j.value("region_id", std::string{});
        const std::string v = j.at("verdict").get<std::string>();
        if (v == "yes")
            a.verdict = true;
        else if (v == "no")
            a.verdict = false;
        else
            a.verdict = std::nullopt;
        a.raw_reply = j.value("raw_reply", std::string{});
        a.request_digest = j.value("request_digest", std::string{});
    } catch (const json::exception& e) {
        throw_validation(origin + ": bad judged answer: " + e.what());
    }
    return a;
}

MedDLCScore score_meddlc(const std::vector<JudgedAnswer>& answers,
                         const std::vector<qa::QAItem>& items) {
    std::map<std::string, const JudgedAnswer*> by_id;
    for (const auto& a : answers) by_id[a.qa_id] = &a;

    MedDLCScore s;
    for (const auto& item : items) {
        const bool positive = item.polarity == qa::Polarity::positive;
        const bool expected_yes = item.expected == "yes";
        bool correct = false;
        auto it = by_id.find(item.qa_id);
        if (it != by_id.end() && it->second->verdict)
            correct = *it->second->verdict == expected_yes;
        if (positive) {
            ++s.pos_total;
            if (correct) ++s.pos_correct;
        } else {
            ++s.neg_total;
            if (correct) ++s.neg_correct;
        }
    }
    if (s.pos_total == 0 || s.neg_total == 0)
        throw_scoring("degenerate QA set: needs at least one positive and one negative question");
    s.pos_accuracy = 100.0 * (double)s.pos_correct / (double)s.pos_total;
    s.neg_accuracy = 100.0 * (double)s.neg_correct / (double)s.neg_total;
    s.meddlc = meddlc_overall(s.pos_accuracy, s.neg_accuracy);
    return s;
}

double meddlc_overall(double pos_accuracy, double neg_accuracy) {
    return (pos_accuracy + neg_accuracy) / 2.0;
}

double score_llm(const std::vector<Ratings>& per_region) {
    if (per_region.empty()) throw_scoring("LLM-score over zero rated regions");
    double sum = 0.0;
    for (const auto& r : per_region) sum += r.region_score();
    return sum / (double)per_region.size();
}

double aggregate_mean(const std::vector<double>& per_dataset) {
    if (per_dataset.empty()) throw_scoring("aggregate over zero datasets");
    double sum = 0.0;
    for (double v : per_dataset) sum += v;
    return sum / (double)per_dataset.size();
}

std::string format_pct(double v) {
    // Two-stage integer rounding keeps IEEE artifacts like 63.549999... from
    // printing as 63.5: round to 4 decimals first, then half-up to 1.
    const long long r4 = std::llround(v * 10000.0);
    const long long r1 = (r4 + 500) / 1000;
    return std::to_string(r1 / 10) + "." + std::to_string(r1 % 10);
}

}  // namespace medcap::eval
