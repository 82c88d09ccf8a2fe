#include "medcap/qa/bank.hpp"

#include <algorithm>
#include <set>

#include "medcap/core/error.hpp"
#include "medcap/core/rng.hpp"
#include "medcap/prompt/templates.hpp"

namespace medcap::qa {
namespace {

std::string index_key(DatasetId dataset, const std::string& attribute, Polarity p) {
    return std::string(to_string(dataset)) + '\x1f' + normalize_key(attribute) + '\x1f' +
           to_string(p);
}

}  // namespace

const char* to_string(Polarity p) { return p == Polarity::positive ? "positive" : "negative"; }

Polarity polarity_from_string(const std::string& s) {
    if (s == "positive") return Polarity::positive;
    if (s == "negative") return Polarity::negative;
    throw_config("unknown polarity '" + s + "'");
}

QaLibrary QaLibrary::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw_config("QA template dir not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    QaLibrary lib;
    std::set<std::string> template_ids;
    for (const auto& f : files) {
        const std::string origin = f.filename().string();
        json j = read_json_file(f);
        if (!j.contains("dataset_id"))
            throw_config(origin + ": missing dataset_id");
        const DatasetId dataset = dataset_id_from_string(j.at("dataset_id").get<std::string>());
        for (const auto& tj : j.value("templates", json::array())) {
            QATemplate t;
            t.template_id = tj.value("template_id", std::string{});
            if (t.template_id.empty()) throw_config(origin + ": template missing template_id");
            t.attribute = tj.value("attribute", std::string{});
            if (t.attribute.empty())
                throw_config(origin + ": template " + t.template_id + " missing attribute");
            t.polarity = polarity_from_string(tj.value("polarity", std::string{"positive"}));
            t.question_text = tj.value("question_text", std::string{});
            if (t.question_text.empty())
                throw_config(origin + ": template " + t.template_id + " missing question_text");
            if (!template_ids.insert(t.template_id).second)
                throw_config(origin + ": duplicate template_id '" + t.template_id + "'");
            const std::string key = index_key(dataset, t.attribute, t.polarity);
            if (!lib.index_.emplace(key, std::move(t)).second)
                throw_config(origin + ": duplicate template for attribute '" + t.attribute +
                             "' (" + to_string(t.polarity) + ")");
            ++lib.count_;
        }
    }
    if (lib.count_ == 0) throw_config("no QA templates in " + dir.string());
    return lib;
}

const QATemplate* QaLibrary::find(DatasetId dataset, const std::string& attribute,
                                  Polarity p) const {
    auto it = index_.find(index_key(dataset, attribute, p));
    return it == index_.end() ? nullptr : &it->second;
}

json QAItem::to_json() const {
    json j;
    j["qa_id"] = qa_id;
    j["region_id"] = region_id;
    j["dataset"] = to_string(dataset);
    j["attribute"] = attribute;
    j["polarity"] = std::string(to_string(polarity));
    j["question"] = question;
    j["expected"] = expected;
    j["template_id"] = template_id;
    return j;
}

QAItem QAItem::from_json(const json& j, const std::string& origin) {
    QAItem item;
    try {
        item.qa_id = j.at("qa_id").get<std::string>();
        item.region_id = j.at("region_id").get<std::string>();
        item.dataset = dataset_id_from_string(j.at("dataset").get<std::string>());
        item.attribute = j.at("attribute").get<std::string>();
        item.polarity = polarity_from_string(j.at("polarity").get<std::string>());
        item.question = j.at("question").get<std::string>();
        item.expected = j.at("expected").get<std::string>();
        item.template_id = j.value("template_id", std::string{});
    } catch (const json::exception& e) {
        throw_validation(origin + ": bad QA item: " + e.what());
    }
    return item;
}

std::vector<QAItem> instantiate_questions(const ingest::RegionRecord& region, DatasetId dataset,
                                          const QaLibrary& lib, const QaPolicy& policy,
                                          ValidationReport* report) {
    if (policy.neg_per_region < 0) throw_config("neg_per_region must be >= 0");
    const std::string site =
        region.anatomical_site && !region.anatomical_site->empty() ? *region.anatomical_site
                                                                   : "the marked region";

    // Positive candidates: pathology labels plus attributes explicitly present.
    std::set<std::string> pos_names(region.pathology_labels.begin(),
                                    region.pathology_labels.end());
    for (const auto& [name, state] : region.attributes)
        if (state == AttrState::present) pos_names.insert(name);

    // Raw names that normalize to one concept ("Consolidation" label next to
    // a "consolidation" attribute) must yield a single question.
    std::set<const QATemplate*> seen;
    std::vector<const QATemplate*> chosen;
    for (const auto& name : pos_names)
        if (const QATemplate* t = lib.find(dataset, name, Polarity::positive))
            if (seen.insert(t).second) chosen.push_back(t);

    // Negative candidates: attributes explicitly absent, shuffled per region.
    std::vector<const QATemplate*> neg;
    for (const auto& [name, state] : region.attributes) {
        if (state != AttrState::absent) continue;
        if (const QATemplate* t = lib.find(dataset, name, Polarity::negative))
            if (seen.insert(t).second) neg.push_back(t);
    }
    Rng rng(policy.seed ^ fnv1a64(region.region_id));
    rng.shuffle(neg);
    if ((int)neg.size() > policy.neg_per_region) neg.resize(policy.neg_per_region);
    std::sort(neg.begin(), neg.end(), [](const QATemplate* a, const QATemplate* b) {
        return a->attribute < b->attribute;
    });
    chosen.insert(chosen.end(), neg.begin(), neg.end());

    if (chosen.empty()) {
        if (report != nullptr)
            report->add(region.region_id, "no applicable QA templates");
        return {};
    }

    std::vector<QAItem> items;
    items.reserve(chosen.size());
    int idx = 0;
    for (const QATemplate* t : chosen) {
        QAItem item;
        item.qa_id = region.region_id + ":q" + std::to_string(idx++);
        item.region_id = region.region_id;
        item.dataset = dataset;
        item.attribute = t->attribute;
        item.polarity = t->polarity;
        item.question = prompt::render_body(t->question_text,
                                            {{"attribute", t->attribute}, {"site", site}});
        item.expected = t->polarity == Polarity::positive ? "yes" : "no";
        item.template_id = t->template_id;
        items.push_back(std::move(item));
    }
    return items;
}

}  // namespace medcap::qa
