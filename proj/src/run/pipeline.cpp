#include "medcap/run/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "medcap/core/digest.hpp"
#include "medcap/core/error.hpp"
#include "medcap/core/image_io.hpp"
#include "medcap/eval/judge.hpp"
#include "medcap/eval/scoring.hpp"
#include "medcap/gateway/gateway.hpp"
#include "medcap/ingest/adapters.hpp"
#include "medcap/prompt/templates.hpp"
#include "medcap/qa/bank.hpp"
#include "medcap/roi/detector.hpp"
#include "medcap/sampler/focal.hpp"
#include "medcap/sampler/geometry.hpp"
#include "medcap/sampler/sampling.hpp"

namespace medcap::run {
namespace fs = std::filesystem;
namespace {

json bbox_to_json(const BBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

BBox bbox_from_json(const json& j) {
    return BBox{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

// One sampled region as written to samples/<dataset>.jsonl. Everything later
// stages need; no filesystem paths, so the file is machine-portable.
struct SampleLine {
    std::string dataset;
    std::string image_id;
    std::string region_id;
    std::string modality;
    std::string site;
    BBox bbox;
    BBox expanded_bbox;
    std::vector<std::string> labels;
    std::map<std::string, std::string> attributes;
    std::string full_blob;
    std::string crop_blob;
    std::string mask_blob;

    json to_json() const {
        json j;
        j["dataset"] = dataset;
        j["image_id"] = image_id;
        j["region_id"] = region_id;
        j["modality"] = modality;
        j["site"] = site;
        j["bbox"] = bbox_to_json(bbox);
        j["expanded_bbox"] = bbox_to_json(expanded_bbox);
        j["labels"] = labels;
        j["attributes"] = attributes;
        j["blobs"] = {{"full", full_blob}, {"crop", crop_blob}, {"mask", mask_blob}};
        return j;
    }

    static SampleLine from_json(const json& j) {
        SampleLine s;
        s.dataset = j.at("dataset").get<std::string>();
        s.image_id = j.at("image_id").get<std::string>();
        s.region_id = j.at("region_id").get<std::string>();
        s.modality = j.at("modality").get<std::string>();
        s.site = j.value("site", std::string{});
        s.bbox = bbox_from_json(j.at("bbox"));
        s.expanded_bbox = bbox_from_json(j.at("expanded_bbox"));
        for (const auto& l : j.value("labels", json::array()))
            s.labels.push_back(l.get<std::string>());
        const json attrs = j.value("attributes", json::object());
        for (const auto& [k, v] : attrs.items()) s.attributes[k] = v.get<std::string>();
        const json blobs = j.at("blobs");
        s.full_blob = blobs.at("full").get<std::string>();
        s.crop_blob = blobs.at("crop").get<std::string>();
        s.mask_blob = blobs.at("mask").get<std::string>();
        return s;
    }
};

std::string iso_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

}  // namespace

Pipeline::Pipeline(RunConfig cfg) : cfg_(std::move(cfg)) {
    digest_ = cfg_.digest();
    out_ = cfg_.resolve(cfg_.output_dir);
    run_dir_ = out_ / "runs" / digest_.substr(0, 12);
    cache_dir_ = out_ / "cache";  // created lazily by the gateway on first store
    fs::create_directories(run_dir_);
    ensure_run_json();
}

const std::vector<std::string>& Pipeline::stage_names() {
    static const std::vector<std::string> names = {"ingest",   "detect-roi", "sample", "qa",
                                                   "generate", "evaluate",   "report"};
    return names;
}

void Pipeline::ensure_run_json() {
    const fs::path p = run_dir_ / "run.json";
    if (fs::exists(p)) return;
    json j;
    j["config_digest"] = digest_;
    j["created_at"] = iso_now();
    j["config"] = cfg_.raw;
    write_text_file(p, canonical_dump(j) + "\n");
}

bool Pipeline::all_exist(const std::vector<fs::path>& rel) const {
    for (const auto& r : rel)
        if (!fs::exists(run_dir_ / r)) return false;
    return true;
}

void Pipeline::write_log(const std::string& stage, const std::string& dataset,
                         const ValidationReport& report) const {
    std::vector<json> lines;
    lines.reserve(report.entries.size());
    for (const auto& e : report.entries)
        lines.push_back(json{{"record_id", e.record_id}, {"reason", e.reason}});
    fs::create_directories(run_dir_ / "logs");
    write_jsonl(run_dir_ / "logs" / (stage + "_" + dataset + ".jsonl"), lines);
}

fs::path Pipeline::blob_path(const std::string& digest) const {
    return run_dir_ / "blobs" / digest.substr(0, 2) / (digest + ".png");
}

std::string Pipeline::store_blob(const std::vector<std::uint8_t>& png) const {
    const std::string bytes(png.begin(), png.end());
    const std::string digest = sha256_hex(bytes);
    const fs::path p = blob_path(digest);
    if (!fs::exists(p)) {
        fs::create_directories(p.parent_path());
        write_text_file(p, bytes);
    }
    return digest;
}

std::string Pipeline::read_blob(const std::string& digest) const {
    const fs::path p = blob_path(digest);
    if (!fs::exists(p)) throw_validation("missing blob " + digest + " (re-run sample)");
    return read_text_file(p);
}

void Pipeline::run_stage(const std::string& name, bool resume) {
    try {
        if (name == "ingest")
            stage_ingest(resume);
        else if (name == "detect-roi")
            stage_detect_roi(resume);
        else if (name == "sample")
            stage_sample(resume);
        else if (name == "qa")
            stage_qa(resume);
        else if (name == "generate")
            stage_generate(resume);
        else if (name == "evaluate")
            stage_evaluate(resume);
        else if (name == "report")
            stage_report(resume);
        else
            throw_config("unknown stage '" + name + "'");
    } catch (const Error& e) {
        if (std::string(e.what()).rfind("stage ", 0) == 0) throw;
        throw Error(e.kind(), "stage " + name + ": " + e.what());
    }
}

void Pipeline::run_all(bool resume) {
    for (const auto& name : stage_names()) run_stage(name, resume);
}

void Pipeline::stage_ingest(bool resume) {
    std::vector<fs::path> outputs;
    for (const auto& [name, src] : cfg_.datasets)
        outputs.push_back(fs::path("manifests") / (name + ".jsonl"));
    if (resume && all_exist(outputs)) return;

    fs::create_directories(run_dir_ / "manifests");
    for (const auto& [name, src] : cfg_.datasets) {
        ingest::Vocabulary vocab;
        const bool has_vocab = !src.vocab.empty();
        if (has_vocab) vocab = ingest::Vocabulary::load(cfg_.resolve(src.vocab));

        ingest::AdaptResult result;
        switch (src.kind) {
            case SourceKind::vindr:
                result = ingest::adapt_vindr(cfg_.resolve(src.table), cfg_.resolve(src.image_dir),
                                             has_vocab ? &vocab : nullptr);
                break;
            case SourceKind::lidc:
                result =
                    ingest::adapt_lidc(cfg_.resolve(src.listing), cfg_.resolve(src.image_dir));
                break;
            case SourceKind::skincon:
                result = ingest::adapt_skincon(cfg_.resolve(src.image_dir),
                                               cfg_.resolve(src.table),
                                               has_vocab ? &vocab : nullptr);
                break;
            case SourceKind::manifest: {
                result.manifest = ingest::load_manifest(cfg_.resolve(src.manifest));
                const fs::path base = cfg_.resolve(src.manifest).parent_path();
                const auto rep = ingest::validate_manifest(result.manifest, base,
                                                           has_vocab ? &vocab : nullptr);
                if (!rep.ok())
                    throw_validation("manifest " + src.manifest + ": " +
                                     rep.entries.front().record_id + ": " +
                                     rep.entries.front().reason);
                break;
            }
        }
        if (result.manifest.dataset_id != src.id)
            throw_validation("dataset " + name + ": source declares " +
                             to_string(result.manifest.dataset_id));
        ingest::save_manifest(result.manifest, run_dir_ / "manifests" / (name + ".jsonl"));
        write_log("ingest", name, result.report);
    }
}

void Pipeline::stage_detect_roi(bool resume) {
    std::vector<fs::path> outputs;
    for (const auto& [name, src] : cfg_.datasets)
        outputs.push_back(fs::path("manifests") / (name + ".roi.jsonl"));
    if (resume && all_exist(outputs)) return;

    std::vector<fs::path> inputs;
    for (const auto& [name, src] : cfg_.datasets)
        inputs.push_back(fs::path("manifests") / (name + ".jsonl"));
    if (!all_exist(inputs)) throw_config("missing ingested manifests; run ingest first");

    for (const auto& [name, src] : cfg_.datasets) {
        const fs::path in = run_dir_ / "manifests" / (name + ".jsonl");
        ingest::Manifest m = ingest::load_manifest(in);
        const bool wanted =
            cfg_.detector.has_value() &&
            (cfg_.detector_datasets.empty() || cfg_.detector_datasets.count(name) > 0);
        ValidationReport report;
        if (wanted) {
            const auto spec = roi::DetectorSpec::from_json(*cfg_.detector);
            m = roi::attach_regions(m, spec, in.parent_path(), report);
        }
        ingest::save_manifest(m, run_dir_ / "manifests" / (name + ".roi.jsonl"));
        write_log("detect-roi", name, report);
    }
}

void Pipeline::stage_sample(bool resume) {
    std::vector<fs::path> outputs;
    for (const auto& [name, src] : cfg_.datasets)
        outputs.push_back(fs::path("samples") / (name + ".jsonl"));
    if (resume && all_exist(outputs)) return;

    std::vector<fs::path> inputs;
    for (const auto& [name, src] : cfg_.datasets)
        inputs.push_back(fs::path("manifests") / (name + ".roi.jsonl"));
    if (!all_exist(inputs)) throw_config("missing manifests; run detect-roi first");

    const auto geometry = sampler::load_geometry_config(cfg_.resolve(cfg_.geometry));
    fs::create_directories(run_dir_ / "samples");

    for (const auto& [name, src] : cfg_.datasets) {
        const fs::path manifest_path = run_dir_ / "manifests" / (name + ".roi.jsonl");
        ingest::Manifest m = ingest::load_manifest(manifest_path);
        const fs::path manifest_dir = manifest_path.parent_path();
        const auto& geo = sampler::geometry_for(geometry, src.id);
        ValidationReport report;

        // LIDC volumes first: pick the consensus slice per nodule and graft
        // the synthesized regions onto the placeholder slice records.
        std::map<std::string, Image> draft_masks;  // region_id -> union mask
        if (!m.volumes.empty()) {
            const auto loader = [&](const std::string& ref) {
                return load_mask(ingest::resolve_ref(manifest_dir, m, ref));
            };
            const auto drafts = sampler::synthesize_lidc_regions(m, loader);
            std::map<std::string, std::vector<const sampler::LidcRegionDraft*>> by_image;
            for (const auto& d : drafts) by_image[d.image_id].push_back(&d);
            for (auto& rec : m.records) {
                auto it = by_image.find(rec.image_id);
                if (it == by_image.end()) continue;
                for (const auto* d : it->second) {
                    ingest::RegionRecord region;
                    region.region_id = d->image_id + ":" + d->nodule_id;
                    region.bbox = d->bbox;
                    region.attributes = d->attributes;
                    rec.regions.push_back(std::move(region));
                    draft_masks[d->image_id + ":" + d->nodule_id] = d->union_mask;
                }
            }
        }

        std::vector<json> lines;
        for (const auto& rec : m.records) {
            if (rec.regions.empty()) {
                report.add(rec.image_id, "no regions to sample");
                continue;
            }
            const auto chosen = sampler::sample_regions(rec, cfg_.sampling);
            const Image full =
                load_image(ingest::resolve_ref(manifest_dir, m, rec.image_ref));
            const std::string full_digest = store_blob(encode_png(full));
            for (const auto& region : chosen) {
                const Image* mask_ptr = nullptr;
                Image mask_storage;
                auto dm = draft_masks.find(region.region_id);
                if (dm != draft_masks.end()) {
                    mask_ptr = &dm->second;
                } else if (region.mask_ref) {
                    mask_storage =
                        load_mask(ingest::resolve_ref(manifest_dir, m, *region.mask_ref));
                    mask_ptr = &mask_storage;
                }
                const auto focal = sampler::build_focal_input(full, region, mask_ptr, geo);

                SampleLine s;
                s.dataset = name;
                s.image_id = rec.image_id;
                s.region_id = region.region_id;
                s.modality = to_string(rec.modality);
                s.site = region.anatomical_site.value_or("");
                s.bbox = region.bbox;
                s.expanded_bbox = focal.transform.expanded_bbox;
                s.labels.assign(region.pathology_labels.begin(), region.pathology_labels.end());
                for (const auto& [k, v] : region.attributes) s.attributes[k] = to_string(v);
                s.full_blob = full_digest;
                s.crop_blob = store_blob(encode_png(focal.crop));
                s.mask_blob = store_blob(encode_png(focal.mask));
                lines.push_back(s.to_json());
            }
        }
        write_jsonl(run_dir_ / "samples" / (name + ".jsonl"), lines);
        write_log("sample", name, report);
    }
}

void Pipeline::stage_qa(bool resume) {
    std::vector<fs::path> outputs;
    for (const auto& [name, src] : cfg_.datasets)
        outputs.push_back(fs::path("qa") / (name + ".jsonl"));
    if (resume && all_exist(outputs)) return;

    std::vector<fs::path> inputs;
    for (const auto& [name, src] : cfg_.datasets)
        inputs.push_back(fs::path("samples") / (name + ".jsonl"));
    if (!all_exist(inputs)) throw_config("missing samples; run sample first");

    const auto lib = qa::QaLibrary::load(cfg_.resolve(cfg_.qa_dir));
    const qa::QaPolicy policy{cfg_.neg_per_region, cfg_.seed};
    fs::create_directories(run_dir_ / "qa");

    for (const auto& [name, src] : cfg_.datasets) {
        ValidationReport report;
        std::vector<json> lines;
        for (const auto& j : read_jsonl(run_dir_ / "samples" / (name + ".jsonl"))) {
            const SampleLine s = SampleLine::from_json(j);
            ingest::RegionRecord region;
            region.region_id = s.region_id;
            region.pathology_labels.insert(s.labels.begin(), s.labels.end());
            for (const auto& [k, v] : s.attributes)
                region.attributes[k] = attr_state_from_string(v);
            if (!s.site.empty()) region.anatomical_site = s.site;
            const auto items = qa::instantiate_questions(region, src.id, lib, policy, &report);
            for (const auto& item : items) lines.push_back(item.to_json());
        }
        write_jsonl(run_dir_ / "qa" / (name + ".jsonl"), lines);
        write_log("qa", name, report);
    }
}

void Pipeline::stage_generate(bool resume) {
    std::vector<fs::path> outputs;
    for (const auto& bj : cfg_.caption_backends) {
        const auto spec = gateway::BackendSpec::from_json(bj);
        for (const auto& [name, src] : cfg_.datasets)
            outputs.push_back(fs::path("captions") / spec.name / (name + ".jsonl"));
    }
    if (resume && all_exist(outputs)) return;

    std::vector<fs::path> inputs;
    for (const auto& [name, src] : cfg_.datasets)
        inputs.push_back(fs::path("samples") / (name + ".jsonl"));
    if (!all_exist(inputs)) throw_config("missing samples; run sample first");

    const auto templates = prompt::TemplateLibrary::load(cfg_.resolve(cfg_.templates_dir));
    for (const auto& bj : cfg_.caption_backends) {
        const auto spec = gateway::BackendSpec::from_json(bj);
        gateway::Gateway gw(spec, cache_dir_);
        for (const auto& [name, src] : cfg_.datasets) {
            std::vector<SampleLine> samples;
            for (const auto& j : read_jsonl(run_dir_ / "samples" / (name + ".jsonl")))
                samples.push_back(SampleLine::from_json(j));

            std::vector<gateway::GenerationRequest> reqs;
            reqs.reserve(samples.size());
            for (const auto& s : samples) {
                gateway::GenerationRequest req;
                prompt::RegionContext ctx{s.dataset, s.site};
                req.prompt = templates.render_caption_prompt(modality_from_string(s.modality), ctx);
                req.images.push_back({gateway::ImageRole::full_image, read_blob(s.full_blob)});
                req.images.push_back({gateway::ImageRole::focal_crop, read_blob(s.crop_blob)});
                if (spec.region_aware)
                    req.images.push_back(
                        {gateway::ImageRole::mask_overlay, read_blob(s.mask_blob)});
                reqs.push_back(std::move(req));
            }
            const auto results = gw.run_batch(reqs, spec.max_parallel);

            std::vector<json> lines;
            for (size_t i = 0; i < results.size(); ++i) {
                if (results[i].error)
                    throw_backend("caption for " + samples[i].region_id + ": " +
                                  *results[i].error);
                json j;
                j["dataset"] = samples[i].dataset;
                j["image_id"] = samples[i].image_id;
                j["region_id"] = samples[i].region_id;
                j["caption"] = results[i].text;
                j["request_digest"] = results[i].request_digest;
                j["template_id"] = reqs[i].prompt.template_id;
                lines.push_back(std::move(j));
            }
            fs::create_directories(run_dir_ / "captions" / spec.name);
            write_jsonl(run_dir_ / "captions" / spec.name / (name + ".jsonl"), lines);
        }
    }
}

void Pipeline::stage_evaluate(bool resume) {
    std::vector<fs::path> outputs;
    for (const auto& bj : cfg_.caption_backends) {
        const auto spec = gateway::BackendSpec::from_json(bj);
        outputs.push_back(fs::path("scorecards") / (spec.name + ".json"));
    }
    if (resume && all_exist(outputs)) return;

    std::vector<fs::path> inputs;
    for (const auto& bj : cfg_.caption_backends) {
        const auto spec = gateway::BackendSpec::from_json(bj);
        for (const auto& [name, src] : cfg_.datasets) {
            inputs.push_back(fs::path("captions") / spec.name / (name + ".jsonl"));
            inputs.push_back(fs::path("qa") / (name + ".jsonl"));
        }
    }
    if (!all_exist(inputs)) throw_config("missing captions or QA items; run earlier stages first");

    const auto templates = prompt::TemplateLibrary::load(cfg_.resolve(cfg_.templates_dir));
    const auto judge_spec = gateway::BackendSpec::from_json(cfg_.judge_backend);
    gateway::Gateway judge(judge_spec, cache_dir_);
    fs::create_directories(run_dir_ / "scorecards");

    for (const auto& bj : cfg_.caption_backends) {
        const auto spec = gateway::BackendSpec::from_json(bj);
        ScoreCard card;
        card.model = spec.name;
        card.model_type = spec.model_type;
        card.config_digest = digest_;
        card.judge_sees_image = cfg_.judge_sees_image;
        card.neg_per_region = cfg_.neg_per_region;

        for (const auto& [name, src] : cfg_.datasets) {
            std::map<std::string, SampleLine> samples;  // region_id ->
            std::vector<std::string> region_order;
            for (const auto& j : read_jsonl(run_dir_ / "samples" / (name + ".jsonl"))) {
                SampleLine s = SampleLine::from_json(j);
                region_order.push_back(s.region_id);
                samples[s.region_id] = std::move(s);
            }
            std::map<std::string, std::string> captions;  // region_id -> text
            for (const auto& j :
                 read_jsonl(run_dir_ / "captions" / spec.name / (name + ".jsonl")))
                captions[j.at("region_id").get<std::string>()] =
                    j.at("caption").get<std::string>();
            std::vector<qa::QAItem> items;
            for (const auto& j : read_jsonl(run_dir_ / "qa" / (name + ".jsonl")))
                items.push_back(qa::QAItem::from_json(j, name + ".jsonl"));

            std::vector<eval::JudgedAnswer> answers;
            std::vector<eval::Ratings> ratings;
            std::vector<json> judged_lines;
            std::vector<json> rating_lines;

            for (const auto& region_id : region_order) {
                auto cit = captions.find(region_id);
                if (cit == captions.end())
                    throw_validation("no caption for region " + region_id);
                const SampleLine& s = samples[region_id];
                std::vector<gateway::RequestImage> images;
                if (cfg_.judge_sees_image)
                    images.push_back(
                        {gateway::ImageRole::focal_crop, read_blob(s.crop_blob)});

                for (const auto& item : items) {
                    if (item.region_id != region_id) continue;
                    auto ans = eval::judge_qa(judge, templates, cit->second, item, images);
                    judged_lines.push_back(ans.to_json());
                    answers.push_back(std::move(ans));
                }

                prompt::RegionContext ctx{s.dataset, s.site};
                const auto outcome =
                    eval::rate_caption(judge, templates, cit->second, ctx, images);
                json rl;
                rl["region_id"] = region_id;
                rl["fluency"] = outcome.ratings.fluency;
                rl["relevance"] = outcome.ratings.relevance;
                rl["factual_correctness"] = outcome.ratings.factual_correctness;
                rl["clinical_plausibility"] = outcome.ratings.clinical_plausibility;
                rl["retried"] = outcome.retried;
                rl["request_digest"] = outcome.request_digest;
                rating_lines.push_back(std::move(rl));
                ratings.push_back(outcome.ratings);
            }

            const auto meddlc = eval::score_meddlc(answers, items);
            DatasetScore ds;
            ds.regions = (long)region_order.size();
            ds.pos_total = meddlc.pos_total;
            ds.pos_correct = meddlc.pos_correct;
            ds.neg_total = meddlc.neg_total;
            ds.neg_correct = meddlc.neg_correct;
            ds.pos_accuracy = meddlc.pos_accuracy;
            ds.neg_accuracy = meddlc.neg_accuracy;
            ds.meddlc = meddlc.meddlc;
            ds.llm_score = eval::score_llm(ratings);
            card.per_dataset[name] = ds;

            fs::create_directories(run_dir_ / "judged" / spec.name);
            write_jsonl(run_dir_ / "judged" / spec.name / (name + ".jsonl"), judged_lines);
            fs::create_directories(run_dir_ / "ratings" / spec.name);
            write_jsonl(run_dir_ / "ratings" / spec.name / (name + ".jsonl"), rating_lines);
        }

        std::vector<double> pos, neg, llm;
        for (const auto& [name, ds] : card.per_dataset) {
            pos.push_back(ds.pos_accuracy);
            neg.push_back(ds.neg_accuracy);
            llm.push_back(ds.llm_score);
        }
        card.pos_accuracy = eval::aggregate_mean(pos);
        card.neg_accuracy = eval::aggregate_mean(neg);
        card.meddlc = eval::meddlc_overall(card.pos_accuracy, card.neg_accuracy);
        card.llm_score = eval::aggregate_mean(llm);

        write_text_file(run_dir_ / "scorecards" / (spec.name + ".json"),
                        canonical_dump(card.to_json()) + "\n");
    }
}

void Pipeline::stage_report(bool resume) {
    const std::vector<fs::path> outputs = {"report.txt", "report.json", "report.csv"};
    if (resume && all_exist(outputs)) return;

    std::vector<ScoreCard> cards;
    for (const auto& bj : cfg_.caption_backends) {
        const auto spec = gateway::BackendSpec::from_json(bj);
        const fs::path p = run_dir_ / "scorecards" / (spec.name + ".json");
        if (!fs::exists(p)) throw_config("missing scorecard for " + spec.name + "; run evaluate");
        cards.push_back(ScoreCard::from_json(read_json_file(p), spec.name + ".json"));
    }
    write_text_file(run_dir_ / "report.txt", emit_report(cards, ReportFormat::table_text));
    write_text_file(run_dir_ / "report.json", emit_report(cards, ReportFormat::machine_readable));
    write_text_file(run_dir_ / "report.csv", emit_report(cards, ReportFormat::delimited));
}

std::string Pipeline::report_text() const {
    const fs::path p = run_dir_ / "report.txt";
    if (!fs::exists(p)) throw_config("no report yet; run the report stage");
    return read_text_file(p);
}

}  // namespace medcap::run
