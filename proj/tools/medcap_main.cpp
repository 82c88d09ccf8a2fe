#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "medcap/core/error.hpp"
#include "medcap/core/jsonl.hpp"
#include "medcap/ingest/adapters.hpp"
#include "medcap/run/pipeline.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    bool resume = true;
    std::optional<std::uint64_t> seed;
    std::string format = "table";
    // standalone ingest form
    std::string adapter;
    std::string in_path;
    std::string images_dir;
    std::string out_path;
};

medcap::run::RunConfig load_config(const CliOptions& opts) {
    if (opts.config_path.empty()) medcap::throw_config("--config is required");
    medcap::json raw = medcap::read_json_file(opts.config_path);
    if (opts.seed) raw["seed"] = *opts.seed;  // part of the digest, like any config edit
    return medcap::run::RunConfig::from_json(
        raw, std::filesystem::path(opts.config_path).parent_path());
}

// `ingest vindr --in annotations.csv --images dir --out manifest.jsonl`:
// one adapter, no run directory.
int run_standalone_ingest(const CliOptions& opts) {
    if (opts.in_path.empty() || opts.images_dir.empty() || opts.out_path.empty())
        medcap::throw_config("ingest " + opts.adapter + " needs --in, --images, and --out");
    medcap::ingest::AdaptResult result;
    if (opts.adapter == "vindr")
        result = medcap::ingest::adapt_vindr(opts.in_path, opts.images_dir);
    else if (opts.adapter == "lidc")
        result = medcap::ingest::adapt_lidc(opts.in_path, opts.images_dir);
    else if (opts.adapter == "skincon")
        result = medcap::ingest::adapt_skincon(opts.images_dir, opts.in_path);
    else
        medcap::throw_config("unknown adapter '" + opts.adapter +
                             "' (expected vindr, lidc, or skincon)");
    medcap::ingest::save_manifest(result.manifest, opts.out_path);
    for (const auto& e : result.report.entries)
        std::cerr << "medcap: " << e.record_id << ": " << e.reason << "\n";
    std::cerr << "medcap: wrote " << result.manifest.records.size() << " records to "
              << opts.out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"medcap: reference-free benchmark for region-specific medical image captioning"};
    app.require_subcommand(1);

    CliOptions opts;
    const std::vector<std::pair<std::string, std::string>> verbs = {
        {"ingest", "Build validated dataset manifests"},
        {"detect-roi", "Fill in regions for images without annotations"},
        {"sample", "Select regions and build focal crops"},
        {"qa", "Instantiate verification questions"},
        {"generate", "Request captions from every configured backend"},
        {"evaluate", "Judge captions and compute scores"},
        {"report", "Render the result table"},
        {"run", "Run every stage in order"},
    };
    for (const auto& [name, desc] : verbs) {
        CLI::App* sub = app.add_subcommand(name, desc);
        auto* config_opt =
            sub->add_option("--config", opts.config_path, "Run configuration JSON");
        sub->add_flag("--resume,!--no-resume", opts.resume,
                      "Skip stages whose outputs already exist (default on)");
        sub->add_option("--seed", opts.seed, "Override the config seed");
        if (name == "report" || name == "run")
            sub->add_option("--format", opts.format, "table, json, or csv");
        if (name == "ingest") {
            sub->add_option("adapter", opts.adapter, "vindr, lidc, or skincon (standalone form)");
            sub->add_option("--in", opts.in_path, "Annotation table / scan listing");
            sub->add_option("--images", opts.images_dir, "Image directory");
            sub->add_option("--out", opts.out_path, "Manifest to write");
        } else {
            config_opt->required();
        }
    }

    CLI11_PARSE(app, argc, argv);
    const std::string verb = app.get_subcommands().front()->get_name();

    try {
        if (verb == "ingest" && !opts.adapter.empty()) return run_standalone_ingest(opts);

        medcap::run::Pipeline pipeline(load_config(opts));
        const auto format = medcap::run::report_format_from_string(opts.format);

        if (verb == "run") {
            pipeline.run_all(opts.resume);
        } else {
            pipeline.run_stage(verb, opts.resume);
        }
        if (verb == "run" || verb == "report") {
            const char* file = format == medcap::run::ReportFormat::table_text ? "report.txt"
                               : format == medcap::run::ReportFormat::machine_readable
                                   ? "report.json"
                                   : "report.csv";
            std::cout << medcap::read_text_file(pipeline.run_dir() / file);
        } else {
            std::cerr << "medcap: " << verb << " done (" << pipeline.run_dir().string() << ")\n";
        }
        return 0;
    } catch (const medcap::Error& e) {
        std::cerr << "medcap: error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "medcap: unexpected error: " << e.what() << "\n";
        return 1;
    }
}
