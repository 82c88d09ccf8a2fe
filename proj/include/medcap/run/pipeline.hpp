#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "medcap/run/config.hpp"
#include "medcap/run/report.hpp"

namespace medcap::run {

/// Executes the benchmark stages against a run directory derived from the
/// config digest: <output_dir>/runs/<digest12>. Stage outputs live under that
/// directory; the gateway cache lives beside it at <output_dir>/cache so it
/// survives run-directory deletion. With resume on (the default), a stage
/// whose outputs already exist is skipped.
class Pipeline {
public:
    explicit Pipeline(RunConfig cfg);

    static const std::vector<std::string>& stage_names();

    /// Runs one named stage; unknown names are a config error. Errors are
    /// rethrown with the stage name prefixed.
    void run_stage(const std::string& name, bool resume = true);
    void run_all(bool resume = true);

    const std::filesystem::path& run_dir() const { return run_dir_; }
    const std::string& config_digest() const { return digest_; }

    /// Rendered table report (report stage must have run).
    std::string report_text() const;

private:
    RunConfig cfg_;
    std::string digest_;
    std::filesystem::path out_;
    std::filesystem::path run_dir_;
    std::filesystem::path cache_dir_;

    void ensure_run_json();
    bool all_exist(const std::vector<std::filesystem::path>& rel) const;
    void write_log(const std::string& stage, const std::string& dataset,
                   const ValidationReport& report) const;
    std::filesystem::path blob_path(const std::string& digest) const;
    std::string store_blob(const std::vector<std::uint8_t>& png) const;
    std::string read_blob(const std::string& digest) const;

    void stage_ingest(bool resume);
    void stage_detect_roi(bool resume);
    void stage_sample(bool resume);
    void stage_qa(bool resume);
    void stage_generate(bool resume);
    void stage_evaluate(bool resume);
    void stage_report(bool resume);
};

}  // namespace medcap::run
