#pragma once

#include "qpk/classical.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qpk::harness {

struct DatasetSpec {
    int d = 4;
    int d_prime = 2;
    std::vector<double> noise = {0.1};
    int n = 32;
    double train_fraction = 0.5;
    bool noise_is_variance = false;
};

struct ModelSpec {
    std::vector<int> layers = {1};
    std::string loss = "MSE";
    std::string optimizer = "ADAM";
    double learning_rate = 0.1;
    int epochs = 1000;
    bool double_zz_for_d2 = false;
};

struct KernelSpec {
    bool include_final_epoch = false; // path-kernel mean over t = 0..T-1 by default
    bool effective = false;
    double effective_rel_tol = 1e-6;
    std::string qntk_at = "final"; // "final" or "init": the tangent-kernel comparator point
};

struct SvmSpec {
    double c = 1.0;
    double tol = 1e-3;
    int max_passes = 200;
};

struct BaselineSpec {
    std::vector<int> dims = {4, 12, 24};
    int d_prime = 3;
    std::vector<double> noise = {0.0, 0.5, 1.0};
    int repeats = 5;
    int pool = 10;
    int epochs = 1000;
    double learning_rate = 0.001;
    double train_fraction = 0.75;
    std::string select_by = "test";
    /// Setting of the W1-shrinkage snapshot: D_{w1_d, d', w1_noise, 16*w1_d}.
    int w1_d = 24;
    double w1_noise = 0.8;
};

/// Everything a run needs. Serialization is lossless; the provenance hash
/// covers all fields except output_dir and jobs (neither changes results).
struct ExperimentConfig {
    DatasetSpec dataset;
    ModelSpec model;
    KernelSpec kernel;
    SvmSpec svm;
    std::optional<BaselineSpec> baseline;
    std::vector<std::uint64_t> seeds = {1};
    std::string output_dir = "out";
    int jobs = 0; // 0: use QPK_JOBS from the environment, else 1

    void validate() const;
    std::string to_json_text() const;
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);

    std::string config_hash() const;
    std::filesystem::path run_root() const; // output_dir / config_hash
    int effective_jobs() const;
};

struct MetricsRow {
    double eps = 0.0;
    int layers = 0;
    std::uint64_t seed = 0;
    std::string kernel;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double final_loss = 0.0;
    double param_deviation = 0.0;
};

struct CellFailure {
    std::string stage;
    std::string cell;
    std::string message;
};

struct RunArtifacts {
    std::filesystem::path root;
    std::vector<MetricsRow> metrics;
    std::vector<CellFailure> failures;
};

/// Pipeline stages; each reads the previous stage's files from the run root,
/// records per-cell failures, and skips cells whose inputs are missing. An
/// artifact whose recorded config hash disagrees with the active config
/// raises ProvenanceError instead.
void stage_gen_data(const ExperimentConfig& cfg, std::vector<CellFailure>& failures);
void stage_train(const ExperimentConfig& cfg, std::vector<CellFailure>& failures);
void stage_kernels(const ExperimentConfig& cfg, std::vector<CellFailure>& failures);
std::vector<MetricsRow> stage_svm(const ExperimentConfig& cfg,
                                  std::vector<CellFailure>& failures);

/// Full pipeline: gen-data, train, kernels, svm; writes metrics.csv and
/// failures.csv under the run root.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

std::vector<MetricsRow> load_metrics(const std::filesystem::path& csv_path);
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

struct BaselineArtifacts {
    std::filesystem::path root;
    std::vector<classical::ComparisonRow> rows;
    classical::W1Shrinkage w1;
};

/// Classical comparison pipeline; writes baseline/comparison.csv, the W1
/// snapshots and a PSD check table under the run root.
BaselineArtifacts run_baseline(const ExperimentConfig& cfg);

/// Accuracy-vs-depth curves (mean and standard deviation over seeds), loss
/// and deviation curves per depth, as CSV plus SVG, under <root>/report.
void write_report(const ExperimentConfig& cfg);

int cli(int argc, const char* const* argv);

} // namespace qpk::harness
