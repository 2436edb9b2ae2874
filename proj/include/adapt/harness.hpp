#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adapt/algorithms.hpp"
#include "adapt/datagen.hpp"

namespace adapt::harness {

using ParamGrid = std::map<std::string, std::vector<double>>;
using ParamSet = std::map<std::string, double>;

struct AlgorithmConfig {
    std::string name; // sbest-am | sbest-dc | best-da | dm | alpha | target-only | source-only | pooled
    ParamGrid grid;
};

enum class TaskKind { BestEffort, CovariateShift, Csv };

struct CsvTask {
    std::string source_path, target_path, test_path;
};

struct ExperimentConfig {
    TaskKind task_kind = TaskKind::BestEffort;
    datagen::BestEffortTaskConfig best_effort;
    datagen::CovariateShiftTaskConfig covariate_shift;
    CsvTask csv;
    std::vector<std::size_t> n_sweep; // optional target-size sweep (best-effort)

    HypothesisSpace space;
    std::vector<AlgorithmConfig> algorithms;
    std::vector<std::uint64_t> seeds;
    double validation_fraction = 0.1;
    std::size_t da_validation_size = 50;
    std::size_t d_hat_restarts = 8;
    std::size_t workers = 1;
    double fit_budget_sec = 600.0;
    std::string output_dir = "out";

    void validate() const;
};

/// Parses the JSON schema documented in the README. Throws ConfigError.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

struct CellResult {
    std::string algorithm;
    std::size_t n = 0; // target-size sweep point (0 when not sweeping)
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    double test_accuracy = 0.0;
    double test_mse = 0.0;
    double q_bar = 0.0;
    double q_l2 = 0.0;
    double noisy_mass = -1.0; // -1 when no noise metadata exists
    double runtime_sec = 0.0;
    ParamSet chosen;
};

struct Aggregate {
    std::string algorithm;
    std::size_t n = 0;
    std::size_t cells = 0, failures = 0;
    double mean_accuracy = 0.0, std_accuracy = 0.0;
    double mean_mse = 0.0, std_mse = 0.0;
    double mean_noisy_mass = -1.0;
};

struct ExperimentResult {
    std::vector<CellResult> cells;
    std::vector<Aggregate> aggregates;
    std::size_t failures = 0;
};

/// Exhaustive grid evaluation on (train, validation); selection by
/// validation accuracy (logistic) or MSE (squared). Ties prefer the smaller
/// ||q - p0||_1 at the optimum, then the smaller grid index.
ParamSet cross_validate(const std::string& algorithm, const ParamGrid& grid,
                        const LabeledDataset& train, const LabeledDataset& validation,
                        const HypothesisSpace& space, std::uint64_t seed);

/// One deterministic fit of a named algorithm on the combined canonical
/// dataset. Recognized params (missing keys take defaults): lambda_inf,
/// lambda1, lambda2, d_hat, d_bar, tau, max_iters, ridge, alpha, mu_smooth,
/// weight_step_iters, weight_step_size.
struct AlgoRun {
    LinearHypothesis hypothesis;
    std::optional<algorithms::FitResult> fit;
    ParamSet params;
};
AlgoRun run_algorithm(const std::string& name, const ParamSet& params, const LabeledDataset& data,
                      const HypothesisSpace& space, std::uint64_t seed);

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes results.csv, summary.json and curves.csv into the output dir.
/// results.csv and curves.csv are byte-deterministic for a fixed config;
/// wall-clock runtimes are reported only in summary.json.
void emit_results(const ExperimentResult& result, const ExperimentConfig& config);

} // namespace adapt::harness
