#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adapt/dataset.hpp"

namespace adapt::datagen {

struct BestEffortTaskConfig {
    std::size_t d = 20;
    std::size_t m = 1000;     // source size
    std::size_t n = 50;       // target size
    std::size_t test_size = 2000;
    double eta = 0.1;         // noisy fraction of the source
    double epsilon = 0.01;    // hyperplane perturbation ||w_p - w_q||
    std::uint64_t seed = 0;

    void validate() const;
};

struct BestEffortTask {
    LabeledDataset source;    // m rows; the last round(eta*m) are the noisy block
    LabeledDataset target;    // n rows
    LabeledDataset test;
    Vector w_p, w_q, u;
    std::vector<std::size_t> noisy_rows; // indices into source
    std::uint64_t seed = 0;
    BestEffortTaskConfig config;
};

/// Simulated binary task: target labels sgn(w_p . x) on N(0, I) features;
/// clean source rows labeled sgn(w_q . x) with ||w_p - w_q|| = epsilon; the
/// remaining round(eta*m) rows sit at a fixed anchor u (per-seed uniform draw
/// on the sphere of radius sqrt(d)) and carry label +1.
BestEffortTask gen_best_effort_task(const BestEffortTaskConfig& config);

struct CovariateShiftTaskConfig {
    std::size_t d = 16;
    std::size_t source_size = 500;
    std::size_t target_size = 300;
    std::size_t test_size = 1000;
    double epsilon = 0.0;        // halfspace threshold
    double sigma = 0.5;          // label noise scale
    double mixture_weight = 0.99;
    std::uint64_t seed = 0;

    void validate() const;
};

struct CovariateShiftTask {
    LabeledDataset source;        // labeled
    LabeledDataset target;        // labels generated but held out from DA training
    LabeledDataset test;
    Vector w_star;                // ground-truth regression vector
    Vector w_mix;                 // mixture hyperplane
    std::uint64_t seed = 0;
    CovariateShiftTaskConfig config;
};

/// Pure covariate shift: y = w* . x + N(0, sigma^2) identically on both
/// domains; target features N(0, I); source features a rejection-sampled
/// mixture putting `mixture_weight` on {w . x >= epsilon}.
CovariateShiftTask gen_covariate_shift_task(const CovariateShiftTaskConfig& config);

/// CSV schema: header f0,...,f{d-1},y,domain with domain in {source,target}.
LabeledDataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const LabeledDataset& data, const std::string& path);

/// Formats a double with enough digits to round-trip exactly.
std::string format_double(double v);

} // namespace adapt::datagen
