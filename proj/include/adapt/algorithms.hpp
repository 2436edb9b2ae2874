#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adapt/core.hpp"
#include "adapt/discrepancy.hpp"

namespace adapt::algorithms {

struct SbestHyperparams {
    double lambda_inf = 0.0;
    double lambda_1 = 0.0;
    double lambda_2 = 0.0;
    double d_hat = 0.0;          // labeled-discrepancy estimate, applied to source rows
    WeightVector p0;             // reference weights over the m+n rows
    double tau = 1e-6;           // convergence tolerance on the objective
    std::size_t max_iters = 100; // T
    WeightConstraint constraint = WeightConstraint::Simplex;
    bool explicit_index_discrepancy = false; // BEST: evaluate dis(q, p0) each weight step
    bool init_at_reference = false;          // start the weights at p0 instead of uniform
    std::size_t weight_step_iters = 300;
    double weight_step_size = 0.1;

    void validate(std::size_t total_rows) const;
};

struct BestDaHyperparams {
    double lambda_inf = 0.0;
    double lambda_1 = 0.0;
    double lambda_2 = 0.0;
    double d_bar = 0.0; // empirical unlabeled discrepancy
    WeightVector p0;    // reference weights over the m+n rows
    std::optional<double> mu_smooth; // softmax smoothing; eigen subgradients when unset
    double h_ridge = 0.0;            // fixed ridge added to the h-step fits
    double tau = 1e-6;
    std::size_t max_iters = 100;
    std::size_t weight_step_iters = 300;
    double weight_step_size = 0.1;

    void validate(std::size_t m, std::size_t n) const;
};

struct FitResult {
    LinearHypothesis hypothesis;
    std::vector<std::pair<std::string, WeightVector>> weights; // "q"; plus "p", "q_prime" for DA
    std::vector<double> objective_trace;
    bool converged = false;
    std::size_t iterations = 0;

    double objective_final() const {
        return objective_trace.empty() ? 0.0 : objective_trace.back();
    }
    const WeightVector& weight(const std::string& name) const;
};

/// argmin over the norm ball of sum_i q_i loss(h(x_i), y_i) + ridge ||w||^2.
/// Squared loss solves the regularized normal equations exactly (then
/// rescales into the ball); logistic runs projected gradient descent to
/// gradient norm 1e-6 or 5000 steps. `warm_start` seeds the logistic solve.
LinearHypothesis weighted_erm(const LabeledDataset& data, const WeightVector& q,
                              const HypothesisSpace& space, double ridge,
                              const LinearHypothesis* warm_start = nullptr);

/// sum_i q_i [loss_i + d_i] + lambda_inf ||q||_inf ||h||^2
///   + lambda_1 ||q - p0||_1 + lambda_2 ||q||_2^2, with d_i = d_hat on source rows.
double sbest_objective(const LinearHypothesis& h, const WeightVector& q,
                       const LabeledDataset& data, const SbestHyperparams& params,
                       const HypothesisSpace& space);

FitResult sbest_am(const LabeledDataset& data, const SbestHyperparams& params,
                   const HypothesisSpace& space, std::uint64_t seed = 0);

/// DCA on the joint (w, q) variable with the product decompositions
///   q l = ((q + l)^2 - q^2 - l^2) / 2 and
///   ||q||_inf ||h||^2 = ((||q||_inf + ||h||^2)^2 - ||q||_inf^2 - ||h||^4) / 2.
FitResult sbest_dc(const LabeledDataset& data, const SbestHyperparams& params,
                   const HypothesisSpace& space, std::uint64_t seed = 0);

/// (convex part, concave part) of the sbest DC split at (h, q); their
/// difference reconstructs sbest_objective.
std::pair<double, double> sbest_dc_parts(const LinearHypothesis& h, const WeightVector& q,
                                         const LabeledDataset& data,
                                         const SbestHyperparams& params,
                                         const HypothesisSpace& space);

/// Uniformly alpha-weighted source points: alpha/(m+n) on source rows and
/// (m(1-alpha)+n)/((m+n) n) on target rows. Sums to one.
WeightVector alpha_weights(std::size_t m, std::size_t n, double alpha);

struct AlphaFit {
    double alpha = 0.0;
    LinearHypothesis hypothesis;
};

/// Fits weighted ERM for each alpha in the grid and keeps the one with the
/// best validation metric (accuracy for logistic, MSE for squared); ties go
/// to the larger alpha.
AlphaFit alpha_reweighting_train(const LabeledDataset& data, const std::vector<double>& alpha_grid,
                                 const LabeledDataset& validation, const HypothesisSpace& space,
                                 double ridge);

double bestda_objective(const LinearHypothesis& h, const WeightVector& q, const WeightVector& p,
                        const WeightVector& q_prime, const LabeledDataset& data_S,
                        const LabeledDataset& data_S_prime, const BestDaHyperparams& params,
                        const HypothesisSpace& space);

FitResult bestda_am(const LabeledDataset& data_S, const LabeledDataset& data_S_prime,
                    const BestDaHyperparams& params, const HypothesisSpace& space,
                    std::uint64_t seed = 0);

struct DmResult {
    LinearHypothesis hypothesis;
    WeightVector stage1_weights;          // q* over the source rows
    std::vector<double> stage1_trace;
};

/// Two-stage discrepancy-minimization baseline: stage 1 minimizes the
/// unlabeled weighted discrepancy against the uniform target weights over
/// the source simplex; stage 2 is weighted ERM at those weights.
DmResult dm_baseline(const LabeledDataset& data_S, const LabeledDataset& data_S_prime,
                     double lambda, double ridge, const HypothesisSpace& space,
                     std::size_t stage1_iters = 500);

enum class BaselineKind { TargetOnly, SourceOnly, PooledUniform };

LinearHypothesis baseline_train(const LabeledDataset& data, BaselineKind which,
                                const HypothesisSpace& space, double ridge);

/// Weighted-ERM fits at several ridge levels plus the zero hypothesis;
/// the default candidate set for select_h0.
std::vector<LinearHypothesis> default_h0_candidates(const LabeledDataset& data,
                                                    const HypothesisSpace& space);

} // namespace adapt::algorithms
