#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "adapt/core.hpp"
#include "adapt/linalg.hpp"

namespace adapt::discrepancy {

enum class Method { GridRestart, Eigen, Softmax };

/// Result of a supremum-style discrepancy estimation. Gradient-ascent
/// estimates are certified lower bounds of the supremum; eigenvalue values
/// are exact for the squared-loss linear class.
struct DiscrepancyEstimate {
    double value = 0.0;
    LinearHypothesis maximizer;
    std::optional<LinearHypothesis> frozen; // second hypothesis for local variants
    Method method = Method::GridRestart;
    std::size_t restarts_used = 0;
    double final_grad_norm = 0.0;
    double raw_value = 0.0; // unclamped eigenvalue diagnostic for Eigen variants
};

struct EstimatorSettings {
    std::size_t restarts = 16;
    std::uint64_t seed = 0;
    bool absolute = false; // max of both directions instead of one-sided
    std::size_t max_iters = 300;
    double step = 0.5;
};

/// d-hat: sup over the hypothesis set (or the local ball when set) of
///   mean_P loss - mean_Q loss,
/// by projected gradient ascent from `restarts` random feasible starts plus
/// the deterministic origin / ball-center starts.
DiscrepancyEstimate estimate_labeled_discrepancy(const LabeledDataset& data_P,
                                                 const LabeledDataset& data_Q,
                                                 const HypothesisSpace& space,
                                                 const EstimatorSettings& settings = {});

/// Local unlabeled discrepancy with the second hypothesis frozen at h0:
///   sup_h mean_P loss(h(x), h0(x)) - mean_Q loss(h(x), h0(x)).
DiscrepancyEstimate estimate_local_unlabeled_discrepancy(const LabeledDataset& data_P,
                                                         const LabeledDataset& data_Q,
                                                         const LinearHypothesis& h0,
                                                         const HypothesisSpace& space,
                                                         const EstimatorSettings& settings = {});

/// dis(q, p0) = sup_h sum_i (q_i - p0_i) loss(h(x_i), y_i).
DiscrepancyEstimate index_weight_discrepancy(const WeightVector& q, const WeightVector& p0,
                                             const LabeledDataset& data,
                                             const HypothesisSpace& space,
                                             const EstimatorSettings& settings = {});

/// M(q', p) = sum_j q'_j x'_j x'_j^T - sum_i p_i x_i x_i^T. Affine in (q', p).
linalg::SymMatrix build_M(const Vector& q_prime, const Vector& p, const Matrix& target_features,
                          const Matrix& source_features);

struct UnlabeledDiscrepancy {
    double value = 0.0;          // 4 Lambda^2 max(0, lambda_max)
    double raw_lambda_max = 0.0; // unclamped top eigenvalue of M
    Vector grad_q_prime;         // subgradient wrt q' (zero when lambda_max <= 0)
    Vector grad_p;               // subgradient wrt p
    Vector top_eigenvector;
};

/// Squared-loss unlabeled weighted discrepancy and its eigen subgradient.
UnlabeledDiscrepancy unlabeled_discrepancy(const Vector& q_prime, const Vector& p,
                                           const Matrix& target_features,
                                           const Matrix& source_features, double lambda);

struct SoftmaxDiscrepancy {
    double value = 0.0; // f(q', p) = (1/mu) log Tr exp(mu M); no 4 Lambda^2 scale
    Vector grad_q_prime;
    Vector grad_p;
};

/// Smooth surrogate of lambda_max with the sandwich
///   lambda_max <= f <= lambda_max + log(k)/mu.
/// Callers apply the 4 Lambda^2 scale symmetrically with
/// unlabeled_discrepancy.
SoftmaxDiscrepancy softmax_unlabeled_discrepancy(const Vector& q_prime, const Vector& p,
                                                 const Matrix& target_features,
                                                 const Matrix& source_features, double mu);

/// Uniform-weights empirical unlabeled discrepancy (d-bar).
double empirical_unlabeled_discrepancy(const LabeledDataset& data_P, const LabeledDataset& data_Q,
                                       double lambda);

/// Squared-loss label discrepancy delta: closed form
///   Lambda * || mean_P[x (y - h0(x))] - mean_Q[x (y - h0(x))] ||_2.
double delta_label_discrepancy(const LabeledDataset& data_P, const LabeledDataset& data_Q,
                               const LinearHypothesis& h0, double lambda);

/// Lipschitz-loss label discrepancy eta: mean_P |y - h0(x)| + mean_Q |y - h0(x)|.
double eta_label_discrepancy(const LabeledDataset& data_P, const LabeledDataset& data_Q,
                             const LinearHypothesis& h0);

enum class H0Mode { Delta, Eta };

/// Picks the candidate minimizing the chosen label discrepancy against
/// (target_sample, data_Q); ties broken by smaller ||w||.
LinearHypothesis select_h0(const std::vector<LinearHypothesis>& candidates,
                           const LabeledDataset& target_sample, const LabeledDataset& data_Q,
                           H0Mode mode, double lambda);

} // namespace adapt::discrepancy
