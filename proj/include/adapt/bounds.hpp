#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adapt/core.hpp"

namespace adapt::bounds {

/// Itemized evaluation of one generalization bound at a given (h, q).
/// total always equals the sum of the listed terms.
struct BoundReport {
    std::vector<std::pair<std::string, double>> terms;
    double total = 0.0;

    // echoed inputs
    double delta = 0.0;
    double q_l1 = 0.0, q_l2 = 0.0, q_linf = 0.0;
    double q_bar = 0.0;          // mass on source rows
    double q_p0_l1 = 0.0;        // ||q - p0||_1 where applicable
    bool degenerate_warning = false;
    std::vector<std::string> surrogate_terms; // names of terms that are upper-bound surrogates

    double term(const std::string& name) const;
    bool has_term(const std::string& name) const;
};

struct RademacherEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t sigma_samples = 0;
};

struct RademacherSettings {
    std::size_t num_sigma_samples = 64;
    std::size_t restarts = 8;
    std::uint64_t seed = 0;
    std::size_t max_iters = 200;
};

/// Monte-Carlo estimate of the q-weighted Rademacher complexity: mean over
/// sigma draws of sup_h sum_i sigma_i q_i loss(h(x_i), y_i), inner suprema by
/// restarted projected gradient ascent.
RademacherEstimate rademacher_estimate(const LabeledDataset& data, const WeightVector& q,
                                       const HypothesisSpace& space,
                                       const RademacherSettings& settings = {});

/// Cheap multiplicative upper bound: ||q||_inf (m+n) * uniform-weights estimate.
double rademacher_upper_bound(const LabeledDataset& data, const WeightVector& q,
                              const HypothesisSpace& space,
                              const RademacherSettings& settings = {});

/// Fixed-q bound: weighted loss + discrepancy + 2 Rademacher
/// + ||q||_2 sqrt(log(1/delta)/2). When ||q||_1 != 1 the mixed-measure
/// discrepancy is surrogated by q_bar d_hat + |1 - ||q||_1|.
BoundReport bound_theorem1(const LinearHypothesis& h, const WeightVector& q,
                           const LabeledDataset& data, double d_hat, double delta,
                           double rademacher, LossKind loss = LossKind::Squared);

/// Weight-uniform bound: q_bar d_hat + dis(q, p0) + 2 Rademacher
/// + 6 ||q - p0||_1 + [||q||_2 + 2||q-p0||_1] [loglog + sqrt(log(2/delta)/2)].
/// Requires ||q - p0||_1 < 1.
BoundReport bound_corollary4(const LinearHypothesis& h, const WeightVector& q,
                             const WeightVector& p0, const LabeledDataset& data, double d_hat,
                             double delta, double rademacher, double index_discrepancy,
                             LossKind loss = LossKind::Squared);

struct DaSurrogates {
    double dis_q_prime_p = 0.0;   // unlabeled weighted discrepancy surrogate for dis(q', p)
    double d_bar = 0.0;           // empirical unlabeled discrepancy
    double label_correction = 0.0; // 2*delta_{H,h0} or mu*eta correction, when available
};

/// Domain-adaptation bound with labeled terms replaced by unlabeled
/// surrogates; surrogate term names are recorded in the report.
BoundReport bound_theorem5_da(const LinearHypothesis& h, const WeightVector& q,
                              const WeightVector& p, const WeightVector& q_prime,
                              const LabeledDataset& data_S, const DaSurrogates& surrogates,
                              double delta, double rademacher,
                              LossKind loss = LossKind::Squared);

} // namespace adapt::bounds
