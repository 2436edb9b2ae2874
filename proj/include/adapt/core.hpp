#pragma once

#include "adapt/dataset.hpp"
#include "adapt/hypothesis.hpp"
#include "adapt/weights.hpp"

namespace adapt {

/// sum_i q_i * loss(h(x_i), y_i). Linear in q.
double weighted_empirical_loss(const LinearHypothesis& h, const LabeledDataset& data,
                               const WeightVector& q, LossKind loss = LossKind::Squared);

/// Per-example losses of h on data.
Vector per_example_losses(const LinearHypothesis& h, const LabeledDataset& data, LossKind loss);

struct Metrics {
    double accuracy = 0.0; // fraction with sign(h(x)) == y
    double mse = 0.0;      // mean squared residual
};

Metrics evaluate_metrics(const LinearHypothesis& h, const LabeledDataset& data);

} // namespace adapt
