#pragma once

#include <optional>
#include <span>
#include <vector>

#include "adapt/dataset.hpp"
#include "adapt/matrix.hpp"

namespace adapt {

enum class LossKind { Squared, Logistic };

/// loss(prediction, label). Squared: (p - y)^2. Logistic: ln(1 + e^{-y p}),
/// labels restricted to {-1, +1}. Values are not clipped to [0, 1]; see the
/// README note on loss ranges.
double loss_value(LossKind kind, double prediction, double label);

/// d loss / d prediction.
double loss_grad_prediction(LossKind kind, double prediction, double label);

/// Linear predictor x -> w . x + bias constrained to ||w||_2 <= norm_bound.
/// Solvers keep bias at zero and fold any intercept into an appended
/// constant-1 feature, so the ball constraint covers the whole parameter.
struct LinearHypothesis {
    Vector w;
    double bias = 0.0;
    double norm_bound = 1.0;

    double predict(std::span<const double> x) const { return dot(w, x) + bias; }

    Vector predict_all(const Matrix& features) const {
        Vector out(features.rows());
        for (std::size_t i = 0; i < features.rows(); ++i) out[i] = predict(features.row(i));
        return out;
    }

    double norm_sq() const { return norm2_sq(w) + bias * bias; }

    void validate() const;

    static LinearHypothesis zero(std::size_t dim, double norm_bound) {
        return LinearHypothesis{Vector(dim, 0.0), 0.0, norm_bound};
    }
};

/// Optional restriction of the hypothesis set to a ball around a reference
/// fit, radius on the order of 1/sqrt(n1).
struct LocalBall {
    LinearHypothesis center;
    double radius = 0.0;
};

struct HypothesisSpace {
    LossKind loss = LossKind::Squared;
    double radius = 1.0; // norm bound for w
    std::optional<LocalBall> local_ball;

    void validate() const;
};

} // namespace adapt
