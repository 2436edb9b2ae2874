#include "adapt/discrepancy.hpp"

#include <cmath>
#include <functional>

#include "adapt/rng.hpp"
#include "adapt/solvers.hpp"

namespace adapt::discrepancy {

namespace {

using WObjective = std::function<double(const Vector&)>;
using WGradient = std::function<Vector(const Vector&)>;

solvers::Projection feasible_projection(const HypothesisSpace& space) {
    if (space.local_ball) {
        Vector center = space.local_ball->center.w;
        double r = space.local_ball->radius;
        return [center, r](const Vector& v) { return linalg::project_ball(v, center, r); };
    }
    double lambda = space.radius;
    return [lambda](const Vector& v) { return linalg::project_ball(v, lambda); };
}

Vector random_feasible_point(const HypothesisSpace& space, std::size_t dim, Rng& rng) {
    // uniform in the ball: direction * radius * U^{1/d}
    Vector u = rng.unit_vector(dim);
    double radius = space.local_ball ? space.local_ball->radius : space.radius;
    double scale = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    Vector out(dim);
    for (std::size_t i = 0; i < dim; ++i)
        out[i] = scale * u[i] + (space.local_ball ? space.local_ball->center.w[i] : 0.0);
    return out;
}

struct SupResult {
    Vector w;
    double value = 0.0;
    double grad_norm = 0.0;
    std::size_t restarts_used = 0;
};

/// Maximizes f over the feasible hypothesis set by restarted projected
/// gradient ascent. Restart r draws from the deterministic child stream r of
/// the caller seed, so results are reproducible and monotone in the number
/// of restarts.
SupResult maximize_over_hypotheses(const WObjective& f, const WGradient& grad,
                                   const HypothesisSpace& space, std::size_t dim,
                                   const EstimatorSettings& settings) {
    auto project = feasible_projection(space);
    auto neg_f = [&](const Vector& w) { return -f(w); };
    auto neg_g = [&](const Vector& w) {
        Vector g = grad(w);
        for (auto& x : g) x = -x;
        return g;
    };

    solvers::PgdSettings pgd;
    pgd.step = settings.step;
    pgd.max_iters = settings.max_iters;
    pgd.tol = 1e-12;

    std::vector<Vector> starts;
    starts.push_back(Vector(dim, 0.0)); // origin (projected if infeasible)
    if (space.local_ball) starts.push_back(space.local_ball->center.w);
    Rng rng(settings.seed);
    for (std::size_t r = 0; r < settings.restarts; ++r) {
        Rng stream = rng.child(r);
        starts.push_back(random_feasible_point(space, dim, stream));
    }

    SupResult best;
    bool first = true;
    for (const auto& s : starts) {
        auto sol = solvers::projected_gradient_descent(neg_f, neg_g, project, s, pgd);
        double val = -sol.trace.back();
        if (first || val > best.value) {
            best.value = val;
            best.w = sol.x;
            best.grad_norm = norm2(grad(sol.x));
            first = false;
        }
    }
    best.restarts_used = settings.restarts;
    return best;
}

/// One-sided sup of weighted loss differences; `coeffs` holds the signed
/// per-example weights of the combined sample.
DiscrepancyEstimate weighted_loss_sup(const LabeledDataset& data, const Vector& coeffs,
                                      const HypothesisSpace& space,
                                      const EstimatorSettings& settings) {
    const std::size_t dim = data.dim();
    auto run_direction = [&](const Vector& c) {
        auto f = [&](const Vector& w) {
            double s = 0.0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                if (c[i] == 0.0) continue;
                s += c[i] * loss_value(space.loss, dot(w, data.features.row(i)), data.labels[i]);
            }
            return s;
        };
        auto g = [&](const Vector& w) {
            Vector grad(dim, 0.0);
            for (std::size_t i = 0; i < data.size(); ++i) {
                if (c[i] == 0.0) continue;
                double gi = c[i] * loss_grad_prediction(space.loss, dot(w, data.features.row(i)),
                                                        data.labels[i]);
                axpy(gi, data.features.row(i), grad);
            }
            return grad;
        };
        return maximize_over_hypotheses(f, g, space, dim, settings);
    };

    SupResult sup = run_direction(coeffs);
    if (settings.absolute) {
        SupResult reverse = run_direction(scaled(coeffs, -1.0));
        if (reverse.value > sup.value) sup = reverse;
    }

    DiscrepancyEstimate est;
    est.method = Method::GridRestart;
    est.restarts_used = sup.restarts_used;
    est.value = sup.value;
    est.raw_value = sup.value;
    est.final_grad_norm = sup.grad_norm;
    double radius = space.local_ball ? space.local_ball->center.norm_bound : space.radius;
    est.maximizer = LinearHypothesis{sup.w, 0.0, std::max(radius, norm2(sup.w))};
    return est;
}

} // namespace

DiscrepancyEstimate estimate_labeled_discrepancy(const LabeledDataset& data_P,
                                                 const LabeledDataset& data_Q,
                                                 const HypothesisSpace& space,
                                                 const EstimatorSettings& settings) {
    if (data_P.empty() || data_Q.empty())
        throw EmptyDataError("estimate_labeled_discrepancy: empty sample");
    if (data_P.dim() != data_Q.dim())
        throw DimensionError("estimate_labeled_discrepancy: dimension mismatch");
    space.validate();

    LabeledDataset all = combine(data_Q, data_P); // canonical: Q block then P block
    Vector coeffs(all.size(), 0.0);
    const double wp = 1.0 / static_cast<double>(data_P.size());
    const double wq = -1.0 / static_cast<double>(data_Q.size());
    for (std::size_t i = 0; i < data_Q.size(); ++i) coeffs[i] = wq;
    for (std::size_t i = 0; i < data_P.size(); ++i) coeffs[data_Q.size() + i] = wp;
    return weighted_loss_sup(all, coeffs, space, settings);
}

DiscrepancyEstimate estimate_local_unlabeled_discrepancy(const LabeledDataset& data_P,
                                                         const LabeledDataset& data_Q,
                                                         const LinearHypothesis& h0,
                                                         const HypothesisSpace& space,
                                                         const EstimatorSettings& settings) {
    if (data_P.empty() || data_Q.empty())
        throw EmptyDataError("estimate_local_unlabeled_discrepancy: empty sample");
    // freeze the second hypothesis: y_i := h0(x_i)
    LabeledDataset p = data_P;
    p.labels = h0.predict_all(p.features);
    LabeledDataset q = data_Q;
    q.labels = h0.predict_all(q.features);
    auto est = estimate_labeled_discrepancy(p, q, space, settings);
    est.frozen = h0;
    return est;
}

DiscrepancyEstimate index_weight_discrepancy(const WeightVector& q, const WeightVector& p0,
                                             const LabeledDataset& data,
                                             const HypothesisSpace& space,
                                             const EstimatorSettings& settings) {
    if (q.size() != data.size() || p0.size() != data.size())
        throw DimensionError("index_weight_discrepancy: weight length != example count");
    space.validate();
    Vector coeffs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) coeffs[i] = q.values[i] - p0.values[i];
    return weighted_loss_sup(data, coeffs, space, settings);
}

linalg::SymMatrix build_M(const Vector& q_prime, const Vector& p, const Matrix& target_features,
                          const Matrix& source_features) {
    if (q_prime.size() != target_features.rows())
        throw DimensionError("build_M: q' length != target rows");
    if (p.size() != source_features.rows())
        throw DimensionError("build_M: p length != source rows");
    if (target_features.cols() != source_features.cols())
        throw DimensionError("build_M: feature dimension mismatch");
    linalg::SymMatrix tgt = linalg::weighted_scatter(q_prime, target_features);
    linalg::SymMatrix src = linalg::weighted_scatter(p, source_features);
    Matrix m = tgt.matrix();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) -= src.matrix()(i, j);
    return linalg::SymMatrix(std::move(m));
}

UnlabeledDiscrepancy unlabeled_discrepancy(const Vector& q_prime, const Vector& p,
                                           const Matrix& target_features,
                                           const Matrix& source_features, double lambda) {
    auto m = build_M(q_prime, p, target_features, source_features);
    auto eig = linalg::sym_eigendecomposition(m);
    const double scale = 4.0 * lambda * lambda;

    UnlabeledDiscrepancy out;
    out.raw_lambda_max = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues.front();
    out.value = scale * std::max(0.0, out.raw_lambda_max);
    out.grad_q_prime.assign(q_prime.size(), 0.0);
    out.grad_p.assign(p.size(), 0.0);
    out.top_eigenvector.assign(m.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) out.top_eigenvector[i] = eig.vectors(i, 0);

    if (out.raw_lambda_max > 0.0) {
        for (std::size_t j = 0; j < q_prime.size(); ++j) {
            double d = dot(target_features.row(j), out.top_eigenvector);
            out.grad_q_prime[j] = scale * d * d;
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            double d = dot(source_features.row(i), out.top_eigenvector);
            out.grad_p[i] = -scale * d * d;
        }
    }
    return out;
}

SoftmaxDiscrepancy softmax_unlabeled_discrepancy(const Vector& q_prime, const Vector& p,
                                                 const Matrix& target_features,
                                                 const Matrix& source_features, double mu) {
    if (mu <= 0.0) throw InvalidParameterError("softmax_unlabeled_discrepancy: mu must be > 0");
    auto m = build_M(q_prime, p, target_features, source_features);
    auto eig = linalg::sym_eigendecomposition(m);
    const std::size_t k = m.size();

    // shifted log-sum-exp over eigenvalues, overflow-safe for large mu
    double top = eig.eigenvalues.front();
    double sum = 0.0;
    Vector softmax(k);
    for (std::size_t i = 0; i < k; ++i) {
        softmax[i] = std::exp(mu * (eig.eigenvalues[i] - top));
        sum += softmax[i];
    }
    for (auto& s : softmax) s /= sum;

    SoftmaxDiscrepancy out;
    out.value = top + std::log(sum) / mu;

    // e^{mu M} / Tr e^{mu M} = V diag(softmax) V^T, so the gradient entries are
    // softmax-weighted squared projections of the feature rows
    auto weighted_quadratic = [&](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (softmax[c] < 1e-300) continue;
            double d = 0.0;
            for (std::size_t i = 0; i < k; ++i) d += eig.vectors(i, c) * x[i];
            s += softmax[c] * d * d;
        }
        return s;
    };

    out.grad_q_prime.resize(q_prime.size());
    for (std::size_t j = 0; j < q_prime.size(); ++j)
        out.grad_q_prime[j] = weighted_quadratic(target_features.row(j));
    out.grad_p.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        out.grad_p[i] = -weighted_quadratic(source_features.row(i));
    return out;
}

double empirical_unlabeled_discrepancy(const LabeledDataset& data_P, const LabeledDataset& data_Q,
                                       double lambda) {
    if (data_P.empty() || data_Q.empty())
        throw EmptyDataError("empirical_unlabeled_discrepancy: empty sample");
    Vector q_prime(data_P.size(), 1.0 / static_cast<double>(data_P.size()));
    Vector p(data_Q.size(), 1.0 / static_cast<double>(data_Q.size()));
    return unlabeled_discrepancy(q_prime, p, data_P.features, data_Q.features, lambda).value;
}

namespace {

Vector residual_moment(const LabeledDataset& data, const LinearHypothesis& h0) {
    Vector v(data.dim(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        double r = data.labels[i] - h0.predict(data.features.row(i));
        axpy(r, data.features.row(i), v);
    }
    for (auto& x : v) x /= static_cast<double>(data.size());
    return v;
}

} // namespace

double delta_label_discrepancy(const LabeledDataset& data_P, const LabeledDataset& data_Q,
                               const LinearHypothesis& h0, double lambda) {
    if (data_P.empty() || data_Q.empty())
        throw EmptyDataError("delta_label_discrepancy: empty sample");
    if (data_P.dim() != data_Q.dim())
        throw DimensionError("delta_label_discrepancy: dimension mismatch");
    Vector vp = residual_moment(data_P, h0);
    Vector vq = residual_moment(data_Q, h0);
    for (std::size_t i = 0; i < vp.size(); ++i) vp[i] -= vq[i];
    return lambda * norm2(vp);
}

double eta_label_discrepancy(const LabeledDataset& data_P, const LabeledDataset& data_Q,
                             const LinearHypothesis& h0) {
    if (data_P.empty() || data_Q.empty())
        throw EmptyDataError("eta_label_discrepancy: empty sample");
    auto mean_abs_residual = [&](const LabeledDataset& d) {
        double s = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i)
            s += std::fabs(d.labels[i] - h0.predict(d.features.row(i)));
        return s / static_cast<double>(d.size());
    };
    return mean_abs_residual(data_P) + mean_abs_residual(data_Q);
}

LinearHypothesis select_h0(const std::vector<LinearHypothesis>& candidates,
                           const LabeledDataset& target_sample, const LabeledDataset& data_Q,
                           H0Mode mode, double lambda) {
    if (candidates.empty()) throw EmptyDataError("select_h0: empty candidate set");
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        double score = mode == H0Mode::Delta
                           ? delta_label_discrepancy(target_sample, data_Q, candidates[c], lambda)
                           : eta_label_discrepancy(target_sample, data_Q, candidates[c]);
        if (c == 0 || score < best_score ||
            (score == best_score && norm2(candidates[c].w) < norm2(candidates[best].w))) {
            best = c;
            best_score = score;
        }
    }
    return candidates[best];
}

} // namespace adapt::discrepancy
