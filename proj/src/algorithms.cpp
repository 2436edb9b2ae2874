#include "adapt/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "adapt/rng.hpp"
#include "adapt/solvers.hpp"

namespace adapt::algorithms {

namespace {

/// Cholesky solve of a symmetric positive-definite system; nullopt when a
/// pivot collapses (singular system).
std::optional<Vector> solve_spd(Matrix a, Vector b) {
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (d <= 1e-300) return std::nullopt;
        d = std::sqrt(d);
        a(j, j) = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / d;
        }
    }
    // forward then backward substitution
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
        b[i] = s / a(i, i);
    }
    for (std::size_t ii = n; ii > 0; --ii) {
        std::size_t i = ii - 1;
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a(k, i) * b[k];
        b[i] = s / a(i, i);
    }
    return b;
}

std::size_t argmax_abs(const Vector& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::fabs(v[i]) > std::fabs(v[best])) best = i;
    return best;
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

solvers::Projection weight_projection(WeightConstraint c) {
    if (c == WeightConstraint::Simplex)
        return [](const Vector& v) { return linalg::project_simplex(v); };
    return [](const Vector& v) { return linalg::project_box(v, 0.0, 1.0); };
}

discrepancy::EstimatorSettings best_mode_settings() {
    discrepancy::EstimatorSettings s;
    s.restarts = 4;
    s.max_iters = 150;
    s.seed = 0x5be5f;
    return s;
}

} // namespace

void SbestHyperparams::validate(std::size_t total_rows) const {
    if (lambda_inf < 0 || lambda_1 < 0 || lambda_2 < 0)
        throw InvalidParameterError("sbest: lambda hyperparameters must be >= 0");
    if (d_hat < 0) throw InvalidParameterError("sbest: discrepancy estimate must be >= 0");
    if (tau <= 0) throw InvalidParameterError("sbest: tau must be > 0");
    if (max_iters < 1) throw InvalidParameterError("sbest: T must be >= 1");
    if (p0.size() != total_rows) throw DimensionError("sbest: p0 length != m+n");
}

void BestDaHyperparams::validate(std::size_t m, std::size_t n) const {
    if (lambda_inf < 0 || lambda_1 < 0 || lambda_2 < 0)
        throw InvalidParameterError("best-da: lambda hyperparameters must be >= 0");
    if (tau <= 0) throw InvalidParameterError("best-da: tau must be > 0");
    if (max_iters < 1) throw InvalidParameterError("best-da: T must be >= 1");
    if (p0.size() != m + n) throw DimensionError("best-da: p0 length != m+n");
    if (mu_smooth && *mu_smooth <= 0)
        throw InvalidParameterError("best-da: mu_smooth must be > 0");
}

const WeightVector& FitResult::weight(const std::string& name) const {
    for (const auto& [key, value] : weights)
        if (key == name) return value;
    throw InvalidParameterError("fit result carries no weight vector named " + name);
}

LinearHypothesis weighted_erm(const LabeledDataset& data, const WeightVector& q,
                              const HypothesisSpace& space, double ridge,
                              const LinearHypothesis* warm_start) {
    if (q.size() != data.size())
        throw DimensionError("weighted_erm: weight length != example count");
    if (ridge < 0) throw InvalidParameterError("weighted_erm: ridge must be >= 0");
    const std::size_t d = data.dim();
    const double lambda = space.radius;

    if (space.loss == LossKind::Squared) {
        Matrix a(d, d);
        Vector b(d, 0.0);
        for (std::size_t r = 0; r < data.size(); ++r) {
            double w = q.values[r];
            if (w == 0.0) continue;
            auto x = data.features.row(r);
            for (std::size_t i = 0; i < d; ++i) {
                double wi = w * x[i];
                // q_i (h(x)-y)^2 normal equations: (X^T diag(q) X + ridge I) w = X^T diag(q) y
                for (std::size_t j = i; j < d; ++j) a(i, j) += wi * x[j];
                b[i] += wi * data.labels[r];
            }
        }
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);
            a(i, i) += ridge;
        }
        auto sol = solve_spd(std::move(a), std::move(b));
        if (!sol)
            throw RegularizationRequiredError(
                "weighted_erm: singular normal equations; a positive ridge is required");
        Vector w = std::move(*sol);
        double n = norm2(w);
        if (n > lambda) w = scaled(w, lambda / n);
        return LinearHypothesis{std::move(w), 0.0, lambda};
    }

    // logistic: projected gradient descent with backtracking
    Vector w = warm_start ? warm_start->w : Vector(d, 0.0);
    w = linalg::project_ball(w, lambda);

    auto objective = [&](const Vector& v) {
        double s = ridge * norm2_sq(v);
        for (std::size_t r = 0; r < data.size(); ++r) {
            if (q.values[r] == 0.0) continue;
            s += q.values[r] *
                 loss_value(LossKind::Logistic, dot(v, data.features.row(r)), data.labels[r]);
        }
        return s;
    };
    auto gradient = [&](const Vector& v) {
        Vector g = scaled(v, 2.0 * ridge);
        for (std::size_t r = 0; r < data.size(); ++r) {
            if (q.values[r] == 0.0) continue;
            double gi = q.values[r] * loss_grad_prediction(LossKind::Logistic,
                                                           dot(v, data.features.row(r)),
                                                           data.labels[r]);
            axpy(gi, data.features.row(r), g);
        }
        return g;
    };

    double fx = objective(w);
    double step = 1.0;
    for (std::size_t t = 0; t < 5000; ++t) {
        Vector g = gradient(w);
        if (norm2(g) <= 1e-6) break;
        bool accepted = false;
        for (int b = 0; b < 50; ++b) {
            Vector cand(w.size());
            for (std::size_t i = 0; i < w.size(); ++i) cand[i] = w[i] - step * g[i];
            cand = linalg::project_ball(cand, lambda);
            double fc = objective(cand);
            if (fc <= fx) {
                w = std::move(cand);
                fx = fc;
                accepted = true;
                step = std::min(step * 1.25, 1.0);
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    return LinearHypothesis{std::move(w), 0.0, lambda};
}

double sbest_objective(const LinearHypothesis& h, const WeightVector& q,
                       const LabeledDataset& data, const SbestHyperparams& params,
                       const HypothesisSpace& space) {
    if (q.size() != data.size() || params.p0.size() != data.size())
        throw DimensionError("sbest_objective: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double d_i = data.domains[i] == Domain::Source ? params.d_hat : 0.0;
        s += q.values[i] *
             (loss_value(space.loss, h.predict(data.features.row(i)), data.labels[i]) + d_i);
    }
    s += params.lambda_inf * q.linf() * h.norm_sq();
    s += params.lambda_2 * norm2_sq(q.values);
    if (params.explicit_index_discrepancy) {
        s += discrepancy::index_weight_discrepancy(q, params.p0, data, space,
                                                   best_mode_settings())
                 .value;
    } else {
        s += params.lambda_1 * l1_distance(q.values, params.p0.values);
    }
    return s;
}

namespace {

/// Minimizes the weight-block objective at a fixed hypothesis. In BEST mode
/// the convex dis(q, p0) term is handled through its supporting hyperplane at
/// the current point (the per-example losses of the maximizing hypothesis);
/// the caller re-evaluates the true objective and rejects ascent steps.
WeightVector sbest_weight_step(const LabeledDataset& data, const Vector& c,
                               const WeightVector& q_start, double h_norm_sq,
                               const SbestHyperparams& params, const HypothesisSpace& space) {
    Vector disc_plane; // BEST supporting hyperplane
    if (params.explicit_index_discrepancy) {
        auto est = discrepancy::index_weight_discrepancy(q_start, params.p0, data, space,
                                                         best_mode_settings());
        disc_plane = per_example_losses(est.maximizer, data, space.loss);
    }

    auto f = [&](const Vector& q) {
        double s = dot(c, q);
        s += params.lambda_inf * h_norm_sq * norm_inf(q);
        s += params.lambda_2 * norm2_sq(q);
        if (params.explicit_index_discrepancy) {
            for (std::size_t i = 0; i < q.size(); ++i)
                s += (q[i] - params.p0.values[i]) * disc_plane[i];
        } else {
            s += params.lambda_1 * l1_distance(q, params.p0.values);
        }
        return s;
    };
    auto g = [&](const Vector& q) {
        Vector grad = c;
        std::size_t amax = argmax_abs(q);
        grad[amax] += params.lambda_inf * h_norm_sq * sign_of(q[amax]);
        for (std::size_t i = 0; i < q.size(); ++i) {
            grad[i] += 2.0 * params.lambda_2 * q[i];
            if (params.explicit_index_discrepancy)
                grad[i] += disc_plane[i];
            else
                grad[i] += params.lambda_1 * sign_of(q[i] - params.p0.values[i]);
        }
        return grad;
    };

    solvers::PgdSettings pgd;
    pgd.step = params.weight_step_size;
    pgd.max_iters = params.weight_step_iters;
    pgd.tol = 1e-12;
    auto sol = solvers::projected_gradient_descent(f, g, weight_projection(params.constraint),
                                                   q_start.values, pgd);
    return WeightVector{std::move(sol.x), params.constraint};
}

} // namespace

FitResult sbest_am(const LabeledDataset& data, const SbestHyperparams& params,
                   const HypothesisSpace& space, std::uint64_t /*seed*/) {
    data.validate();
    params.validate(data.size());
    space.validate();

    WeightVector q = params.init_at_reference
                         ? WeightVector{params.p0.values, params.constraint}
                         : WeightVector::uniform(data.size(), params.constraint);
    LinearHypothesis h = weighted_erm(data, q, space, params.lambda_inf * q.linf());

    FitResult res;
    double obj = sbest_objective(h, q, data, params, space);
    res.objective_trace.push_back(obj);

    for (std::size_t t = 1; t <= params.max_iters; ++t) {
        Vector c = per_example_losses(h, data, space.loss);
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data.domains[i] == Domain::Source) c[i] += params.d_hat;

        WeightVector q_new = sbest_weight_step(data, c, q, h.norm_sq(), params, space);
        LinearHypothesis h_new =
            weighted_erm(data, q_new, space, params.lambda_inf * q_new.linf(), &h);

        double obj_new = sbest_objective(h_new, q_new, data, params, space);
        res.iterations = t;
        if (obj_new > obj - 1e-15) {
            // ascent rejected (inexact sub-solves); nothing left to improve
            res.converged = true;
            break;
        }
        double delta = obj - obj_new;
        q = std::move(q_new);
        h = std::move(h_new);
        obj = obj_new;
        res.objective_trace.push_back(obj);
        if (delta <= params.tau) {
            res.converged = true;
            break;
        }
    }

    res.hypothesis = std::move(h);
    res.weights.emplace_back("q", std::move(q));
    return res;
}

std::pair<double, double> sbest_dc_parts(const LinearHypothesis& h, const WeightVector& q,
                                         const LabeledDataset& data,
                                         const SbestHyperparams& params,
                                         const HypothesisSpace& space) {
    // convex part: sum_i [ (q_i + l_i)^2 / 2 + q_i d_i ]
    //   + lambda_inf (||q||_inf + ||w||^2)^2 / 2 + lambda_1 ||q - p0||_1
    //   + lambda_2 ||q||^2   (BEST mode swaps the lambda_1 term for dis(q, p0))
    // concave part: sum_i (q_i^2 + l_i^2) / 2
    //   + lambda_inf (||q||_inf^2 + ||w||^4) / 2
    Vector l = per_example_losses(h, data, space.loss);
    double convex = 0.0, concave = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double d_i = data.domains[i] == Domain::Source ? params.d_hat : 0.0;
        double a = q.values[i] + l[i];
        convex += 0.5 * a * a + q.values[i] * d_i;
        concave += 0.5 * (q.values[i] * q.values[i] + l[i] * l[i]);
    }
    double qinf = q.linf();
    double wn2 = norm2_sq(h.w);
    convex += 0.5 * params.lambda_inf * (qinf + wn2) * (qinf + wn2);
    convex += params.lambda_2 * norm2_sq(q.values);
    if (params.explicit_index_discrepancy) {
        convex += discrepancy::index_weight_discrepancy(q, params.p0, data, space,
                                                        best_mode_settings())
                      .value;
    } else {
        convex += params.lambda_1 * l1_distance(q.values, params.p0.values);
    }
    concave += 0.5 * params.lambda_inf * (qinf * qinf + wn2 * wn2);
    return {convex, concave};
}

FitResult sbest_dc(const LabeledDataset& data, const SbestHyperparams& params,
                   const HypothesisSpace& space, std::uint64_t /*seed*/) {
    data.validate();
    params.validate(data.size());
    space.validate();

    const std::size_t d = data.dim();
    const std::size_t rows = data.size();
    const double lambda = space.radius;

    Vector d_vec(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
        if (data.domains[i] == Domain::Source) d_vec[i] = params.d_hat;

    // the q block lives on a 1/(m+n) scale with curvature ~2*lambda_2; the
    // joint variable carries q * q_scale so one PGD step size serves both
    // blocks
    const double q_scale = std::sqrt(1.0 + 2.0 * params.lambda_2);
    auto split = [&, q_scale](const Vector& z) {
        Vector w(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(d));
        Vector q(z.begin() + static_cast<std::ptrdiff_t>(d), z.end());
        for (auto& v : q) v /= q_scale;
        return std::make_pair(std::move(w), std::move(q));
    };
    auto losses_of = [&](const Vector& w) {
        Vector l(rows);
        for (std::size_t i = 0; i < rows; ++i)
            l[i] = loss_value(space.loss, dot(w, data.features.row(i)), data.labels[i]);
        return l;
    };

    auto convex_value = [&](const Vector& z) {
        auto [w, q] = split(z);
        return sbest_dc_parts(LinearHypothesis{w, 0.0, lambda},
                              WeightVector{q, params.constraint}, data, params, space)
            .first;
    };
    auto convex_grad = [&](const Vector& z) {
        auto [w, q] = split(z);
        Vector l = losses_of(w);
        double qinf = norm_inf(q);
        double wn2 = norm2_sq(w);
        Vector g(z.size(), 0.0);
        // w block
        for (std::size_t i = 0; i < rows; ++i) {
            double gi = (q[i] + l[i]) * loss_grad_prediction(space.loss,
                                                             dot(w, data.features.row(i)),
                                                             data.labels[i]);
            auto x = data.features.row(i);
            for (std::size_t j = 0; j < d; ++j) g[j] += gi * x[j];
        }
        for (std::size_t j = 0; j < d; ++j)
            g[j] += params.lambda_inf * (qinf + wn2) * 2.0 * w[j];
        // q block
        std::size_t amax = argmax_abs(q);
        Vector disc_plane;
        if (params.explicit_index_discrepancy) {
            WeightVector qw{q, params.constraint};
            auto est = discrepancy::index_weight_discrepancy(qw, params.p0, data, space,
                                                             best_mode_settings());
            disc_plane = per_example_losses(est.maximizer, data, space.loss);
        }
        for (std::size_t i = 0; i < rows; ++i) {
            double gi = (q[i] + l[i]) + d_vec[i] + 2.0 * params.lambda_2 * q[i];
            if (params.explicit_index_discrepancy)
                gi += disc_plane[i];
            else
                gi += params.lambda_1 * sign_of(q[i] - params.p0.values[i]);
            g[d + i] = gi / q_scale;
        }
        g[d + amax] += params.lambda_inf * (qinf + wn2) * sign_of(q[amax]) / q_scale;
        return g;
    };

    auto concave_value = [&](const Vector& z) {
        auto [w, q] = split(z);
        return sbest_dc_parts(LinearHypothesis{w, 0.0, lambda},
                              WeightVector{q, params.constraint}, data, params, space)
            .second;
    };
    auto concave_grad = [&](const Vector& z) {
        auto [w, q] = split(z);
        Vector l = losses_of(w);
        double wn2 = norm2_sq(w);
        Vector g(z.size(), 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            double gi = l[i] * loss_grad_prediction(space.loss, dot(w, data.features.row(i)),
                                                    data.labels[i]);
            auto x = data.features.row(i);
            for (std::size_t j = 0; j < d; ++j) g[j] += gi * x[j];
        }
        for (std::size_t j = 0; j < d; ++j) g[j] += params.lambda_inf * 2.0 * wn2 * w[j];
        std::size_t amax = argmax_abs(q);
        for (std::size_t i = 0; i < rows; ++i) g[d + i] = q[i] / q_scale;
        g[d + amax] += params.lambda_inf * norm_inf(q) * sign_of(q[amax]) / q_scale;
        return g;
    };

    auto project_q = weight_projection(params.constraint);
    auto project = [&, project_q, q_scale](const Vector& z) {
        auto [w, q] = split(z);
        w = linalg::project_ball(w, lambda);
        q = project_q(q);
        Vector out;
        out.reserve(z.size());
        out.insert(out.end(), w.begin(), w.end());
        for (double v : q) out.push_back(v * q_scale);
        return out;
    };

    // DCA is local; one alternating pre-iteration supplies the same starting
    // point quality the AM route enjoys before the joint refinement
    WeightVector q0 = params.init_at_reference
                          ? WeightVector{params.p0.values, params.constraint}
                          : WeightVector::uniform(rows, params.constraint);
    LinearHypothesis h0 = weighted_erm(data, q0, space, params.lambda_inf * q0.linf());
    {
        Vector c = per_example_losses(h0, data, space.loss);
        for (std::size_t i = 0; i < rows; ++i) c[i] += d_vec[i];
        q0 = sbest_weight_step(data, c, q0, h0.norm_sq(), params, space);
        h0 = weighted_erm(data, q0, space, params.lambda_inf * q0.linf(), &h0);
    }
    Vector z0;
    z0.reserve(d + rows);
    z0.insert(z0.end(), h0.w.begin(), h0.w.end());
    for (double v : q0.values) z0.push_back(v * q_scale);

    solvers::DcaProgram program;
    program.convex_value = convex_value;
    program.convex_grad = convex_grad;
    program.concave_value = concave_value;
    program.concave_grad = concave_grad;
    program.project = project;
    program.subproblem.step = params.weight_step_size;
    program.subproblem.max_iters = params.weight_step_iters;
    program.subproblem.tol = 1e-12;

    solvers::DcaSettings settings;
    settings.max_iters = params.max_iters;
    settings.tol = params.tau;
    auto sol = solvers::dca_solve(program, z0, settings);

    auto [w, q] = split(sol.x);
    FitResult res;
    res.hypothesis = LinearHypothesis{std::move(w), 0.0, lambda};
    res.weights.emplace_back("q", WeightVector{std::move(q), params.constraint});
    res.objective_trace = std::move(sol.trace);
    res.converged = sol.converged;
    res.iterations = sol.iterations;
    return res;
}

WeightVector alpha_weights(std::size_t m, std::size_t n, double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        throw InvalidParameterError("alpha_weights: alpha must lie in [0, 1]");
    if (m < 1 || n < 1) throw InvalidParameterError("alpha_weights: m and n must be >= 1");
    const double mn = static_cast<double>(m + n);
    const double source_w = alpha / mn;
    const double target_w =
        (static_cast<double>(m) * (1.0 - alpha) + static_cast<double>(n)) /
        (mn * static_cast<double>(n));
    WeightVector q;
    q.constraint = WeightConstraint::Simplex;
    q.values.assign(m + n, source_w);
    for (std::size_t i = m; i < m + n; ++i) q.values[i] = target_w;
    return q;
}

AlphaFit alpha_reweighting_train(const LabeledDataset& data, const std::vector<double>& alpha_grid,
                                 const LabeledDataset& validation, const HypothesisSpace& space,
                                 double ridge) {
    if (alpha_grid.empty()) throw InvalidParameterError("alpha_reweighting_train: empty grid");
    if (validation.empty()) throw EmptyDataError("alpha_reweighting_train: empty validation set");
    const std::size_t m = data.count(Domain::Source);
    const std::size_t n = data.count(Domain::Target);
    if (!data.canonical_layout())
        throw DataError("alpha_reweighting_train: expects source rows before target rows");

    AlphaFit best;
    bool first = true;
    double best_score = 0.0;
    for (double alpha : alpha_grid) {
        WeightVector q = alpha_weights(m, n, alpha);
        LinearHypothesis h = weighted_erm(data, q, space, ridge);
        Metrics metric = evaluate_metrics(h, validation);
        // classification selects on accuracy, regression on MSE
        double score = space.loss == LossKind::Logistic ? metric.accuracy : -metric.mse;
        if (first || score > best_score || (score == best_score && alpha > best.alpha)) {
            best = AlphaFit{alpha, std::move(h)};
            best_score = score;
            first = false;
        }
    }
    return best;
}

namespace {

struct DaTerms {
    double objective = 0.0;
    Vector grad_q, grad_p, grad_q_prime;
};

/// Objective and subgradient of the BEST-DA weight block at a fixed
/// hypothesis. Discrepancy terms use eigen subgradients, or softmax
/// gradients when mu is set; both are clamped at zero value.
DaTerms bestda_weight_terms(const Vector& q, const Vector& p, const Vector& q_prime,
                            const Vector& source_losses, const LabeledDataset& data_S,
                            const LabeledDataset& data_S_prime, const Matrix& all_features,
                            const BestDaHyperparams& params, const HypothesisSpace& space,
                            double h_norm_sq, bool want_grad) {
    const std::size_t m = q.size();
    const std::size_t n = q_prime.size();
    const double lambda = space.radius;
    const double scale = 4.0 * lambda * lambda;

    DaTerms out;
    if (want_grad) {
        out.grad_q.assign(m, 0.0);
        out.grad_p.assign(m, 0.0);
        out.grad_q_prime.assign(n, 0.0);
    }

    // sum_i (q_i + p_i) l_i + ||q||_1 d_bar
    for (std::size_t i = 0; i < m; ++i) {
        out.objective += (q[i] + p[i]) * source_losses[i];
        out.objective += q[i] * params.d_bar;
        if (want_grad) {
            out.grad_q[i] += source_losses[i] + params.d_bar;
            out.grad_p[i] += source_losses[i];
        }
    }

    // dis-bar(q', p)
    if (params.mu_smooth) {
        auto sm = discrepancy::softmax_unlabeled_discrepancy(
            q_prime, p, data_S_prime.features, data_S.features, *params.mu_smooth);
        if (sm.value > 0.0) {
            out.objective += scale * sm.value;
            if (want_grad) {
                for (std::size_t j = 0; j < n; ++j) out.grad_q_prime[j] += scale * sm.grad_q_prime[j];
                for (std::size_t i = 0; i < m; ++i) out.grad_p[i] += scale * sm.grad_p[i];
            }
        }
    } else {
        auto ud = discrepancy::unlabeled_discrepancy(q_prime, p, data_S_prime.features,
                                                     data_S.features, lambda);
        out.objective += ud.value;
        if (want_grad && ud.raw_lambda_max > 0.0) {
            for (std::size_t j = 0; j < n; ++j) out.grad_q_prime[j] += ud.grad_q_prime[j];
            for (std::size_t i = 0; i < m; ++i) out.grad_p[i] += ud.grad_p[i];
        }
    }

    // dis-bar((q, q'), p0) over all m+n rows
    Vector joint(m + n);
    std::copy(q.begin(), q.end(), joint.begin());
    std::copy(q_prime.begin(), q_prime.end(), joint.begin() + static_cast<std::ptrdiff_t>(m));
    if (params.mu_smooth) {
        auto sm = discrepancy::softmax_unlabeled_discrepancy(joint, params.p0.values,
                                                             all_features, all_features,
                                                             *params.mu_smooth);
        if (sm.value > 0.0) {
            out.objective += scale * sm.value;
            if (want_grad) {
                for (std::size_t i = 0; i < m; ++i) out.grad_q[i] += scale * sm.grad_q_prime[i];
                for (std::size_t j = 0; j < n; ++j)
                    out.grad_q_prime[j] += scale * sm.grad_q_prime[m + j];
            }
        }
    } else {
        auto ud = discrepancy::unlabeled_discrepancy(joint, params.p0.values, all_features,
                                                     all_features, lambda);
        out.objective += ud.value;
        if (want_grad && ud.raw_lambda_max > 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.grad_q[i] += ud.grad_q_prime[i];
            for (std::size_t j = 0; j < n; ++j) out.grad_q_prime[j] += ud.grad_q_prime[m + j];
        }
    }

    // regularizers
    double jinf = norm_inf(joint);
    out.objective += params.lambda_inf * jinf * h_norm_sq;
    out.objective += params.lambda_1 * l1_distance(joint, params.p0.values);
    out.objective += params.lambda_2 * (norm2_sq(q) + norm2_sq(q_prime));
    if (want_grad) {
        std::size_t amax = argmax_abs(joint);
        double inf_g = params.lambda_inf * h_norm_sq * sign_of(joint[amax]);
        if (amax < m)
            out.grad_q[amax] += inf_g;
        else
            out.grad_q_prime[amax - m] += inf_g;
        for (std::size_t i = 0; i < m; ++i) {
            out.grad_q[i] += params.lambda_1 * sign_of(q[i] - params.p0.values[i]);
            out.grad_q[i] += 2.0 * params.lambda_2 * q[i];
        }
        for (std::size_t j = 0; j < n; ++j) {
            out.grad_q_prime[j] += params.lambda_1 * sign_of(q_prime[j] - params.p0.values[m + j]);
            out.grad_q_prime[j] += 2.0 * params.lambda_2 * q_prime[j];
        }
    }
    return out;
}

} // namespace

double bestda_objective(const LinearHypothesis& h, const WeightVector& q, const WeightVector& p,
                        const WeightVector& q_prime, const LabeledDataset& data_S,
                        const LabeledDataset& data_S_prime, const BestDaHyperparams& params,
                        const HypothesisSpace& space) {
    const std::size_t m = data_S.size();
    const std::size_t n = data_S_prime.size();
    if (q.size() != m || p.size() != m || q_prime.size() != n)
        throw DimensionError("bestda_objective: weight shapes do not match the samples");
    params.validate(m, n);
    if (space.loss != LossKind::Squared && !params.mu_smooth)
        throw UnsupportedLossError("bestda: eigen discrepancy terms require the squared loss");

    Vector losses = per_example_losses(h, data_S, space.loss);
    Matrix all_features = combine(data_S, data_S_prime).features;
    return bestda_weight_terms(q.values, p.values, q_prime.values, losses, data_S, data_S_prime,
                               all_features, params, space, h.norm_sq(), /*want_grad=*/false)
        .objective;
}

FitResult bestda_am(const LabeledDataset& data_S, const LabeledDataset& data_S_prime,
                    const BestDaHyperparams& params, const HypothesisSpace& space,
                    std::uint64_t /*seed*/) {
    const std::size_t m = data_S.size();
    const std::size_t n = data_S_prime.size();
    if (m == 0 || n == 0) throw EmptyDataError("bestda_am: empty sample");
    params.validate(m, n);
    space.validate();
    if (space.loss != LossKind::Squared)
        throw UnsupportedLossError("bestda_am: squared loss only");

    // init: (q, q') at the reference weights, p uniform over the source
    Vector q(params.p0.values.begin(), params.p0.values.begin() + static_cast<std::ptrdiff_t>(m));
    Vector q_prime(params.p0.values.begin() + static_cast<std::ptrdiff_t>(m),
                   params.p0.values.end());
    Vector p(m, 1.0 / static_cast<double>(m));

    auto h_step = [&](const Vector& qv, const Vector& pv, const Vector& qpv,
                      const LinearHypothesis* warm) {
        WeightVector fit_w = WeightVector::zeros(m);
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            fit_w.values[i] = qv[i] + pv[i]; // carrier only; may exceed 1
            total += fit_w.values[i];
        }
        if (total <= 1e-300) {
            // no data weight: the loss term is flat in h, keep the iterate
            return warm ? *warm : LinearHypothesis::zero(data_S.dim(), space.radius);
        }
        Vector joint(m + n);
        std::copy(qv.begin(), qv.end(), joint.begin());
        std::copy(qpv.begin(), qpv.end(), joint.begin() + static_cast<std::ptrdiff_t>(m));
        // the epsilon floor keeps the normal equations well-posed when p alone
        // carries mass on a rank-deficient support
        double ridge = params.lambda_inf * norm_inf(joint) + params.h_ridge + 1e-12;
        return weighted_erm(data_S, fit_w, space, ridge, warm);
    };

    LinearHypothesis h = h_step(q, p, q_prime, nullptr);
    const Matrix all_features = combine(data_S, data_S_prime).features;

    auto objective_at = [&](const LinearHypothesis& hyp, const Vector& qv, const Vector& pv,
                            const Vector& qpv) {
        Vector losses = per_example_losses(hyp, data_S, space.loss);
        return bestda_weight_terms(qv, pv, qpv, losses, data_S, data_S_prime, all_features,
                                   params, space, hyp.norm_sq(), false)
            .objective;
    };

    FitResult res;
    double obj = objective_at(h, q, p, q_prime);
    res.objective_trace.push_back(obj);

    for (std::size_t t = 1; t <= params.max_iters; ++t) {
        // weight step: joint PGD on z = [q; p; q'] over the box
        Vector losses = per_example_losses(h, data_S, space.loss);
        double hn2 = h.norm_sq();
        auto unpack = [&](const Vector& z) {
            Vector qv(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(m));
            Vector pv(z.begin() + static_cast<std::ptrdiff_t>(m),
                      z.begin() + static_cast<std::ptrdiff_t>(2 * m));
            Vector qpv(z.begin() + static_cast<std::ptrdiff_t>(2 * m), z.end());
            return std::make_tuple(std::move(qv), std::move(pv), std::move(qpv));
        };
        auto f = [&](const Vector& z) {
            auto [qv, pv, qpv] = unpack(z);
            return bestda_weight_terms(qv, pv, qpv, losses, data_S, data_S_prime, all_features,
                                       params, space, hn2, false)
                .objective;
        };
        auto g = [&](const Vector& z) {
            auto [qv, pv, qpv] = unpack(z);
            auto terms = bestda_weight_terms(qv, pv, qpv, losses, data_S, data_S_prime,
                                             all_features, params, space, hn2, true);
            Vector grad;
            grad.reserve(z.size());
            grad.insert(grad.end(), terms.grad_q.begin(), terms.grad_q.end());
            grad.insert(grad.end(), terms.grad_p.begin(), terms.grad_p.end());
            grad.insert(grad.end(), terms.grad_q_prime.begin(), terms.grad_q_prime.end());
            return grad;
        };
        auto project = [](const Vector& z) { return linalg::project_box(z, 0.0, 1.0); };

        Vector z0;
        z0.reserve(2 * m + n);
        z0.insert(z0.end(), q.begin(), q.end());
        z0.insert(z0.end(), p.begin(), p.end());
        z0.insert(z0.end(), q_prime.begin(), q_prime.end());

        solvers::PgdSettings pgd;
        pgd.step = params.weight_step_size;
        pgd.max_iters = params.weight_step_iters;
        pgd.tol = 1e-12;
        auto sol = solvers::projected_gradient_descent(f, g, project, z0, pgd);
        auto [q_new, p_new, qp_new] = unpack(sol.x);

        LinearHypothesis h_new = h_step(q_new, p_new, qp_new, &h);
        double obj_new = objective_at(h_new, q_new, p_new, qp_new);
        res.iterations = t;
        if (obj_new > obj - 1e-15) {
            res.converged = true;
            break;
        }
        double delta = obj - obj_new;
        q = std::move(q_new);
        p = std::move(p_new);
        q_prime = std::move(qp_new);
        h = std::move(h_new);
        obj = obj_new;
        res.objective_trace.push_back(obj);
        if (delta <= params.tau) {
            res.converged = true;
            break;
        }
    }

    res.hypothesis = std::move(h);
    res.weights.emplace_back("q", WeightVector{std::move(q), WeightConstraint::Box01});
    res.weights.emplace_back("p", WeightVector{std::move(p), WeightConstraint::Box01});
    res.weights.emplace_back("q_prime", WeightVector{std::move(q_prime), WeightConstraint::Box01});
    return res;
}

DmResult dm_baseline(const LabeledDataset& data_S, const LabeledDataset& data_S_prime,
                     double lambda, double ridge, const HypothesisSpace& space,
                     std::size_t stage1_iters) {
    if (data_S.empty() || data_S_prime.empty()) throw EmptyDataError("dm_baseline: empty sample");
    if (space.loss != LossKind::Squared)
        throw UnsupportedLossError("dm_baseline: squared loss only");
    const std::size_t m = data_S.size();
    Vector uniform_target(data_S_prime.size(), 1.0 / static_cast<double>(data_S_prime.size()));

    auto f = [&](const Vector& qv) {
        return discrepancy::unlabeled_discrepancy(uniform_target, qv, data_S_prime.features,
                                                  data_S.features, lambda)
            .value;
    };
    auto g = [&](const Vector& qv) {
        auto ud = discrepancy::unlabeled_discrepancy(uniform_target, qv, data_S_prime.features,
                                                     data_S.features, lambda);
        // minimizing over the p-argument: subgradient is -grad of the value
        // in p, already signed inside grad_p
        return ud.grad_p;
    };
    auto project = [](const Vector& v) { return linalg::project_simplex(v); };

    solvers::PgdSettings pgd;
    pgd.step = 0.1;
    pgd.max_iters = stage1_iters;
    pgd.tol = 1e-12;
    auto sol = solvers::projected_gradient_descent(f, g, project, Vector(m, 1.0 / m), pgd);

    DmResult out;
    out.stage1_weights = WeightVector{sol.x, WeightConstraint::Simplex};
    out.stage1_trace = std::move(sol.trace);
    out.hypothesis = weighted_erm(data_S, out.stage1_weights, space, ridge);
    return out;
}

LinearHypothesis baseline_train(const LabeledDataset& data, BaselineKind which,
                                const HypothesisSpace& space, double ridge) {
    WeightVector q = WeightVector::zeros(data.size(), WeightConstraint::Simplex);
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        bool use = which == BaselineKind::PooledUniform ||
                   (which == BaselineKind::TargetOnly && data.domains[i] == Domain::Target) ||
                   (which == BaselineKind::SourceOnly && data.domains[i] == Domain::Source);
        if (use) {
            q.values[i] = 1.0;
            ++count;
        }
    }
    if (count == 0) throw EmptyDataError("baseline_train: requested subset is empty");
    for (auto& v : q.values) v /= static_cast<double>(count);
    return weighted_erm(data, q, space, ridge);
}

std::vector<LinearHypothesis> default_h0_candidates(const LabeledDataset& data,
                                                    const HypothesisSpace& space) {
    std::vector<LinearHypothesis> out;
    out.push_back(LinearHypothesis::zero(data.dim(), space.radius));
    WeightVector q = WeightVector::uniform(data.size());
    for (double ridge : {1e-4, 1e-3, 1e-2, 1e-1, 1.0})
        out.push_back(weighted_erm(data, q, space, ridge));
    return out;
}

} // namespace adapt::algorithms
