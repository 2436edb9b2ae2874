#include "adapt/solvers.hpp"

#include <cmath>
#include <string>

#include "adapt/errors.hpp"

namespace adapt::solvers {

SolveResult projected_gradient_descent(const Objective& f, const Gradient& grad,
                                       const Projection& project, const Vector& x0,
                                       const PgdSettings& settings) {
    SolveResult res;
    res.x = project(x0);
    double fx = f(res.x);
    if (!std::isfinite(fx)) throw DivergenceError("pgd: non-finite objective at start");
    res.trace.push_back(fx);

    double step = settings.step;
    for (std::size_t t = 0; t < settings.max_iters; ++t) {
        Vector g = grad(res.x);
        if (!all_finite(g))
            throw DivergenceError("pgd: non-finite gradient at iteration " + std::to_string(t));

        bool accepted = false;
        for (int b = 0; b <= settings.max_backtracks; ++b) {
            Vector cand(res.x.size());
            for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = res.x[i] - step * g[i];
            cand = project(cand);
            double fc = f(cand);
            if (!std::isfinite(fc))
                throw DivergenceError("pgd: non-finite objective at iteration " +
                                      std::to_string(t));
            if (fc <= fx) {
                res.x = std::move(cand);
                accepted = true;
                double delta = fx - fc;
                fx = fc;
                res.trace.push_back(fx);
                res.iterations = t + 1;
                if (delta <= settings.tol) {
                    res.converged = true;
                    return res;
                }
                step = std::min(step * 1.25, settings.step); // recover after backtracks
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // no descent direction at machine resolution; treat as converged
            res.converged = true;
            res.iterations = t + 1;
            return res;
        }
    }
    return res;
}

SolveResult dca_solve(const DcaProgram& program, const Vector& x0, const DcaSettings& settings) {
    auto objective = [&](const Vector& x) {
        return program.convex_value(x) - program.concave_value(x);
    };

    SolveResult res;
    res.x = program.project(x0);
    double fx = objective(res.x);
    if (!std::isfinite(fx)) throw DivergenceError("dca: non-finite objective at start");
    res.trace.push_back(fx);

    for (std::size_t t = 0; t < settings.max_iters; ++t) {
        Vector gx = program.concave_grad(res.x);
        if (!all_finite(gx))
            throw DivergenceError("dca: non-finite concave gradient at iteration " +
                                  std::to_string(t));

        // linearized subproblem: convex_part(x) - gx . x  (constants dropped)
        auto sub_f = [&](const Vector& x) { return program.convex_value(x) - dot(x, gx); };
        auto sub_g = [&](const Vector& x) {
            Vector g = program.convex_grad(x);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= gx[i];
            return g;
        };

        SolveResult sub;
        try {
            sub = projected_gradient_descent(sub_f, sub_g, program.project, res.x,
                                             program.subproblem);
        } catch (const DivergenceError& e) {
            throw DivergenceError("dca: subproblem failed at outer iteration " +
                                  std::to_string(t) + ": " + e.what());
        }

        double fc = objective(sub.x);
        res.iterations = t + 1;
        if (fc > fx - 1e-15) {
            // inexact subproblem produced no progress; keep the current point
            res.converged = true;
            return res;
        }
        double delta = fx - fc;
        res.x = std::move(sub.x);
        fx = fc;
        res.trace.push_back(fx);
        if (delta <= settings.tol) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

} // namespace adapt::solvers
