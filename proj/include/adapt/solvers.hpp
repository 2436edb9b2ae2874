#pragma once

#include <functional>
#include <vector>

#include "adapt/matrix.hpp"

namespace adapt::solvers {

using Objective = std::function<double(const Vector&)>;
using Gradient = std::function<Vector(const Vector&)>;
using Projection = std::function<Vector(const Vector&)>;

struct SolveResult {
    Vector x;
    std::vector<double> trace; // objective after each accepted step (trace[0] = f(x0))
    bool converged = false;
    std::size_t iterations = 0;
};

struct PgdSettings {
    double step = 0.1;
    std::size_t max_iters = 1000;
    double tol = 1e-6;      // stop on |f_t - f_{t-1}| <= tol
    int max_backtracks = 40;
};

/// Projected (sub)gradient descent with backtracking. Candidate steps that
/// would increase the objective shrink the step instead of being accepted,
/// so the trace is non-increasing. Throws DivergenceError (naming the
/// iteration) on a non-finite gradient or objective.
SolveResult projected_gradient_descent(const Objective& f, const Gradient& grad,
                                       const Projection& project, const Vector& x0,
                                       const PgdSettings& settings = {});

/// Difference-of-convex program: objective = convex_part - concave_part.
/// Both parts supply values and (sub)gradients over the feasible set.
struct DcaProgram {
    Objective convex_value;
    Gradient convex_grad;
    Objective concave_value;
    Gradient concave_grad;
    Projection project;
    PgdSettings subproblem; // settings for the inner convex solves
};

struct DcaSettings {
    std::size_t max_iters = 100;
    double tol = 1e-6;
};

/// DCA: x_{t+1} = argmin over the feasible set of
///   convex_part(x) - [concave_part(x_t) + concave_grad(x_t) . (x - x_t)],
/// the subproblem solved inexactly by PGD. An ascent-rejection guard keeps
/// the outer trace of the true objective monotone despite inexact solves.
SolveResult dca_solve(const DcaProgram& program, const Vector& x0,
                      const DcaSettings& settings = {});

} // namespace adapt::solvers
