#pragma once

// Test-side oracles, independent of the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "adapt/linalg.hpp"
#include "adapt/matrix.hpp"

namespace oracles {

using adapt::Matrix;
using adapt::Vector;

/// Eigenvalues of a symmetric matrix by inertia bisection: the number of
/// eigenvalues below t equals the count of negative pivots in the LDL^T
/// factorization of (A - t I). No rotations or eigenvectors involved.
inline std::size_t eigenvalues_below(const Matrix& a, double t) {
    const std::size_t n = a.rows();
    Matrix m = a;
    for (std::size_t i = 0; i < n; ++i) m(i, i) -= t;
    std::size_t negatives = 0;
    for (std::size_t k = 0; k < n; ++k) {
        double pivot = m(k, k);
        if (pivot == 0.0) pivot = 1e-300; // t is never an exact eigenvalue in the tests
        if (pivot < 0.0) ++negatives;
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = m(i, k) / pivot;
            for (std::size_t j = k; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return negatives;
}

inline Vector eigenvalues_by_bisection(const Matrix& a, double tol = 1e-11) {
    const std::size_t n = a.rows();
    double radius = 0.0; // Gershgorin bound
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::fabs(a(i, j));
        radius = std::max(radius, row);
    }
    Vector out(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k-th smallest eigenvalue
        double lo = -radius - 1.0, hi = radius + 1.0;
        while (hi - lo > tol) {
            double mid = 0.5 * (lo + hi);
            if (eigenvalues_below(a, mid) > k)
                hi = mid;
            else
                lo = mid;
        }
        out[k] = 0.5 * (lo + hi);
    }
    std::sort(out.begin(), out.end(), std::greater<double>());
    return out;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

/// Scaled-and-squared truncated Taylor series for exp(A); matrix products only.
inline Matrix matrix_exp_taylor(const Matrix& a, int terms = 50) {
    const std::size_t n = a.rows();
    double norm = 0.0;
    for (double v : a.data()) norm += v * v;
    norm = std::sqrt(norm);
    int squarings = 0;
    double scale = 1.0;
    while (norm * scale > 0.5) {
        scale *= 0.5;
        ++squarings;
    }
    Matrix scaled = a;
    for (auto& v : scaled.data()) v *= scale;

    Matrix result = Matrix::identity(n);
    Matrix term = Matrix::identity(n);
    for (int k = 1; k <= terms; ++k) {
        term = matmul(term, scaled);
        for (auto& v : term.data()) v /= static_cast<double>(k);
        for (std::size_t i = 0; i < result.data().size(); ++i) result.data()[i] += term.data()[i];
    }
    for (int s = 0; s < squarings; ++s) result = matmul(result, result);
    return result;
}

/// Brute-force sup over the unit sphere in R^2 of u^T M u (for the
/// unlabeled-discrepancy eigen route).
inline double sphere_grid_max_quadratic(const Matrix& m, std::size_t steps = 10000) {
    double best = 0.0; // max with 0 mirrors the clamp in the definition
    for (std::size_t i = 0; i < steps; ++i) {
        double theta = 2.0 * 3.14159265358979323846 * static_cast<double>(i) /
                       static_cast<double>(steps);
        double u0 = std::cos(theta), u1 = std::sin(theta);
        double q = u0 * (m(0, 0) * u0 + m(0, 1) * u1) + u1 * (m(1, 0) * u0 + m(1, 1) * u1);
        best = std::max(best, q);
    }
    return best;
}

/// Dense grid search over a 1-d interval.
inline double grid_max_1d(const std::function<double(double)>& f, double lo, double hi,
                          std::size_t steps = 20001) {
    double best = f(lo);
    for (std::size_t i = 1; i < steps; ++i) {
        double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
        best = std::max(best, f(x));
    }
    return best;
}

/// Dense polar grid over the radius-Lambda disc in R^2.
inline double disc_grid_max_2d(const std::function<double(const Vector&)>& f, double lambda,
                               std::size_t radii = 60, std::size_t angles = 720) {
    Vector w(2, 0.0);
    double best = f(w);
    for (std::size_t r = 1; r <= radii; ++r) {
        double radius = lambda * static_cast<double>(r) / static_cast<double>(radii);
        for (std::size_t a = 0; a < angles; ++a) {
            double theta = 2.0 * 3.14159265358979323846 * static_cast<double>(a) /
                           static_cast<double>(angles);
            w[0] = radius * std::cos(theta);
            w[1] = radius * std::sin(theta);
            best = std::max(best, f(w));
        }
    }
    return best;
}

inline double central_difference(const std::function<double(double)>& f, double x,
                                 double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace oracles
