#pragma once

#include <utility>
#include <vector>

#include "adapt/matrix.hpp"

namespace adapt::linalg {

/// Symmetric dense matrix. Construction checks |M_ij - M_ji| against
/// 1e-9 * max(1, |M_ij|) and throws SymmetryError beyond that.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(Matrix m);

    std::size_t size() const { return m_.rows(); }
    const Matrix& matrix() const { return m_; }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < size(); ++i) t += m_(i, i);
        return t;
    }

    double frobenius() const { return norm2(m_.data()); }

private:
    Matrix m_;
};

struct EigenDecomposition {
    Vector eigenvalues; // sorted descending
    Matrix vectors;     // column j is the eigenvector of eigenvalues[j]
};

/// Cyclic Jacobi rotations; off-diagonal Frobenius threshold 1e-12 relative,
/// at most 100 sweeps. Exact enough for the k <= few-hundred matrices here.
EigenDecomposition sym_eigendecomposition(const SymMatrix& m);

/// exp(M) = V exp(L) V^T through the symmetric eigendecomposition.
SymMatrix matrix_exp_sym(const SymMatrix& m);

/// Euclidean projection onto the probability simplex (sort-and-threshold).
Vector project_simplex(const Vector& v);

/// Elementwise clamp to [lo, hi]; lo > hi anywhere is an error.
Vector project_box(const Vector& v, const Vector& lo, const Vector& hi);
Vector project_box(const Vector& v, double lo, double hi);

/// Projection onto the L2 ball of the given radius around the origin.
Vector project_ball(const Vector& v, double radius);

/// Projection onto the ball of the given radius around a center point.
Vector project_ball(const Vector& v, const Vector& center, double radius);

/// sum_i c_i x_i x_i^T over the rows of X (signed weights allowed).
SymMatrix weighted_scatter(const Vector& c, const Matrix& x);

} // namespace adapt::linalg
