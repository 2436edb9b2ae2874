#include "adapt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adapt::linalg {

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw SymmetryError("SymMatrix: not square");
    if (!m_.all_finite()) throw DataError("SymMatrix: non-finite entry");
    for (std::size_t i = 0; i < m_.rows(); ++i) {
        for (std::size_t j = i + 1; j < m_.cols(); ++j) {
            double a = m_(i, j), b = m_(j, i);
            if (std::fabs(a - b) > 1e-9 * std::max(1.0, std::fabs(a)))
                throw SymmetryError("SymMatrix: asymmetry beyond tolerance");
            // store the exact average so downstream rotations see a truly
            // symmetric matrix
            double avg = 0.5 * (a + b);
            m_(i, j) = avg;
            m_(j, i) = avg;
        }
    }
}

namespace {

double off_diagonal_frobenius_sq(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return s;
}

} // namespace

EigenDecomposition sym_eigendecomposition(const SymMatrix& m) {
    const std::size_t n = m.size();
    Matrix a = m.matrix();
    Matrix v = Matrix::identity(n);

    const double total_scale = std::max(1.0, m.frobenius());
    const double threshold = 1e-12 * total_scale;
    const int max_sweeps = 100;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (std::sqrt(off_diagonal_frobenius_sq(a)) <= threshold) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::fabs(apq) <= 1e-300) continue;
                double app = a(p, p), aqq = a(q, q);
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

SymMatrix matrix_exp_sym(const SymMatrix& m) {
    auto eig = sym_eigendecomposition(m);
    const std::size_t n = m.size();
    Matrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        double e = std::exp(eig.eigenvalues[k]);
        for (std::size_t i = 0; i < n; ++i) {
            double vik = eig.vectors(i, k) * e;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * eig.vectors(j, k);
        }
    }
    // exact symmetrization guards rounding drift before re-validation
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double avg = 0.5 * (out(i, j) + out(j, i));
            out(i, j) = avg;
            out(j, i) = avg;
        }
    return SymMatrix(std::move(out));
}

Vector project_simplex(const Vector& v) {
    if (!all_finite(v)) throw DataError("project_simplex: non-finite input");
    if (v.empty()) return {};
    Vector u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cssv = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cssv += u[i];
        double t = (cssv - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) theta = t; // cumulative-sum rule resolves ties
    }
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - theta);
    return out;
}

Vector project_box(const Vector& v, const Vector& lo, const Vector& hi) {
    if (lo.size() != v.size() || hi.size() != v.size())
        throw DimensionError("project_box: bound length mismatch");
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (lo[i] > hi[i]) throw InvalidBoundsError("project_box: lo > hi");
        out[i] = std::clamp(v[i], lo[i], hi[i]);
    }
    return out;
}

Vector project_box(const Vector& v, double lo, double hi) {
    if (lo > hi) throw InvalidBoundsError("project_box: lo > hi");
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp(v[i], lo, hi);
    return out;
}

Vector project_ball(const Vector& v, double radius) {
    double n = norm2(v);
    if (n <= radius) return v;
    return scaled(v, radius / n);
}

Vector project_ball(const Vector& v, const Vector& center, double radius) {
    if (center.size() != v.size()) throw DimensionError("project_ball: center length mismatch");
    Vector diff(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) diff[i] = v[i] - center[i];
    double n = norm2(diff);
    if (n <= radius) return v;
    Vector out(v.size());
    double scale = radius / n;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = center[i] + scale * diff[i];
    return out;
}

SymMatrix weighted_scatter(const Vector& c, const Matrix& x) {
    if (c.size() != x.rows()) throw DimensionError("weighted_scatter: weight length != rows");
    const std::size_t d = x.cols();
    Matrix m(d, d);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        if (c[r] == 0.0) continue;
        auto row = x.row(r);
        for (std::size_t i = 0; i < d; ++i) {
            double ci = c[r] * row[i];
            for (std::size_t j = i; j < d; ++j) m(i, j) += ci * row[j];
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) m(j, i) = m(i, j);
    return SymMatrix(std::move(m));
}

} // namespace adapt::linalg
