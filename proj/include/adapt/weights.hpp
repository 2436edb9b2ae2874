#pragma once

#include <vector>

#include "adapt/errors.hpp"
#include "adapt/matrix.hpp"

namespace adapt {

enum class WeightConstraint { Box01, Simplex };

/// Per-example weight vector (q, q', p, p0). Box01 keeps every entry in
/// [0, 1]; Simplex additionally requires the entries to sum to one.
struct WeightVector {
    Vector values;
    WeightConstraint constraint = WeightConstraint::Simplex;

    std::size_t size() const { return values.size(); }

    double sum() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }

    /// Total weight on the first m entries (the source block).
    double mass_on_prefix(std::size_t m) const {
        double s = 0.0;
        for (std::size_t i = 0; i < m && i < values.size(); ++i) s += values[i];
        return s;
    }

    double l1() const { return norm1(values); }
    double l2() const { return norm2(values); }
    double linf() const { return norm_inf(values); }

    void validate() const;

    static WeightVector uniform(std::size_t n, WeightConstraint c = WeightConstraint::Simplex) {
        return WeightVector{Vector(n, n ? 1.0 / static_cast<double>(n) : 0.0), c};
    }

    static WeightVector zeros(std::size_t n, WeightConstraint c = WeightConstraint::Box01) {
        return WeightVector{Vector(n, 0.0), c};
    }
};

} // namespace adapt
