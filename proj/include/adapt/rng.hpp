#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace adapt {

/// Seedable, splittable 64-bit PRNG (SplitMix64). The full algorithm is spelled
/// out here and in the README so streams can be reproduced from any language:
///   state += 0x9E3779B97F4A7C15
///   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   output = z ^ (z >> 31)
/// uniform doubles are (output >> 11) * 2^-53; normals use Box-Muller on two
/// uniforms. Child streams are seeded with mix64(seed ^ (stream+1) * GOLDEN).
class Rng {
public:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += kGolden;
        return mix64(state_);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller (no cached spare; two uniforms per draw).
    double normal() {
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::vector<double> normal_vector(std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = normal();
        return v;
    }

    /// Uniform point on the unit sphere in R^d.
    std::vector<double> unit_vector(std::size_t d) {
        std::vector<double> v;
        double norm = 0.0;
        do {
            v = normal_vector(d);
            norm = 0.0;
            for (double x : v) norm += x * x;
        } while (norm < 1e-24);
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
        return v;
    }

    /// Rademacher sign in {-1, +1}.
    double sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

    /// Independent child stream; deterministic in (seed, stream).
    Rng child(std::uint64_t stream) const {
        return Rng(mix64(state_ ^ ((stream + 1) * kGolden)));
    }

    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

} // namespace adapt
