#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace riskbounds::detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Folds a sequence of values into a base seed, one splitmix64 round per
/// value. Order-sensitive, so (s, t) and (t, s) derive distinct streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> values) {
    for (std::uint64_t v : values) {
        std::uint64_t s = seed ^ (v + 0x9e3779b97f4a7c15ull);
        seed = splitmix64(s);
    }
    return seed;
}

/// Minimal counter-style generator. One instance per independent stream;
/// identical seeds reproduce identical draws regardless of scheduling.
class SplitMixStream {
public:
    explicit SplitMixStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform draw strictly inside (0, 1).
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    /// Standard normal pair (Box-Muller).
    void next_normal_pair(double& z0, double& z1) {
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        z0 = r * std::cos(a);
        z1 = r * std::sin(a);
    }

private:
    std::uint64_t state_;
};

/// Fractional parts of sqrt(prime): the classic Richtmyer generating vector
/// for equidistributed Kronecker sequences on the unit cube.
inline std::vector<double> richtmyer_generators(int dim) {
    std::vector<double> gen;
    gen.reserve(static_cast<std::size_t>(dim));
    int found = 0;
    for (int candidate = 2; found < dim; ++candidate) {
        bool prime = candidate >= 2;
        for (int d = 2; d * d <= candidate; ++d) {
            if (candidate % d == 0) {
                prime = false;
                break;
            }
        }
        if (!prime) continue;
        double r = std::sqrt(static_cast<double>(candidate));
        gen.push_back(r - std::floor(r));
        ++found;
    }
    return gen;
}

} // namespace riskbounds::detail
