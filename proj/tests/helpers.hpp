#pragma once

// Shared helpers for the test suites: seeded random states (std::mt19937_64,
// deliberately independent of the library's own counter RNG) and small
// comparison utilities.

#include <random>
#include <vector>

#include "todalab/lattice.hpp"

namespace testutil {

inline toda::LatticeState random_state(std::size_t n, std::uint64_t seed,
                                       double q_scale = 1.0, double p_scale = 1.0)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    toda::LatticeState s;
    s.q.resize(n);
    s.p.resize(n);
    // positions from gaps so the chain is never wildly disordered
    s.q[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) s.q[i] = s.q[i - 1] + q_scale * normal(gen);
    for (std::size_t i = 0; i < n; ++i) s.p[i] = p_scale * normal(gen);
    return s;
}

inline double max_abs_diff(const toda::LatticeState& a, const toda::LatticeState& b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a.q[i] - b.q[i]));
        d = std::max(d, std::abs(a.p[i] - b.p[i]));
    }
    return d;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace testutil
