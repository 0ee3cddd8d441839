#pragma once

// Action-angle coordinates for the decoupled flow and, transported through
// the intertwiner, for the forced flow; plus a generic finite-difference
// Poisson-bracket checker.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "todalab/lattice.hpp"
#include "todalab/scattering.hpp"
#include "todalab/spectral.hpp"

namespace toda {

/// Canonical pairs (theta_i, lam_i), i = 1..N, indexed 0-based here:
/// slot 0 and slot N-1 are the endpoint pairs, slots 1..N-3 carry the core
/// spectral pairs, slot N-2 carries the (mean position, total momentum) pair
/// of the core.
struct ActionAngleCoords {
    std::vector<double> theta;
    std::vector<double> lam;

    std::size_t size() const { return theta.size(); }
};

/// Action-angle map of the decoupled Hamiltonian.
///
/// Endpoints:  theta_1 = -p_1/c,  lam_1 = p_1^2/2 + c q_1,
///             theta_N =  p_N/c,  lam_N = p_N^2/2 - c q_N.
/// Core (size M = N-2, spectral data (lambda, w) of its Jacobi matrix, with
/// Z the characteristic polynomial and the last core index as reference):
///   theta_k = ln( (w_k / w_M) |Z'(lambda_k)/Z'(lambda_M)|^{1/2} ),
///   lam_k   = lambda_k - mean(lambda),              k = 1..M-1,
///   theta_{last} = mean of core q,   lam_{last} = sum of core p.
/// For M = 1 the core pair degenerates to (q_2, p_2).
inline ActionAngleCoords action_angle_decoupled(const LatticeState& s, double c)
{
    require_state(s, 3);
    if (c == 0.0) throw DomainError("action-angle variables need c != 0");
    const std::size_t n = s.size();
    const std::size_t m = n - 2;

    ActionAngleCoords coords;
    coords.theta.assign(n, 0.0);
    coords.lam.assign(n, 0.0);

    coords.theta[0] = -s.p[0] / c;
    coords.lam[0] = 0.5 * s.p[0] * s.p[0] + c * s.q[0];
    coords.theta[n - 1] = s.p[n - 1] / c;
    coords.lam[n - 1] = 0.5 * s.p[n - 1] * s.p[n - 1] - c * s.q[n - 1];

    const LatticeState core = core_of(s);
    if (m == 1) {
        coords.theta[1] = core.q[0];
        coords.lam[1] = core.p[0];
        return coords;
    }

    const FlaschkaVars v = to_flaschka(core, ChainKind::open);
    const SpectralData sd = eig_tridiag(JacobiMatrix{v.a, v.b});
    const double zref = char_poly_derivative(sd, m - 1);
    const double mean_lambda = sum(sd.lambdas) / static_cast<double>(m);
    for (std::size_t k = 0; k + 1 < m; ++k) {
        const double zk = char_poly_derivative(sd, k);
        coords.theta[1 + k] = std::log(sd.first_components[k] / sd.first_components[m - 1]
                                       * std::sqrt(std::abs(zk / zref)));
        coords.lam[1 + k] = sd.lambdas[k] - mean_lambda;
    }
    coords.theta[n - 2] = sum(core.q) / static_cast<double>(m);
    coords.lam[n - 2] = sum(core.p);
    return coords;
}

/// Action-angle map of the forced Hamiltonian: the decoupled coordinates
/// composed with the intertwiner.  The actions are conserved along the
/// forced flow; the angles move linearly.
inline ActionAngleCoords action_angle_forced(const LatticeState& s0, double c,
                                             const WaveOpOptions& opts = {})
{
    if (!(c > 0.0)) throw DomainError("forced action-angle variables need c > 0");
    return action_angle_decoupled(intertwiner(s0, c, opts), c);
}

/// The decoupled Hamiltonian expressed through the actions alone:
///   H = lam_1 + lam_N + 2 sum_k lam_k^2 + 2 (sum_k lam_k)^2
///       + lam_{last}^2 / (2 (N-2)),
/// with k running over the core spectral slots.  Equals energy_decoupled on
/// the image of action_angle_decoupled.
inline double hamiltonian_in_actions(const ActionAngleCoords& coords, std::size_t n)
{
    if (n < 3 || coords.theta.size() != n || coords.lam.size() != n)
        throw DomainError("coordinate lists must have length N >= 3");
    double core_sq = 0.0, core_sum = 0.0;
    for (std::size_t j = 1; j + 2 < n; ++j) {
        core_sq += coords.lam[j] * coords.lam[j];
        core_sum += coords.lam[j];
    }
    const double last = coords.lam[n - 2];
    return coords.lam[0] + coords.lam[n - 1] + 2.0 * core_sq + 2.0 * core_sum * core_sum
         + last * last / (2.0 * static_cast<double>(n - 2));
}

/// Angle velocities dtheta_i/dt = dH/dlam_i:
///   (1,  4 (lam_i + sum_j lam_j) over core slots,  lam_{last}/(N-2),  1).
inline std::vector<double> angle_rates(const ActionAngleCoords& coords, std::size_t n,
                                       double c)
{
    if (n < 3 || coords.lam.size() != n)
        throw DomainError("coordinate lists must have length N >= 3");
    if (c == 0.0) throw DomainError("angle rates need c != 0");
    std::vector<double> rates(n, 0.0);
    double core_sum = 0.0;
    for (std::size_t j = 1; j + 2 < n; ++j) core_sum += coords.lam[j];
    rates[0] = 1.0;
    rates[n - 1] = 1.0;
    for (std::size_t j = 1; j + 2 < n; ++j)
        rates[j] = 4.0 * (coords.lam[j] + core_sum);
    rates[n - 2] = coords.lam[n - 2] / static_cast<double>(n - 2);
    return rates;
}

// ---------------------------------------------------------------------------
// Finite-difference Poisson bracket

using Observable = std::function<double(const LatticeState&)>;

/// Canonical bracket {f, g} = sum_n (df/dq_n dg/dp_n - df/dp_n dg/dq_n) with
/// central differences of step h; truncation error O(h^2).
inline double poisson_bracket(const Observable& f, const Observable& g,
                              const LatticeState& point, double h = 1e-5)
{
    if (!(h >= 1e-7) || !(h <= 1e-3))
        throw DomainError("finite-difference step must lie in [1e-7, 1e-3]");
    require_state(point);
    const std::size_t n = point.size();

    auto diff = [&](const Observable& obs, bool wrt_q, std::size_t i) {
        LatticeState plus = point, minus = point;
        (wrt_q ? plus.q[i] : plus.p[i]) += h;
        (wrt_q ? minus.q[i] : minus.p[i]) -= h;
        return (obs(plus) - obs(minus)) / (2.0 * h);
    };

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += diff(f, true, i) * diff(g, false, i) - diff(f, false, i) * diff(g, true, i);
    return acc;
}

}  // namespace toda
