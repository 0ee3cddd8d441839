#pragma once

// Complete elliptic integrals K, E and the Jacobi elliptic functions sn, dn
// by arithmetic-geometric-mean iteration, plus the exact elliptic traveling
// wave of the exponential lattice and its residual in the lattice ODE.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "todalab/lattice.hpp"

namespace toda {

namespace detail {
inline constexpr double agm_tolerance = 1e-15;
inline constexpr int agm_max_iter = 40;  // quadratic convergence makes this generous
}

/// K(k) = int_0^{pi/2} dtheta / sqrt(1 - k^2 sin^2 theta),   0 <= k < 1.
inline double complete_K(double k)
{
    if (!(k >= 0.0) || k >= 1.0) throw DomainError("modulus must lie in [0, 1)");
    double a = 1.0, g = std::sqrt(1.0 - k * k);
    for (int i = 0; i < detail::agm_max_iter && std::abs(a - g) > detail::agm_tolerance; ++i) {
        const double an = 0.5 * (a + g);
        g = std::sqrt(a * g);
        a = an;
    }
    return M_PI / (2.0 * a);
}

/// E(k) = int_0^{pi/2} sqrt(1 - k^2 sin^2 theta) dtheta,   0 <= k < 1.
/// E = K (1 - sum_{n>=0} 2^{n-1} c_n^2) with c_0 = k, c_{n+1} = (a_n - g_n)/2.
inline double complete_E(double k)
{
    if (!(k >= 0.0) || k >= 1.0) throw DomainError("modulus must lie in [0, 1)");
    double a = 1.0, g = std::sqrt(1.0 - k * k);
    double csum = 0.5 * k * k;
    double weight = 1.0;
    for (int i = 0; i < detail::agm_max_iter && std::abs(a - g) > detail::agm_tolerance; ++i) {
        const double c = 0.5 * (a - g);
        csum += weight * c * c;
        weight *= 2.0;
        const double an = 0.5 * (a + g);
        g = std::sqrt(a * g);
        a = an;
    }
    return M_PI / (2.0 * a) * (1.0 - csum);
}

/// sn(u, k) and dn(u, k) by the descending-Landen / AGM scheme: run the AGM,
/// set phi_N = 2^N a_N u, back-recur phi_{n-1} = (phi_n + asin((c_n/a_n)
/// sin phi_n))/2; then sn = sin phi_0 and dn = cos phi_0 / cos(phi_1 - phi_0).
inline std::pair<double, double> jacobi_sn_dn(double u, double k)
{
    if (!(k >= 0.0) || k >= 1.0) throw DomainError("modulus must lie in [0, 1)");
    if (k == 0.0) return {std::sin(u), 1.0};

    std::vector<double> an{1.0}, cn{k};
    double a = 1.0, g = std::sqrt(1.0 - k * k);
    for (int i = 0; i < detail::agm_max_iter; ++i) {
        const double c = 0.5 * (a - g);
        const double anext = 0.5 * (a + g);
        g = std::sqrt(a * g);
        a = anext;
        an.push_back(a);
        cn.push_back(c);
        if (std::abs(c) <= detail::agm_tolerance && an.size() >= 2) break;
    }
    const std::size_t levels = an.size() - 1;

    double phi = std::ldexp(a, static_cast<int>(levels)) * u;  // 2^N a_N u
    double phi_next = phi;
    for (std::size_t i = levels; i >= 1; --i) {
        phi_next = phi;
        double arg = cn[i] / an[i] * std::sin(phi);
        arg = std::max(-1.0, std::min(1.0, arg));
        phi = 0.5 * (phi + std::asin(arg));
    }
    const double sn = std::sin(phi);
    const double dn = std::cos(phi) / std::cos(phi_next - phi);
    return {sn, dn};
}

// ---------------------------------------------------------------------------
// Traveling wave

/// Parameters of the elliptic traveling wave of the lattice
/// qddot_n = -a (e^{-b(q_{n+1}-q_n)} - e^{-b(q_n-q_{n-1})}), unit masses:
/// potential parameters a, b > 0, modulus 0 < k < 1, wavelength > 0.
/// K, E and the frequency
///   nu = (1/2K) sqrt( ab / (1/sn^2(2K/wavelength) - 1 + E/K) )
/// are derived on construction.
struct CnoidalParams {
    double a = 1.0;
    double b = 1.0;
    double k = 0.5;
    double wavelength = 4.0;
    double K = 0.0, E = 0.0, nu = 0.0;  // derived

    CnoidalParams(double a_, double b_, double k_, double wavelength_)
        : a(a_), b(b_), k(k_), wavelength(wavelength_)
    {
        if (!(a > 0.0) || !(b > 0.0)) throw DomainError("potential parameters must be positive");
        if (!(k > 0.0) || k >= 1.0) throw DomainError("modulus must lie in (0, 1)");
        if (!(wavelength > 0.0)) throw DomainError("wavelength must be positive");
        K = complete_K(k);
        E = complete_E(k);
        const double sn = jacobi_sn_dn(2.0 * K / wavelength, k).first;
        if (sn == 0.0) throw DomainError("degenerate wavelength: sn(2K/wavelength) = 0");
        const double denom = 1.0 / (sn * sn) - 1.0 + E / K;
        nu = std::sqrt(a * b / denom) / (2.0 * K);
    }
};

/// Gap profile of the wave:
/// q_{n+1} - q_n = -(1/b) ln( 1 + (4(K nu)^2/(ab)) [dn^2(2K(nu t + n/wavelength)) - E/K] ).
inline double cnoidal_gap(long n, double t, const CnoidalParams& p)
{
    const double arg = 2.0 * p.K * (p.nu * t + static_cast<double>(n) / p.wavelength);
    const double dn = jacobi_sn_dn(arg, p.k).second;
    const double knu = p.K * p.nu;
    const double val = 1.0 + 4.0 * knu * knu / (p.a * p.b) * (dn * dn - p.E / p.K);
    if (!(val > 0.0)) throw DomainError("cnoidal parameters leave the log domain");
    return -std::log(val) / p.b;
}

/// Max residual of the lattice ODE over particles 1..n_count-2 and a uniform
/// time grid, with qddot taken by the 4th-order central stencil of step
/// fd_step.  Positions are anchored at q_0 = 0 (the ODE sees only gaps).
inline double cnoidal_residual(const CnoidalParams& p, std::size_t n_count,
                               double t0, double t1, std::size_t t_samples,
                               double fd_step)
{
    if (n_count < 3) throw DomainError("need at least 3 particles to form the ODE");
    if (t_samples < 1 || !(fd_step > 0.0)) throw DomainError("bad residual grid");

    auto positions = [&](double t) {
        std::vector<double> q(n_count, 0.0);
        for (std::size_t n = 0; n + 1 < n_count; ++n)
            q[n + 1] = q[n] + cnoidal_gap(static_cast<long>(n), t, p);
        return q;
    };

    double worst = 0.0;
    for (std::size_t it = 0; it < t_samples; ++it) {
        const double t = t_samples == 1
            ? t0
            : t0 + (t1 - t0) * static_cast<double>(it) / static_cast<double>(t_samples - 1);
        const auto qm2 = positions(t - 2.0 * fd_step);
        const auto qm1 = positions(t - fd_step);
        const auto q0 = positions(t);
        const auto qp1 = positions(t + fd_step);
        const auto qp2 = positions(t + 2.0 * fd_step);
        for (std::size_t n = 1; n + 1 < n_count; ++n) {
            const double qdd = (-qm2[n] + 16.0 * qm1[n] - 30.0 * q0[n] + 16.0 * qp1[n] - qp2[n])
                             / (12.0 * fd_step * fd_step);
            const double force = -p.a * (std::exp(-p.b * (q0[n + 1] - q0[n]))
                                       - std::exp(-p.b * (q0[n] - q0[n - 1])));
            worst = std::max(worst, std::abs(qdd - force));
        }
    }
    return worst;
}

}  // namespace toda
