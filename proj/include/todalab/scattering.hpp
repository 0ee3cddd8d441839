#pragma once

// Asymptotic data of the open and forced chains: closed-form scattering maps
// (velocities and intercepts from spectral data), late-window trajectory
// fits, the wave operators W# and W-hat# with a constructive inverse, the
// intertwiner built from them, the transported conserved integrals, and the
// Lyapunov functional that controls the core's approach to its limit.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "todalab/integrator.hpp"
#include "todalab/lattice.hpp"
#include "todalab/spectral.hpp"

namespace toda {

// ---------------------------------------------------------------------------
// Closed-form scattering data

/// Asymptotic core velocities: alpha_n = -2 lambda_n, strictly increasing
/// when the eigenvalues are listed in decreasing order.
inline std::vector<double> alpha_from_spectrum(const SpectralData& s)
{
    require_spectral(s);
    std::vector<double> alpha(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) alpha[n] = -2.0 * s.lambdas[n];
    return alpha;
}

/// Asymptotic core intercepts (t -> +inf) of an M-particle open chain:
///
///   beta_n = qsum0/M - (2/M) sum_j ln( (w_n/w_j)
///              * prod_{l<n} 2(lambda_l - lambda_n)
///              / prod_{l<j} 2(lambda_l - lambda_j) ) ,
///
/// with empty products equal to 1.  The double sum is odd under n <-> j, so
/// sum_n beta_n = qsum0 identically.
inline std::vector<double> beta_closed_form(const SpectralData& s, double qsum0)
{
    require_spectral(s);
    const std::size_t m = s.size();

    // f_n = ln w_n + sum_{l<n} ln 2(lambda_l - lambda_n);
    // then beta_n = qsum0/M - 2 f_n + (2/M) sum_j f_j.
    std::vector<double> f(m);
    for (std::size_t n = 0; n < m; ++n) {
        double acc = std::log(s.first_components[n]);
        for (std::size_t l = 0; l < n; ++l)
            acc += std::log(2.0 * (s.lambdas[l] - s.lambdas[n]));
        f[n] = acc;
    }
    const double fbar = sum(f) / static_cast<double>(m);
    const double qbar = qsum0 / static_cast<double>(m);
    std::vector<double> beta(m);
    for (std::size_t n = 0; n < m; ++n) beta[n] = qbar - 2.0 * (f[n] - fbar);
    return beta;
}

/// The literal all-ordered-pairs evaluation of the printed shift formula,
/// sum_{j != k} ln (alpha_j^- - alpha_k^+)^2.  Exposed primarily for the
/// two-particle case; any vanishing cross-difference is an error.
inline double scattering_shift(const std::vector<double>& alpha_minus,
                               const std::vector<double>& alpha_plus)
{
    if (alpha_minus.size() != alpha_plus.size())
        throw DomainError("velocity lists must have equal length");
    const std::size_t m = alpha_minus.size();
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k) {
            if (j == k) continue;
            const double d = alpha_minus[j] - alpha_plus[k];
            if (d == 0.0) throw DomainError("zero cross-difference in scattering shift");
            acc += std::log(d * d);
        }
    return acc;
}

/// Two-sided closed-form scattering data of an open chain.  The minus data
/// come from the time-reversed state (q, -p): its forward slopes are
/// -alpha^- and its forward intercepts are beta^-.
struct ScatteringData {
    std::vector<double> alpha_plus, beta_plus;
    std::optional<std::vector<double>> alpha_minus, beta_minus;

    struct Endpoints { double q1, p1, qn, pn; };
    std::optional<Endpoints> endpoints;  // forced-system wave-operator output
};

inline ScatteringData scattering_closed_form(const LatticeState& chain, bool two_sided = true)
{
    require_state(chain, 1);
    ScatteringData out;
    if (chain.size() == 1) {
        out.alpha_plus = {chain.p[0]};
        out.beta_plus = {chain.q[0]};
        if (two_sided) {
            out.alpha_minus = out.alpha_plus;
            out.beta_minus = out.beta_plus;
        }
        return out;
    }
    const FlaschkaVars v = to_flaschka(chain, ChainKind::open);
    const SpectralData s = eig_tridiag(JacobiMatrix{v.a, v.b});
    out.alpha_plus = alpha_from_spectrum(s);
    out.beta_plus = beta_closed_form(s, sum(chain.q));
    if (two_sided) {
        LatticeState reversed = chain;
        for (double& pi : reversed.p) pi = -pi;
        const FlaschkaVars vr = to_flaschka(reversed, ChainKind::open);
        const SpectralData sr = eig_tridiag(JacobiMatrix{vr.a, vr.b});
        std::vector<double> am = alpha_from_spectrum(sr);
        for (double& a : am) a = -a;
        out.alpha_minus = std::move(am);
        out.beta_minus = beta_closed_form(sr, sum(chain.q));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Least-squares fits

/// y ~= intercept + slope * t
inline std::array<double, 2> linear_fit(const std::vector<double>& t,
                                        const std::vector<double>& y)
{
    const std::size_t n = t.size();
    if (n < 2 || y.size() != n) throw DomainError("linear fit needs >= 2 matched samples");
    double tbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < n; ++i) { tbar += t[i]; ybar += y[i]; }
    tbar /= static_cast<double>(n);
    ybar /= static_cast<double>(n);
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (t[i] - tbar) * (t[i] - tbar);
        sty += (t[i] - tbar) * (y[i] - ybar);
    }
    if (!(stt > 0.0)) throw DomainError("degenerate fit window");
    const double slope = sty / stt;
    return {ybar - slope * tbar, slope};
}

/// y ~= c0 + c1 t + c2 t^2 (normal equations on centered t)
inline std::array<double, 3> quadratic_fit(const std::vector<double>& t,
                                           const std::vector<double>& y)
{
    const std::size_t n = t.size();
    if (n < 3 || y.size() != n) throw DomainError("quadratic fit needs >= 3 matched samples");
    double tbar = 0.0;
    for (double ti : t) tbar += ti;
    tbar /= static_cast<double>(n);

    double s1 = 0, s2 = 0, s3 = 0, s4 = 0, b0 = 0, b1 = 0, b2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = t[i] - tbar;
        const double x2 = x * x;
        s1 += x; s2 += x2; s3 += x2 * x; s4 += x2 * x2;
        b0 += y[i]; b1 += x * y[i]; b2 += x2 * y[i];
    }
    const double s0 = static_cast<double>(n);
    // solve the 3x3 symmetric system  [s0 s1 s2; s1 s2 s3; s2 s3 s4] c = b
    const double det = s0 * (s2 * s4 - s3 * s3) - s1 * (s1 * s4 - s3 * s2)
                     + s2 * (s1 * s3 - s2 * s2);
    if (!(std::abs(det) > 0.0)) throw DomainError("degenerate fit window");
    const double a0 = (b0 * (s2 * s4 - s3 * s3) - s1 * (b1 * s4 - s3 * b2)
                     + s2 * (b1 * s3 - s2 * b2)) / det;
    const double a1 = (s0 * (b1 * s4 - b2 * s3) - b0 * (s1 * s4 - s3 * s2)
                     + s2 * (s1 * b2 - s2 * b1)) / det;
    const double a2 = (s0 * (s2 * b2 - s3 * b1) - s1 * (s1 * b2 - s3 * b0)
                     + b0 * (s1 * s3 - s2 * s2)) / det;
    // un-center
    return {a0 - a1 * tbar + a2 * tbar * tbar, a1 - 2.0 * a2 * tbar, a2};
}

/// Per-particle slope/intercept of q_n(t) over the trailing window, the
/// exponential approach rate of p_n to its limit, and the leading quadratic
/// coefficients of -(ln of the boundary bond terms).
struct AsymptoticFit {
    std::vector<double> slope;
    std::vector<double> intercept;
    std::vector<double> mu;        // NaN where the residual sits at rounding level
    double gamma_first = 0.0;      // t^2 coefficient of q_2 - q_1
    double gamma_last = 0.0;       // t^2 coefficient of q_N - q_{N-1}
    std::size_t window_begin = 0;
};

inline AsymptoticFit fit_asymptotics(const Trajectory& traj, double window_fraction = 0.25)
{
    if (!(window_fraction > 0.0) || window_fraction > 1.0)
        throw DomainError("window fraction must lie in (0, 1]");
    const std::size_t total = traj.size();
    const auto want = static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(total)));
    if (want < 10) throw DomainError("fit window has fewer than 10 samples");
    const std::size_t begin = total - want;

    const std::size_t n = traj.states.front().size();
    std::vector<double> tw(traj.times.begin() + static_cast<std::ptrdiff_t>(begin), traj.times.end());

    AsymptoticFit fit;
    fit.window_begin = begin;
    fit.slope.resize(n);
    fit.intercept.resize(n);
    fit.mu.assign(n, std::numeric_limits<double>::quiet_NaN());

    std::vector<double> series(tw.size());
    for (std::size_t part = 0; part < n; ++part) {
        for (std::size_t i = 0; i < tw.size(); ++i)
            series[i] = traj.states[begin + i].q[part];
        const auto [b, a] = linear_fit(tw, series);
        fit.intercept[part] = b;
        fit.slope[part] = a;

        // p_n approaches the slope like C e^{-mu t}; fit ln of the residual
        std::vector<double> ts, ys;
        for (std::size_t i = 0; i < tw.size(); ++i) {
            const double r = std::abs(traj.states[begin + i].p[part] - a);
            if (r > 1e-13) {
                ts.push_back(tw[i]);
                ys.push_back(std::log(r));
            }
        }
        if (ts.size() >= tw.size() / 2 && ts.size() >= 3)
            fit.mu[part] = -linear_fit(ts, ys)[1];
    }

    // -(ln e^{q_1 - q_2}) = q_2 - q_1 grows like (c/2) t^2 for the forced chain
    std::vector<double> bond(tw.size());
    for (std::size_t i = 0; i < tw.size(); ++i)
        bond[i] = traj.states[begin + i].q[1] - traj.states[begin + i].q[0];
    fit.gamma_first = quadratic_fit(tw, bond)[2];
    for (std::size_t i = 0; i < tw.size(); ++i)
        bond[i] = traj.states[begin + i].q[n - 1] - traj.states[begin + i].q[n - 2];
    fit.gamma_last = quadratic_fit(tw, bond)[2];
    return fit;
}

// ---------------------------------------------------------------------------
// Wave operators

struct WaveOpOptions {
    double tolerance = 1e-8;  // successive-difference stop for the doubling ladder
    double dt = 1e-4;         // internal integrator step
    double t_first = 5.0;     // first ladder checkpoint
    double t_max = 200.0;     // hard cap; beyond it the limit is declared missing
};

namespace detail {

/// Verlet loop with Kahan-compensated q, p accumulation.  The wave-operator
/// horizons reach t ~ 10^2 with q growing like c t^2 / 2, where plain
/// accumulation picks up eps * |q| per step and drowns tolerances near 1e-8;
/// compensation keeps the floor flat across the doubling ladder.
struct CompensatedVerlet {
    LatticeState s;
    std::vector<double> comp_q, comp_p;
    System sys;
    double dt;

    CompensatedVerlet(const LatticeState& s0, const System& system, double step)
        : s(s0), comp_q(s0.size(), 0.0), comp_p(s0.size(), 0.0), sys(system), dt(step) {}

    static void add(double& x, double& comp, double inc)
    {
        const double y = inc - comp;
        const double t = x + y;
        comp = (t - x) - y;
        x = t;
    }

    void steps(std::uint64_t count)
    {
        const std::size_t n = s.size();
        for (std::uint64_t k = 0; k < count; ++k) {
            std::vector<double> f = forces(s, sys);
            for (std::size_t i = 0; i < n; ++i) {
                add(s.p[i], comp_p[i], 0.5 * dt * f[i]);
                add(s.q[i], comp_q[i], dt * s.p[i]);
            }
            f = forces(s, sys);
            for (std::size_t i = 0; i < n; ++i)
                add(s.p[i], comp_p[i], 0.5 * dt * f[i]);
        }
    }
};

}  // namespace detail

/// W#: the limit of U^#_{-t} o U_t, evaluated by integrating the forced flow
/// and undoing the free flow in closed form, with t doubling until two
/// successive values agree.  The endpoint components converge like
/// e^{-gamma t^2}, the core ones like e^{-mu t}.
inline LatticeState wave_op_free(const LatticeState& s0, double c,
                                 const WaveOpOptions& opts = {})
{
    require_state(s0, 3);
    if (!(c > 0.0)) throw DomainError("wave operator needs c > 0");
    if (!(opts.tolerance > 0.0) || !(opts.dt > 0.0) || !(opts.t_first > 0.0))
        throw DomainError("bad wave-operator options");

    detail::CompensatedVerlet walker(s0, System::forced(c), opts.dt);
    double now = 0.0;
    auto advance_to = [&](double target) {
        walker.steps(static_cast<std::uint64_t>(std::llround((target - now) / opts.dt)));
        now = target;
    };

    double horizon = opts.t_first;
    advance_to(horizon);
    LatticeState prev = free_flow(walker.s, c, -horizon);
    while (2.0 * horizon <= opts.t_max * (1.0 + 1e-12)) {
        horizon *= 2.0;
        advance_to(horizon);
        LatticeState cur = free_flow(walker.s, c, -horizon);
        double diff = 0.0;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            diff = std::max(diff, std::abs(cur.q[i] - prev.q[i]));
            diff = std::max(diff, std::abs(cur.p[i] - prev.p[i]));
        }
        if (diff < opts.tolerance) return cur;
        prev = cur;
    }
    throw ConvergenceError("wave operator did not settle by t_max");
}

/// W-hat#: fully closed form.  Endpoints pass through unchanged; the core is
/// mapped to its scattering data (beta as positions, alpha as momenta).
inline LatticeState wave_op_decoupled_closed(const LatticeState& s0, double /*c*/)
{
    require_state(s0, 3);
    const LatticeState core = core_of(s0);
    LatticeState out = s0;
    if (core.size() == 1) return out;  // beta = q, alpha = p: identity core

    const FlaschkaVars v = to_flaschka(core, ChainKind::open);
    const SpectralData s = eig_tridiag(JacobiMatrix{v.a, v.b});
    const std::vector<double> alpha = alpha_from_spectrum(s);
    const std::vector<double> beta = beta_closed_form(s, sum(core.q));
    for (std::size_t i = 0; i < core.size(); ++i) {
        out.q[i + 1] = beta[i];
        out.p[i + 1] = alpha[i];
    }
    return out;
}

namespace detail {

/// The log-weight combinations r_n recovered from intercepts x and strictly
/// increasing velocities y: with L_n = sum_{l<n} ln(y_n - y_l),
/// r_n = (M/2)(xbar - x_n) - M L_n + sum_j L_j.  They sum to zero.
inline std::vector<double> inverse_log_weights(const std::vector<double>& x,
                                               const std::vector<double>& y)
{
    const std::size_t m = x.size();
    if (m == 0 || y.size() != m) throw DomainError("intercept/velocity lists mismatch");
    for (std::size_t i = 0; i + 1 < m; ++i)
        if (!(y[i] < y[i + 1]))
            throw DomainError("not in the wave-operator image: core velocities must increase");

    std::vector<double> bigl(m);
    for (std::size_t n = 0; n < m; ++n) {
        double acc = 0.0;
        for (std::size_t l = 0; l < n; ++l) acc += std::log(y[n] - y[l]);
        bigl[n] = acc;
    }
    const double xbar = sum(x) / static_cast<double>(m);
    const double lsum = sum(bigl);
    std::vector<double> r(m);
    for (std::size_t n = 0; n < m; ++n)
        r[n] = 0.5 * static_cast<double>(m) * (xbar - x[n])
             - static_cast<double>(m) * bigl[n] + lsum;
    return r;
}

}  // namespace detail

/// Constructive inverse of W-hat# on its image (core momenta strictly
/// increasing): recover the log-weight combinations r_n from the intercepts,
/// normalize them into eigenvector first components, rebuild the Jacobi
/// matrix, and read the chain back off.  Endpoints pass through.
inline LatticeState wave_op_decoupled_inverse(const LatticeState& point, double /*c*/)
{
    require_state(point, 3);
    const std::size_t m = point.size() - 2;
    LatticeState out = point;
    if (m == 1) return out;

    std::vector<double> x(m), y(m);
    for (std::size_t i = 0; i < m; ++i) {
        x[i] = point.q[i + 1];
        y[i] = point.p[i + 1];
    }
    const std::vector<double> r = detail::inverse_log_weights(x, y);

    // w_n = e^{r_n/M} / sqrt(sum e^{2 r_j/M}), shifted by max r/M for safety
    const double md = static_cast<double>(m);
    double top = r[0] / md;
    for (double rn : r) top = std::max(top, rn / md);
    SpectralData s;
    s.lambdas.resize(m);
    s.first_components.resize(m);
    double norm2 = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
        const double w = std::exp(r[n] / md - top);
        s.first_components[n] = w;
        norm2 += w * w;
        s.lambdas[n] = -0.5 * y[n];  // descending since y increases
    }
    const double scale = 1.0 / std::sqrt(norm2);
    for (double& w : s.first_components) w *= scale;

    const JacobiMatrix j = jacobi_from_spectral(s);
    const LatticeState core =
        from_flaschka(FlaschkaVars{j.diag, j.offdiag, ChainKind::open}, sum(x));
    for (std::size_t i = 0; i < m; ++i) {
        out.q[i + 1] = core.q[i];
        out.p[i + 1] = core.p[i];
    }
    return out;
}

/// W = (W-hat#)^{-1} o W#: conjugates the forced flow to the decoupled one,
/// U-hat_t o W = W o U_t.  Computed through the free wave operator, never as
/// a direct limit against U-hat.
inline LatticeState intertwiner(const LatticeState& s0, double c,
                                const WaveOpOptions& opts = {})
{
    return wave_op_decoupled_inverse(wave_op_free(s0, c, opts), c);
}

// ---------------------------------------------------------------------------
// Conserved integrals

/// The N commuting integrals of the free decoupled flow:
/// I_1 = p_1^2/2 + c q_1,  I_n = p_n (interior),  I_N = p_N^2/2 - c q_N.
inline std::vector<double> free_integrals(const LatticeState& s, double c)
{
    require_state(s);
    const std::size_t n = s.size();
    std::vector<double> vals(n);
    vals[0] = 0.5 * s.p[0] * s.p[0] + c * s.q[0];
    for (std::size_t i = 1; i + 1 < n; ++i) vals[i] = s.p[i];
    vals[n - 1] = 0.5 * s.p[n - 1] * s.p[n - 1] - c * s.q[n - 1];
    return vals;
}

/// J_n = I_n o W#: commuting integrals of the forced flow.
inline std::vector<double> conserved_integrals(const LatticeState& s, double c,
                                               const WaveOpOptions& opts = {})
{
    return free_integrals(wave_op_free(s, c, opts), c);
}

// ---------------------------------------------------------------------------
// Step-3 Lyapunov functional

/// S(t) = sum (a_n - A_n)^2 + 2 sum b_n^2 evaluated on each sampled state,
/// with A the limiting a-values (-p_infty/2, i.e. the eigenvalues in
/// decreasing order).  Decays like e^{-mu t} along the flow.
inline std::vector<double> lyapunov_series(const Trajectory& traj,
                                           const std::vector<double>& limits)
{
    if (traj.size() == 0) throw DomainError("empty trajectory");
    const std::size_t n = traj.states.front().size();
    if (limits.size() != n) throw DomainError("limit velocity list length mismatch");

    std::vector<double> series;
    series.reserve(traj.size());
    for (const auto& s : traj.states) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = -0.5 * s.p[i] - limits[i];
            acc += d * d;
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double b = 0.5 * bond_exp(0.5 * (s.q[i] - s.q[i + 1]));
            acc += 2.0 * b * b;
        }
        series.push_back(acc);
    }
    return series;
}

/// Restrict a forced-chain trajectory to its core particles 2..N-1.
inline Trajectory core_trajectory(const Trajectory& traj)
{
    Trajectory out = traj;
    for (auto& s : out.states) s = core_of(s);
    if (!out.states.empty() && out.states.front().size() >= 2)
        out.h0 = energy_open(out.states.front());
    out.system = System::open();
    return out;
}

}  // namespace toda
