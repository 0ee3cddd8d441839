#pragma once

// Phase-space types, Hamiltonians, force fields and the Flaschka change of
// variables for the open, forced, decoupled and periodic Toda chains.
//
// Units are dimensionless throughout (unit masses, unit interaction scale).
// Particle indices are reported 1-based in I/O and error messages; storage
// is 0-based.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace toda {

// ---------------------------------------------------------------------------
// Errors

/// A bond exponent left the representable range (would produce ±inf).
struct OverflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (sizes, ordering, positivity...).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An iteration failed to reach its tolerance within the budget.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Guarded exponential

/// Largest bond exponent evaluated as-is; exp(709) is the last finite double.
inline constexpr double max_bond_exponent = 709.0;

/// exp(x) for bond terms e^{q_i - q_{i+1}}.  Overflow aborts with a
/// structured error instead of returning inf (an inf here poisons every
/// downstream eigensolve); underflow beyond -709 is flushed to exact zero,
/// which is the correctly rounded value.
inline double bond_exp(double x)
{
    if (!(x <= max_bond_exponent))  // also catches NaN
        throw OverflowError("bond exponent " + std::to_string(x) + " exceeds +709");
    if (x < -max_bond_exponent)
        return 0.0;
    return std::exp(x);
}

// ---------------------------------------------------------------------------
// Phase space

/// Positions and momenta of an N-particle chain, N >= 2.
struct LatticeState {
    std::vector<double> q;
    std::vector<double> p;

    LatticeState() = default;
    LatticeState(std::vector<double> q_, std::vector<double> p_)
        : q(std::move(q_)), p(std::move(p_)) {}

    std::size_t size() const { return q.size(); }
};

inline void require_state(const LatticeState& s, std::size_t min_n = 2)
{
    if (s.q.size() != s.p.size())
        throw DomainError("q and p have different lengths");
    if (s.q.size() < min_n)
        throw DomainError("chain needs at least " + std::to_string(min_n) + " particles");
    for (std::size_t i = 0; i < s.q.size(); ++i)
        if (!std::isfinite(s.q[i]) || !std::isfinite(s.p[i]))
            throw DomainError("non-finite entry at particle " + std::to_string(i + 1));
}

/// Which chain the Hamiltonian couples, and how.
///
///   open            H_F   = 1/2 sum p^2 + sum_{n<N} e^{q_n - q_{n+1}}
///   forced          H_c   = H_F + c (q_1 - q_N)
///   decoupled       H_c^d = 1/2 sum p^2 + sum_{2<=n<=N-2} e^{q_n - q_{n+1}} + c (q_1 - q_N)
///   free            H_c^# = 1/2 sum p^2 + c (q_1 - q_N)
///   periodic        1/2 sum p^2 + sum_{n=1}^{N} e^{q_n - q_{n+1}},  q_{N+1} = q_1 + stretch
enum class SystemKind { open, forced, decoupled, free_ends, periodic };

struct System {
    SystemKind kind = SystemKind::open;
    double c = 0.0;        // forcing strength (forced/decoupled/free)
    double stretch = 0.0;  // periodic stretch s, fixed by the initial gaps

    static System open() { return {SystemKind::open, 0.0, 0.0}; }
    static System forced(double c) { return {SystemKind::forced, c, 0.0}; }
    static System decoupled(double c) { return {SystemKind::decoupled, c, 0.0}; }
    static System free_ends(double c) { return {SystemKind::free_ends, c, 0.0}; }
    static System periodic(double stretch = 0.0) { return {SystemKind::periodic, 0.0, stretch}; }
};

// ---------------------------------------------------------------------------
// Energies

/// H_F = 1/2 sum p^2 + sum_{n=1}^{N-1} e^{q_n - q_{n+1}}
inline double energy_open(const LatticeState& s)
{
    require_state(s);
    double kin = 0.0, pot = 0.0;
    for (double pn : s.p) kin += pn * pn;
    for (std::size_t n = 0; n + 1 < s.q.size(); ++n)
        pot += bond_exp(s.q[n] - s.q[n + 1]);
    return 0.5 * kin + pot;
}

/// H_c = H_F + c (q_1 - q_N); conserved exactly by the flow of (the forced
/// system), to O(dt^2) by the integrator.
inline double energy_forced(const LatticeState& s, double c)
{
    return energy_open(s) + c * (s.q.front() - s.q.back());
}

/// H_c^d: the core bonds n = 2..N-2 only, endpoints coupled to nothing but
/// the linear potential.  Needs N >= 3 (core n=2..N-1 nonempty).
inline double energy_decoupled(const LatticeState& s, double c)
{
    require_state(s, 3);
    double kin = 0.0, pot = 0.0;
    for (double pn : s.p) kin += pn * pn;
    for (std::size_t n = 1; n + 2 < s.q.size(); ++n)  // bonds 2..N-2, 1-based
        pot += bond_exp(s.q[n] - s.q[n + 1]);
    return 0.5 * kin + pot + c * (s.q.front() - s.q.back());
}

/// H_c^# = 1/2 sum p^2 + c (q_1 - q_N): no bonds at all.
inline double energy_free(const LatticeState& s, double c)
{
    require_state(s);
    double kin = 0.0;
    for (double pn : s.p) kin += pn * pn;
    return 0.5 * kin + c * (s.q.front() - s.q.back());
}

/// Periodic chain energy with wrap bond e^{q_N - q_1 - stretch}.
inline double energy_periodic(const LatticeState& s, double stretch)
{
    require_state(s);
    double kin = 0.0, pot = 0.0;
    const std::size_t n = s.size();
    for (double pn : s.p) kin += pn * pn;
    for (std::size_t i = 0; i + 1 < n; ++i)
        pot += bond_exp(s.q[i] - s.q[i + 1]);
    pot += bond_exp(s.q[n - 1] - s.q[0] - stretch);
    return 0.5 * kin + pot;
}

inline double energy(const LatticeState& s, const System& sys)
{
    switch (sys.kind) {
        case SystemKind::open: return energy_open(s);
        case SystemKind::forced: return energy_forced(s, sys.c);
        case SystemKind::decoupled: return energy_decoupled(s, sys.c);
        case SystemKind::free_ends: return energy_free(s, sys.c);
        case SystemKind::periodic: return energy_periodic(s, sys.stretch);
    }
    throw DomainError("unknown system kind");
}

// ---------------------------------------------------------------------------
// Forces (the momentum derivatives dp/dt; dq/dt is always p)

inline std::vector<double> forces(const LatticeState& s, const System& sys)
{
    require_state(s, sys.kind == SystemKind::decoupled ? 3 : 2);
    const std::size_t n = s.size();
    std::vector<double> f(n, 0.0);

    switch (sys.kind) {
        case SystemKind::open:
        case SystemKind::forced: {
            // dp_n = e^{q_{n-1}-q_n} - e^{q_n-q_{n+1}}, with the missing bonds
            // dropped at the ends; the forcing adds -c at 1 and +c at N.
            std::vector<double> bond(n - 1);
            for (std::size_t i = 0; i + 1 < n; ++i)
                bond[i] = bond_exp(s.q[i] - s.q[i + 1]);
            f[0] = -bond[0];
            for (std::size_t i = 1; i + 1 < n; ++i)
                f[i] = bond[i - 1] - bond[i];
            f[n - 1] = bond[n - 2];
            if (sys.kind == SystemKind::forced) {
                f[0] -= sys.c;
                f[n - 1] += sys.c;
            }
            break;
        }
        case SystemKind::decoupled: {
            // core bonds 2..N-2 only; endpoints feel the constant force only
            for (std::size_t i = 1; i + 2 < n; ++i) {
                const double b = bond_exp(s.q[i] - s.q[i + 1]);
                f[i] -= b;
                f[i + 1] += b;
            }
            f[0] -= sys.c;
            f[n - 1] += sys.c;
            break;
        }
        case SystemKind::free_ends: {
            f[0] = -sys.c;
            f[n - 1] = sys.c;
            break;
        }
        case SystemKind::periodic: {
            // cyclic bonds, q_{N+1} = q_1 + stretch
            std::vector<double> bond(n);
            for (std::size_t i = 0; i + 1 < n; ++i)
                bond[i] = bond_exp(s.q[i] - s.q[i + 1]);
            bond[n - 1] = bond_exp(s.q[n - 1] - s.q[0] - sys.stretch);
            for (std::size_t i = 0; i < n; ++i)
                f[i] = bond[(i + n - 1) % n] - bond[i];
            break;
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Flaschka variables:  a_i = -p_i/2,  b_i = (1/2) e^{(q_i - q_{i+1})/2}

enum class ChainKind { open, periodic };

/// |b| = |a| - 1 for the open chain, |b| = |a| for the periodic one (the last
/// entry carries the wrap bond and hence the stretch).
struct FlaschkaVars {
    std::vector<double> a;
    std::vector<double> b;
    ChainKind kind = ChainKind::open;
};

inline void require_flaschka(const FlaschkaVars& v)
{
    const std::size_t expect_b = v.kind == ChainKind::open ? v.a.size() - 1 : v.a.size();
    if (v.a.size() < 2 || v.b.size() != expect_b)
        throw DomainError("flaschka variable lengths inconsistent with chain kind");
    for (double bi : v.b)
        if (!(bi > 0.0))
            throw DomainError("flaschka b entries must be positive");
}

inline FlaschkaVars to_flaschka(const LatticeState& s, ChainKind kind, double stretch = 0.0)
{
    require_state(s);
    const std::size_t n = s.size();
    FlaschkaVars v;
    v.kind = kind;
    v.a.resize(n);
    for (std::size_t i = 0; i < n; ++i) v.a[i] = -0.5 * s.p[i];
    const std::size_t nb = kind == ChainKind::open ? n - 1 : n;
    v.b.resize(nb);
    for (std::size_t i = 0; i + 1 < n; ++i)
        v.b[i] = 0.5 * bond_exp(0.5 * (s.q[i] - s.q[i + 1]));
    if (kind == ChainKind::periodic)
        v.b[n - 1] = 0.5 * bond_exp(0.5 * (s.q[n - 1] - s.q[0] - stretch));
    for (double bi : v.b)
        if (!(bi > 0.0))
            throw DomainError("gap too large: flaschka b underflowed to zero");
    return v;
}

/// Inverse map.  (a, b) forget the center of mass, so the caller supplies
/// qsum = sum q_i.  Exact round trip with to_flaschka up to rounding.
inline LatticeState from_flaschka(const FlaschkaVars& v, double qsum)
{
    require_flaschka(v);
    const std::size_t n = v.a.size();
    LatticeState s;
    s.p.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.p[i] = -2.0 * v.a[i];

    // gaps g_i = q_i - q_{i+1} = 2 ln(2 b_i); anchor by the requested mean
    std::vector<double> gap(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
        gap[i] = 2.0 * std::log(2.0 * v.b[i]);
    s.q.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        s.q[i] = s.q[i - 1] - gap[i - 1];
    double shift = qsum;
    for (double qi : s.q) shift -= qi;
    shift /= static_cast<double>(n);
    for (double& qi : s.q) qi += shift;
    return s;
}

// ---------------------------------------------------------------------------
// Small conveniences used throughout

inline double sum(const std::vector<double>& x)
{
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc;
}

/// Core of a forced/decoupled chain: particles 2..N-1.
inline LatticeState core_of(const LatticeState& s)
{
    require_state(s, 3);
    LatticeState core;
    core.q.assign(s.q.begin() + 1, s.q.end() - 1);
    core.p.assign(s.p.begin() + 1, s.p.end() - 1);
    return core;
}

}  // namespace toda
