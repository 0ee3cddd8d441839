#pragma once

// Lax pairs for every chain variant, and numerical verification of the Lax
// equations (plain and driven) along sampled trajectories.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

#include "todalab/integrator.hpp"
#include "todalab/lattice.hpp"

namespace toda {

enum class PairKind { periodic, open, two_by_two, combined, combined_sharp };

/// L symmetric / B antisymmetric for the open and periodic kinds; the 2x2
/// endpoint blocks and the combined matrices are not symmetric.
struct MatrixPair {
    Eigen::MatrixXd L;
    Eigen::MatrixXd B;
    PairKind kind = PairKind::open;
};

// ---------------------------------------------------------------------------
// Builders

/// Periodic pair: tridiagonal plus corners, the corner entries carrying the
/// wrap bond b_N.
inline MatrixPair build_periodic(const FlaschkaVars& v)
{
    require_flaschka(v);
    if (v.kind != ChainKind::periodic || v.a.size() < 3)
        throw DomainError("periodic pair needs periodic flaschka variables, N >= 3");
    const auto n = static_cast<Eigen::Index>(v.a.size());
    MatrixPair mp;
    mp.kind = PairKind::periodic;
    mp.L = Eigen::MatrixXd::Zero(n, n);
    mp.B = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) mp.L(i, i) = v.a[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double b = v.b[static_cast<std::size_t>(i)];
        mp.L(i, i + 1) = mp.L(i + 1, i) = b;
        mp.B(i, i + 1) = -b;
        mp.B(i + 1, i) = b;
    }
    const double bn = v.b.back();
    mp.L(0, n - 1) = mp.L(n - 1, 0) = bn;
    mp.B(0, n - 1) = bn;
    mp.B(n - 1, 0) = -bn;
    return mp;
}

inline MatrixPair build_open(const FlaschkaVars& v)
{
    require_flaschka(v);
    if (v.kind != ChainKind::open)
        throw DomainError("open pair needs open flaschka variables");
    const auto n = static_cast<Eigen::Index>(v.a.size());
    MatrixPair mp;
    mp.kind = PairKind::open;
    mp.L = Eigen::MatrixXd::Zero(n, n);
    mp.B = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) mp.L(i, i) = v.a[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double b = v.b[static_cast<std::size_t>(i)];
        mp.L(i, i + 1) = mp.L(i + 1, i) = b;
        mp.B(i, i + 1) = -b;
        mp.B(i + 1, i) = b;
    }
    return mp;
}

/// One-particle pair for H = p^2/2 + V(q) with linear potential V(q) = v q:
/// L = [[p, 2 V(q)], [1, -p]], B = [[0, V'(q)], [0, 0]].  det L = -p^2 - 2V(q)
/// is conserved along the flow q' = p, p' = -v.  Left endpoint of the forced
/// chain: v = +c; right endpoint: v = -c.
inline MatrixPair build_two_by_two(double q, double p, double v)
{
    MatrixPair mp;
    mp.kind = PairKind::two_by_two;
    mp.L = Eigen::MatrixXd::Zero(2, 2);
    mp.B = Eigen::MatrixXd::Zero(2, 2);
    mp.L(0, 0) = p;
    mp.L(0, 1) = 2.0 * v * q;
    mp.L(1, 0) = 1.0;
    mp.L(1, 1) = -p;
    mp.B(0, 1) = v;
    return mp;
}

namespace detail {

inline void place_endpoint_blocks(MatrixPair& mp, Eigen::Index at,
                                  const std::vector<double>& qq, const std::vector<double>& pp,
                                  double c)
{
    const std::size_t n = qq.size();
    const MatrixPair left = build_two_by_two(qq[0], pp[0], c);
    const MatrixPair right = build_two_by_two(qq[n - 1], pp[n - 1], -c);
    mp.L.block(at, at, 2, 2) = left.L;
    mp.B.block(at, at, 2, 2) = left.B;
    mp.L.block(at + 2, at + 2, 2, 2) = right.L;
    mp.B.block(at + 2, at + 2, 2, 2) = right.B;
}

}  // namespace detail

/// Block matrix for the intertwined decoupled flow, evaluated at
/// (Q, P) = (coordinates composed with the intertwiner): a core Jacobi block
/// from A_k = -P_k/2, B_k = (1/2) e^{(Q_k - Q_{k+1})/2} (k = 2..N-1) plus two
/// 2x2 endpoint blocks with entries +-2cQ.  Size (N-2) + 4.
inline MatrixPair build_combined(const std::vector<double>& qq, const std::vector<double>& pp,
                                 double c)
{
    const std::size_t n = qq.size();
    if (n < 3 || pp.size() != n)
        throw DomainError("combined pair needs N >= 3 and matching Q, P");
    const auto dim = static_cast<Eigen::Index>(n - 2 + 4);
    MatrixPair mp;
    mp.kind = PairKind::combined;
    mp.L = Eigen::MatrixXd::Zero(dim, dim);
    mp.B = Eigen::MatrixXd::Zero(dim, dim);

    const auto m = static_cast<Eigen::Index>(n - 2);
    for (Eigen::Index i = 0; i < m; ++i)
        mp.L(i, i) = -0.5 * pp[static_cast<std::size_t>(i) + 1];
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
        const std::size_t k = static_cast<std::size_t>(i) + 1;
        const double b = 0.5 * bond_exp(0.5 * (qq[k] - qq[k + 1]));
        mp.L(i, i + 1) = mp.L(i + 1, i) = b;
        mp.B(i, i + 1) = -b;
        mp.B(i + 1, i) = b;
    }
    detail::place_endpoint_blocks(mp, m, qq, pp, c);
    return mp;
}

/// The sharp variant: first block diag(P_1 ... P_{N-1}), then the same two
/// endpoint blocks.  Size (N-1) + 4.  Structural object only (the paper notes
/// it conveys little information); no Lax residual is defined for it here.
inline MatrixPair build_combined_sharp(const std::vector<double>& qq,
                                       const std::vector<double>& pp, double c)
{
    const std::size_t n = qq.size();
    if (n < 3 || pp.size() != n)
        throw DomainError("combined pair needs N >= 3 and matching Q, P");
    const auto dim = static_cast<Eigen::Index>(n - 1 + 4);
    MatrixPair mp;
    mp.kind = PairKind::combined_sharp;
    mp.L = Eigen::MatrixXd::Zero(dim, dim);
    mp.B = Eigen::MatrixXd::Zero(dim, dim);
    const auto m = static_cast<Eigen::Index>(n - 1);
    for (Eigen::Index i = 0; i < m; ++i)
        mp.L(i, i) = pp[static_cast<std::size_t>(i)];
    detail::place_endpoint_blocks(mp, m, qq, pp, c);
    return mp;
}

// ---------------------------------------------------------------------------
// Residuals along trajectories

/// Which Lax equation a trajectory is checked against.
enum class LaxFlow {
    open_chain,    // full-chain pair along the open flow: Ldot = [L, B]
    periodic_chain,
    driven_core    // core pair along the forced flow:
                   // Ldot = [L, B] + diag(-2 b_1^2, 0, ..., 0, 2 b_{N-1}^2)
};

namespace detail {

inline MatrixPair pair_at(const LatticeState& s, const System& sys, LaxFlow flow)
{
    switch (flow) {
        case LaxFlow::open_chain:
            return build_open(to_flaschka(s, ChainKind::open));
        case LaxFlow::periodic_chain:
            return build_periodic(to_flaschka(s, ChainKind::periodic, sys.stretch));
        case LaxFlow::driven_core:
            return build_open(to_flaschka(core_of(s), ChainKind::open));
    }
    throw DomainError("unknown lax flow");
}

inline Eigen::MatrixXd drive_term(const LatticeState& s)
{
    // detached endpoint bonds of the full chain feed the core diagonal
    const std::size_t n = s.size();
    const auto m = static_cast<Eigen::Index>(n - 2);
    const double b1 = 0.5 * bond_exp(0.5 * (s.q[0] - s.q[1]));
    const double bn1 = 0.5 * bond_exp(0.5 * (s.q[n - 2] - s.q[n - 1]));
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
    d(0, 0) = -2.0 * b1 * b1;
    d(m - 1, m - 1) = 2.0 * bn1 * bn1;
    return d;
}

}  // namespace detail

/// Max-abs residual of the Lax equation at each interior sample, with the
/// time derivative taken by central differences over the sample spacing h.
/// Converges O(h^2) + O(dt^2).  Setting include_drive = false drops the
/// diagonal driving term of the driven_core flow (for A/B comparisons).
inline std::vector<double> lax_residual(const Trajectory& traj, LaxFlow flow,
                                        bool include_drive = true)
{
    if (traj.size() < 3)
        throw DomainError("lax residual needs at least 3 samples");
    const double h = traj.sample_spacing();

    std::vector<MatrixPair> pairs;
    pairs.reserve(traj.size());
    for (const auto& s : traj.states)
        pairs.push_back(detail::pair_at(s, traj.system, flow));

    std::vector<double> res;
    res.reserve(traj.size() - 2);
    for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
        Eigen::MatrixXd r = (pairs[i + 1].L - pairs[i - 1].L) / (2.0 * h)
                          - (pairs[i].L * pairs[i].B - pairs[i].B * pairs[i].L);
        if (flow == LaxFlow::driven_core && include_drive)
            r -= detail::drive_term(traj.states[i]);
        res.push_back(r.cwiseAbs().maxCoeff());
    }
    return res;
}

/// Max deviation over samples of any eigenvalue of L(t) from its t = 0 value.
/// Eigenvalues come from a dense symmetric solver, independent of the
/// tridiagonal machinery this library builds the flows on.
inline double isospectrality_drift(const Trajectory& traj, LaxFlow flow)
{
    if (traj.size() == 0) throw DomainError("empty trajectory");
    auto spectrum = [&](const LatticeState& s) {
        const MatrixPair mp = detail::pair_at(s, traj.system, flow);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mp.L, Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    };
    const Eigen::VectorXd ref = spectrum(traj.states.front());
    double drift = 0.0;
    for (std::size_t i = 1; i < traj.size(); ++i)
        drift = std::max(drift, (spectrum(traj.states[i]) - ref).cwiseAbs().maxCoeff());
    return drift;
}

}  // namespace toda
