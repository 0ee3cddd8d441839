#pragma once

// Jacobi-matrix spectral machinery: the tridiagonal eigenproblem, the
// bijection between a Jacobi matrix and (eigenvalues, positive first
// components of its normalized eigenvectors), the explicit flow of those
// spectral coordinates under the open-chain dynamics, and the resulting
// exact open-chain evolver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "todalab/lattice.hpp"

namespace toda {

// ---------------------------------------------------------------------------
// Types

/// Symmetric tridiagonal matrix with strictly positive off-diagonal
/// (which guarantees a simple spectrum).
struct JacobiMatrix {
    std::vector<double> diag;     // size M
    std::vector<double> offdiag;  // size M-1, all > 0

    std::size_t size() const { return diag.size(); }
};

inline void require_jacobi(const JacobiMatrix& j)
{
    if (j.diag.empty() || j.offdiag.size() + 1 != j.diag.size())
        throw DomainError("jacobi matrix needs M >= 1, |offdiag| = M-1");
    for (double e : j.offdiag)
        if (!(e > 0.0))
            throw DomainError("jacobi off-diagonal entries must be positive");
}

/// Eigenvalues in strictly decreasing order plus the (positive) first
/// components of the corresponding normalized eigenvectors.  These 2M-1
/// numbers determine the Jacobi matrix uniquely.
struct SpectralData {
    std::vector<double> lambdas;           // strictly decreasing
    std::vector<double> first_components;  // positive, sum of squares = 1

    std::size_t size() const { return lambdas.size(); }
};

/// Minimum admissible spectral gap, relative to the spectral radius.  The
/// bijection degenerates as eigenvalues collide; below this we error out.
inline constexpr double min_relative_gap = 1e-12;

inline void require_spectral(const SpectralData& s)
{
    const std::size_t m = s.lambdas.size();
    if (m == 0 || s.first_components.size() != m)
        throw DomainError("spectral data needs matching nonempty lists");
    double radius = 0.0, norm2 = 0.0;
    for (double l : s.lambdas) radius = std::max(radius, std::abs(l));
    for (std::size_t k = 0; k + 1 < m; ++k)
        if (!(s.lambdas[k] - s.lambdas[k + 1] > min_relative_gap * radius))
            throw DomainError("eigenvalue ordering violated or spectrum too degenerate");
    for (double w : s.first_components) {
        if (!(w > 0.0)) throw DomainError("first components must be positive");
        norm2 += w * w;
    }
    if (std::abs(norm2 - 1.0) > 1e-9)
        throw DomainError("first components not normalized");
}

// ---------------------------------------------------------------------------
// Tridiagonal eigensolver: implicit-shift QL with eigenvector accumulation
// (the classic tql2 scheme of Bowdler-Martin-Reinsch-Wilkinson).

namespace detail {

struct TridiagEigen {
    std::vector<double> values;                 // unsorted on exit of the QL sweep
    std::vector<std::vector<double>> vectors;   // vectors[k][i] = component i of eigenvector k
};

inline TridiagEigen tridiag_eigensystem(std::vector<double> d, std::vector<double> e)
{
    const std::size_t n = d.size();
    e.resize(n, 0.0);

    // z[i][k]: column k accumulates the k-th eigenvector
    std::vector<std::vector<double>> z(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) z[i][i] = 1.0;

    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
            }
            if (m != l) {
                if (iter++ == 50)
                    throw ConvergenceError("tridiagonal QL failed to converge in 50 sweeps");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                for (std::size_t i1 = m; i1-- > l;) {
                    double f = s * e[i1];
                    const double b = c * e[i1];
                    r = std::hypot(f, g);
                    e[i1 + 1] = r;
                    if (r == 0.0) {  // deflate prematurely
                        d[i1 + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i1 + 1] - p;
                    r = (d[i1] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i1 + 1] = g + p;
                    g = c * r - b;
                    for (std::size_t k = 0; k < n; ++k) {
                        f = z[k][i1 + 1];
                        z[k][i1 + 1] = s * z[k][i1] + c * f;
                        z[k][i1] = c * z[k][i1] - s * f;
                    }
                }
                if (r == 0.0 && e[m] == 0.0 && m > l + 1) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }

    TridiagEigen out;
    out.values = std::move(d);
    out.vectors.assign(n, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            out.vectors[k][i] = z[i][k];
    return out;
}

inline double inf_norm(const JacobiMatrix& j)
{
    double norm = 0.0;
    const std::size_t m = j.size();
    for (std::size_t i = 0; i < m; ++i) {
        double row = std::abs(j.diag[i]);
        if (i > 0) row += j.offdiag[i - 1];
        if (i + 1 < m) row += j.offdiag[i];
        norm = std::max(norm, row);
    }
    return norm;
}

}  // namespace detail

/// Full spectral decomposition of a Jacobi matrix: eigenvalues descending,
/// eigenvector first components made positive by sign flips.  The residual
/// ||J u_k - lambda_k u_k|| is checked internally against 1e-12 ||J||.
inline SpectralData eig_tridiag(const JacobiMatrix& j)
{
    require_jacobi(j);
    const std::size_t m = j.size();

    if (m == 1) return SpectralData{{j.diag[0]}, {1.0}};

    auto eig = detail::tridiag_eigensystem(j.diag, j.offdiag);

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return eig.values[a] > eig.values[b]; });

    SpectralData s;
    s.lambdas.resize(m);
    s.first_components.resize(m);

    const double norm_j = detail::inf_norm(j);
    double radius = 0.0;
    for (double v : eig.values) radius = std::max(radius, std::abs(v));

    for (std::size_t k = 0; k < m; ++k) {
        const auto& u = eig.vectors[order[k]];
        const double lambda = eig.values[order[k]];
        s.lambdas[k] = lambda;

        // residual check with the full eigenvector
        double res = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double jui = j.diag[i] * u[i];
            if (i > 0) jui += j.offdiag[i - 1] * u[i - 1];
            if (i + 1 < m) jui += j.offdiag[i] * u[i + 1];
            res = std::max(res, std::abs(jui - lambda * u[i]));
        }
        if (res > 1e-12 * std::max(norm_j, 1e-300))
            throw ConvergenceError("eigenpair residual exceeds 1e-12 * ||J||");

        s.first_components[k] = u[0] < 0.0 ? -u[0] : u[0];
        if (!(s.first_components[k] > 0.0))
            throw ConvergenceError("vanishing eigenvector first component");
    }

    for (std::size_t k = 0; k + 1 < m; ++k)
        if (!(s.lambdas[k] - s.lambdas[k + 1] > min_relative_gap * radius))
            throw DomainError("spectrum too degenerate for the spectral bijection");

    // square-sum is 1 up to rounding (row of an orthogonal matrix); tighten it
    double norm2 = 0.0;
    for (double w : s.first_components) norm2 += w * w;
    const double scale = 1.0 / std::sqrt(norm2);
    for (double& w : s.first_components) w *= scale;
    return s;
}

/// Inverse of the spectral bijection: the unique Jacobi matrix with the given
/// spectrum and eigenvector first components.  Lanczos recurrence applied to
/// diag(lambda) with start vector (first_components), fully reorthogonalized.
inline JacobiMatrix jacobi_from_spectral(const SpectralData& s)
{
    require_spectral(s);
    const std::size_t m = s.size();

    std::vector<double> w = s.first_components;
    {
        double norm2 = 0.0;
        for (double wi : w) norm2 += wi * wi;
        const double scale = 1.0 / std::sqrt(norm2);
        for (double& wi : w) wi *= scale;
    }

    JacobiMatrix j;
    j.diag.resize(m);
    j.offdiag.resize(m - 1);

    std::vector<std::vector<double>> basis;
    basis.reserve(m);
    basis.push_back(w);
    std::vector<double> v_prev(m, 0.0);
    double beta_prev = 0.0;

    for (std::size_t k = 0; k < m; ++k) {
        const auto& v = basis[k];
        std::vector<double> u(m);
        for (std::size_t i = 0; i < m; ++i) u[i] = s.lambdas[i] * v[i];

        double alpha = 0.0;
        for (std::size_t i = 0; i < m; ++i) alpha += v[i] * u[i];
        j.diag[k] = alpha;
        if (k + 1 == m) break;

        for (std::size_t i = 0; i < m; ++i) u[i] -= alpha * v[i] + beta_prev * v_prev[i];

        // full reorthogonalization, two passes
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& bvec : basis) {
                double dot = 0.0;
                for (std::size_t i = 0; i < m; ++i) dot += bvec[i] * u[i];
                for (std::size_t i = 0; i < m; ++i) u[i] -= dot * bvec[i];
            }
        }

        double beta = 0.0;
        for (double ui : u) beta += ui * ui;
        beta = std::sqrt(beta);
        if (!(beta > 0.0))
            throw ConvergenceError("lanczos breakdown: spectral data numerically degenerate");
        j.offdiag[k] = beta;

        for (double& ui : u) ui /= beta;
        v_prev = v;
        beta_prev = beta;
        basis.push_back(std::move(u));
    }
    return j;
}

/// Explicit flow of the spectral coordinates under the open-chain dynamics:
/// eigenvalues frozen, weights re-scaled by e^{lambda_k t} and renormalized.
/// Exponentials are taken relative to the dominant lambda_k t, so the map is
/// overflow-free for any finite t.
inline SpectralData moser_flow(const SpectralData& s, double t)
{
    require_spectral(s);
    const std::size_t m = s.size();

    double top = s.lambdas[0] * t;
    for (double l : s.lambdas) top = std::max(top, l * t);

    SpectralData out;
    out.lambdas = s.lambdas;
    out.first_components.resize(m);
    double norm2 = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double wk = s.first_components[k] * std::exp(s.lambdas[k] * t - top);
        out.first_components[k] = wk;
        norm2 += wk * wk;
    }
    const double scale = 1.0 / std::sqrt(norm2);
    for (double& wk : out.first_components) wk *= scale;
    return out;
}

/// d/dlambda det(J - lambda) at the k-th eigenvalue (k is 0-based):
/// Z(lambda) = prod_j (lambda_j - lambda), so Z'(lambda_k) =
/// -prod_{j != k} (lambda_j - lambda_k).  Nonzero by simplicity.
inline double char_poly_derivative(const SpectralData& s, std::size_t k)
{
    if (k >= s.size()) throw DomainError("eigenvalue index out of range");
    double prod = 1.0;
    for (std::size_t j = 0; j < s.size(); ++j)
        if (j != k) prod *= s.lambdas[j] - s.lambdas[k];
    return -prod;
}

/// Exact open-chain evolution by spectral transport: map to (lambda, w),
/// apply the explicit flow, map back.  The center of mass moves ballistically
/// (sum q grows by t * sum p since sum p = -2 tr J is conserved), which fixes
/// the translation the spectral coordinates forget.  Spectrum-preserving by
/// construction; no time stepping involved.
inline LatticeState exact_core_toda(const LatticeState& core, double t)
{
    require_state(core, 1);
    const std::size_t m = core.size();
    if (m == 1)
        return LatticeState{{core.q[0] + t * core.p[0]}, {core.p[0]}};

    const FlaschkaVars vars = to_flaschka(core, ChainKind::open);
    const JacobiMatrix j{vars.a, vars.b};
    const SpectralData flowed = moser_flow(eig_tridiag(j), t);
    const JacobiMatrix jt = jacobi_from_spectral(flowed);
    const double qsum_t = sum(core.q) + t * sum(core.p);
    return from_flaschka(FlaschkaVars{jt.diag, jt.offdiag, ChainKind::open}, qsum_t);
}

}  // namespace toda
