#pragma once

// Time evolution: symplectic Stormer-Verlet for every chain variant, plus
// the exact closed-form flows of the free and decoupled Hamiltonians.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "todalab/lattice.hpp"
#include "todalab/spectral.hpp"

namespace toda {

// ---------------------------------------------------------------------------
// Plans and trajectories

struct IntegrationPlan {
    double dt = 1e-3;            // default for tests; figure reproduction uses 1e-4
    double t_end = 10.0;
    std::size_t sample_stride = 10;
    System system = System::open();
};

inline void require_plan(const IntegrationPlan& plan)
{
    if (!(plan.dt > 0.0) || plan.dt > 0.1)
        throw DomainError("time step must lie in (0, 0.1]");
    if (!(plan.t_end >= 0.0) || !std::isfinite(plan.t_end))
        throw DomainError("horizon must be finite and nonnegative");
    if (plan.sample_stride == 0)
        throw DomainError("sample stride must be positive");
    if (plan.t_end / plan.dt > 9e18)
        throw DomainError("step count does not fit in 64 bits");
}

/// Uniformly sampled trajectory: times[i] = i * stride * dt.
struct Trajectory {
    std::vector<double> times;
    std::vector<LatticeState> states;
    double dt = 0.0;              // integrator step
    std::size_t stride = 1;       // samples every stride steps
    double h0 = 0.0;              // energy of states[0] under the plan's system
    System system = System::open();
    bool truncated = false;       // an overflow aborted the run early

    std::size_t size() const { return times.size(); }
    double sample_spacing() const { return dt * static_cast<double>(stride); }
};

// ---------------------------------------------------------------------------
// Stormer-Verlet

/// One kick-drift-kick step.  Second order, symplectic, time reversible;
/// exact whenever the forces are constant (free endpoints, ballistic core).
inline LatticeState verlet_step(const LatticeState& s, const System& sys, double dt)
{
    LatticeState next = s;
    std::vector<double> f = forces(next, sys);
    const std::size_t n = next.size();
    for (std::size_t i = 0; i < n; ++i) {
        next.p[i] += 0.5 * dt * f[i];
        next.q[i] += dt * next.p[i];
    }
    f = forces(next, sys);
    for (std::size_t i = 0; i < n; ++i)
        next.p[i] += 0.5 * dt * f[i];
    return next;
}

/// Fixed-step run with stride sampling.  Deterministic: the sample times are
/// k * stride * dt by construction, never accumulated sums.  An overflow
/// mid-run returns the samples collected so far, flagged truncated.
inline Trajectory integrate(const LatticeState& s0, const IntegrationPlan& plan)
{
    require_plan(plan);
    require_state(s0, plan.system.kind == SystemKind::decoupled ? 3 : 2);

    Trajectory traj;
    traj.dt = plan.dt;
    traj.stride = plan.sample_stride;
    traj.system = plan.system;
    traj.h0 = energy(s0, plan.system);
    traj.times.push_back(0.0);
    traj.states.push_back(s0);

    const auto steps = static_cast<std::uint64_t>(std::llround(plan.t_end / plan.dt));
    LatticeState s = s0;
    for (std::uint64_t k = 1; k <= steps; ++k) {
        try {
            s = verlet_step(s, plan.system, plan.dt);
        } catch (const OverflowError&) {
            traj.truncated = true;
            break;
        }
        if (k % plan.sample_stride == 0) {
            traj.times.push_back(static_cast<double>(k) * plan.dt);
            traj.states.push_back(s);
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Exact flows

/// Closed-form flow of H_c^# = 1/2 sum p^2 + c (q_1 - q_N): the endpoints
/// feel constant forces -c and +c, everything else is ballistic.
/// Satisfies the exact group law in t.
inline LatticeState free_flow(const LatticeState& s, double c, double t)
{
    require_state(s);
    LatticeState out = s;
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i)
        out.q[i] = s.q[i] + t * s.p[i];
    out.q[0] -= 0.5 * c * t * t;
    out.p[0] -= c * t;
    out.q[n - 1] += 0.5 * c * t * t;
    out.p[n - 1] += c * t;
    return out;
}

/// Exact flow of the decoupled Hamiltonian H_c^d: endpoints as in free_flow,
/// the core evolved by spectral transport.  No time stepping, so valid for
/// any t and exactly compositional.
inline LatticeState decoupled_flow(const LatticeState& s, double c, double t)
{
    require_state(s, 3);
    const std::size_t n = s.size();
    const LatticeState core_t = exact_core_toda(core_of(s), t);

    LatticeState out = s;
    out.q[0] = s.q[0] + t * s.p[0] - 0.5 * c * t * t;
    out.p[0] = s.p[0] - c * t;
    out.q[n - 1] = s.q[n - 1] + t * s.p[n - 1] + 0.5 * c * t * t;
    out.p[n - 1] = s.p[n - 1] + c * t;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out.q[i] = core_t.q[i - 1];
        out.p[i] = core_t.p[i - 1];
    }
    return out;
}

}  // namespace toda
