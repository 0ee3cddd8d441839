#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "todalab/actionangle.hpp"
#include "todalab/integrator.hpp"
#include "todalab/scattering.hpp"

using Catch::Approx;
using namespace toda;

namespace {

SpectralData spectrum_of(const LatticeState& chain)
{
    const auto v = to_flaschka(chain, ChainKind::open);
    return eig_tridiag(JacobiMatrix{v.a, v.b});
}

Trajectory run(const LatticeState& s0, const System& sys, double t_end, double dt = 1e-3,
               std::size_t stride = 100)
{
    IntegrationPlan plan;
    plan.dt = dt;
    plan.t_end = t_end;
    plan.sample_stride = stride;
    plan.system = sys;
    return integrate(s0, plan);
}

}  // namespace

TEST_CASE("alpha from spectrum", "[scattering]")
{
    SpectralData pair;
    pair.lambdas = {1.0, -1.0};
    pair.first_components = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    const auto a = alpha_from_spectrum(pair);
    REQUIRE(a[0] == -2.0);
    REQUIRE(a[1] == 2.0);

    SpectralData one;
    one.lambdas = {0.0};
    one.first_components = {1.0};
    REQUIRE(alpha_from_spectrum(one)[0] == 0.0);
}

TEST_CASE("fitted late-time velocities match the spectrum", "[scattering]")
{
    const auto s0 = testutil::random_state(3, 101);
    const auto alpha = alpha_from_spectrum(spectrum_of(s0));
    const auto traj = run(s0, System::open(), 40.0);
    const auto fit = fit_asymptotics(traj, 0.25);
    for (std::size_t n = 0; n < 3; ++n)
        REQUIRE(fit.slope[n] == Approx(alpha[n]).margin(1e-4));
}

TEST_CASE("beta closed form: single particle and sum identity", "[scattering]")
{
    SpectralData one;
    one.lambdas = {0.3};
    one.first_components = {1.0};
    REQUIRE(beta_closed_form(one, 1.7)[0] == Approx(1.7).margin(1e-15));

    const auto s = spectrum_of(testutil::random_state(5, 102));
    const auto beta = beta_closed_form(s, 2.5);
    REQUIRE(sum(beta) == Approx(2.5).margin(1e-12));
}

TEST_CASE("beta closed form matches long-run intercepts", "[scattering]")
{
    const LatticeState s0{{0.4, -0.2}, {0.9, -0.6}};
    const auto spec = spectrum_of(s0);
    const auto alpha = alpha_from_spectrum(spec);
    const auto beta = beta_closed_form(spec, sum(s0.q));

    const auto traj = run(s0, System::open(), 60.0);
    const auto fit = fit_asymptotics(traj, 0.25);
    for (std::size_t n = 0; n < 2; ++n) {
        REQUIRE(fit.slope[n] == Approx(alpha[n]).margin(1e-4));
        REQUIRE(fit.intercept[n] == Approx(beta[n]).margin(1e-3));
    }
}

TEST_CASE("scattering shift: literal evaluation", "[scattering]")
{
    REQUIRE(scattering_shift({0.0}, {1.0}) == 0.0);  // empty pair sum

    // the documented all-ordered-pairs reading on sorted velocity lists
    const double two = scattering_shift({-2.0, 2.0}, {-2.0, 2.0});
    REQUIRE(two == Approx(2.0 * std::log(16.0)).margin(1e-12));

    REQUIRE_THROWS_AS(scattering_shift({-2.0, 2.0}, {2.0, -2.0}), DomainError);
}

TEST_CASE("two-particle shift against a two-sided simulation", "[scattering]")
{
    // asymmetric two-particle collision
    const LatticeState s0{{0.3, -0.3}, {0.8, -1.1}};
    const auto data = scattering_closed_form(s0);
    REQUIRE(data.alpha_minus.has_value());

    // forward and reversed runs give the two sets of intercepts
    const auto fwd = fit_asymptotics(run(s0, System::open(), 60.0), 0.25);
    LatticeState rev = s0;
    for (double& p : rev.p) p = -p;
    const auto bwd = fit_asymptotics(run(rev, System::open(), 60.0), 0.25);

    REQUIRE(fwd.intercept[0] == Approx(data.beta_plus[0]).margin(1e-3));
    REQUIRE(fwd.intercept[1] == Approx(data.beta_plus[1]).margin(1e-3));
    REQUIRE(bwd.intercept[0] == Approx((*data.beta_minus)[0]).margin(1e-3));
    REQUIRE(bwd.intercept[1] == Approx((*data.beta_minus)[1]).margin(1e-3));

    // measured shift vs the closed form derived from the intercept formula:
    // beta_2^+ - beta_1^- = -2 ln(alpha_2^+ - alpha_1^+)
    const double measured = fwd.intercept[1] - (*data.beta_minus)[0];
    const double derived = -2.0 * std::log(data.alpha_plus[1] - data.alpha_plus[0]);
    REQUIRE(measured == Approx(derived).margin(1e-3));

    // the literal printed formula needs the sorted-minus reading to even be
    // finite; document its value and the offset from the measured shift
    std::vector<double> minus_sorted = *data.alpha_minus;
    std::sort(minus_sorted.begin(), minus_sorted.end());
    const double literal = scattering_shift(minus_sorted, data.alpha_plus);
    INFO("literal all-pairs value " << literal << " vs measured shift " << measured
                                    << " (known discrepancy, logged not asserted)");
    REQUIRE(std::isfinite(literal));
}

TEST_CASE("fit_asymptotics on exact ballistic input", "[scattering]")
{
    Trajectory traj;
    traj.dt = 0.1;
    traj.stride = 1;
    traj.system = System::open();
    const LatticeState base = testutil::random_state(4, 103);
    for (int i = 0; i <= 60; ++i) {
        const double t = 0.1 * i;
        LatticeState s = base;
        for (std::size_t j = 0; j < 4; ++j) s.q[j] += t * s.p[j];
        traj.times.push_back(t);
        traj.states.push_back(s);
    }
    const auto fit = fit_asymptotics(traj, 0.5);
    for (std::size_t j = 0; j < 4; ++j) {
        REQUIRE(fit.slope[j] == Approx(base.p[j]).margin(1e-12));
        REQUIRE(fit.intercept[j] == Approx(base.q[j]).margin(1e-12));
    }
}

TEST_CASE("forced run: endpoint bond decays like a gaussian", "[scattering]")
{
    const double c = 1.0;
    const auto s0 = testutil::random_state(6, 104);
    IntegrationPlan plan;
    plan.dt = 1e-3;
    plan.t_end = 15.0;
    plan.sample_stride = 10;
    plan.system = System::forced(c);
    const auto traj = integrate(s0, plan);

    // quadratic fit of -(ln e^{q_1-q_2}) = q_2 - q_1 over t in [5, 15]
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.times[i] < 5.0) continue;
        ts.push_back(traj.times[i]);
        ys.push_back(traj.states[i].q[1] - traj.states[i].q[0]);
    }
    const double lead = quadratic_fit(ts, ys)[2];
    REQUIRE(lead > 0.9 * (c / 2.0));
    REQUIRE(lead < 1.1 * (c / 2.0));

    // late-window fit exposes the same coefficient
    const auto fit = fit_asymptotics(traj, 0.25);
    REQUIRE(fit.gamma_first == Approx(c / 2.0).epsilon(0.1));
}

TEST_CASE("wave_op_free: symmetry, convergence, conservation", "[scattering][slow]")
{
    // symmetric three-particle state: the middle particle never moves
    const auto w3 = wave_op_free({{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}, 1.0);
    REQUIRE(w3.q[1] == Approx(0.0).margin(1e-12));
    REQUIRE(w3.p[1] == Approx(0.0).margin(1e-12));

    // doubling criterion reaches 1e-8 on a random N=4 state
    WaveOpOptions opts;
    opts.tolerance = 1e-8;
    opts.dt = 1e-4;
    const auto s0 = testutil::random_state(4, 105);
    REQUIRE_NOTHROW(wave_op_free(s0, 1.0, opts));

    // J_n = I_n o W# recomputed along the flow agree to 1e-6
    WaveOpOptions tight;
    tight.tolerance = 1e-9;
    tight.dt = 2e-5;
    const auto j0 = conserved_integrals(s0, 1.0, tight);
    for (double s : {1.0, 2.0}) {
        IntegrationPlan plan;
        plan.dt = 2e-5;
        plan.t_end = s;
        plan.sample_stride = 50000;
        plan.system = System::forced(1.0);
        const auto moved = integrate(s0, plan).states.back();
        const auto js = conserved_integrals(moved, 1.0, tight);
        REQUIRE(testutil::max_abs_diff(j0, js) < 1e-6);
    }
}

TEST_CASE("closed-form decoupled wave operator", "[scattering]")
{
    // N=3: the single-particle core maps to itself
    const LatticeState tiny{{0.4, 0.1, -0.6}, {0.2, -0.5, 0.3}};
    const auto w = wave_op_decoupled_closed(tiny, 1.0);
    REQUIRE(testutil::max_abs_diff(w, tiny) == 0.0);

    // matches the numerically evaluated limit U#_{-T} o U-hat_T at T = 40
    const double c = 1.0;
    const auto s0 = testutil::random_state(5, 106);
    const auto closed = wave_op_decoupled_closed(s0, c);
    const auto limit = free_flow(decoupled_flow(s0, c, 40.0), c, -40.0);
    REQUIRE(testutil::max_abs_diff(closed, limit) < 1e-6);

    // endpoint components pass through exactly
    REQUIRE(closed.q.front() == s0.q.front());
    REQUIRE(closed.p.front() == s0.p.front());
    REQUIRE(closed.q.back() == s0.q.back());
    REQUIRE(closed.p.back() == s0.p.back());
}

TEST_CASE("decoupled wave operator inverts", "[scattering][property]")
{
    // M=1 core: identity
    const LatticeState tiny{{0.4, 0.1, -0.6}, {0.2, -0.5, 0.3}};
    REQUIRE(testutil::max_abs_diff(wave_op_decoupled_inverse(tiny, 1.0), tiny) == 0.0);

    for (std::uint64_t seed = 110; seed < 115; ++seed) {
        const auto s0 = testutil::random_state(5, seed);
        const auto image = wave_op_decoupled_closed(s0, 1.0);
        // image core velocities are strictly increasing by construction
        for (std::size_t i = 1; i + 2 < s0.size(); ++i)
            REQUIRE(image.p[i] < image.p[i + 1]);
        const auto back = wave_op_decoupled_inverse(image, 1.0);
        REQUIRE(testutil::max_abs_diff(back, s0) < 1e-8);
    }

    // the log-weights of the inverse sum to zero
    const auto s0 = testutil::random_state(6, 116);
    const auto image = wave_op_decoupled_closed(s0, 1.0);
    const std::vector<double> x(image.q.begin() + 1, image.q.end() - 1);
    const std::vector<double> y(image.p.begin() + 1, image.p.end() - 1);
    REQUIRE(std::abs(sum(detail::inverse_log_weights(x, y))) < 1e-12);

    // ordering violations are rejected
    LatticeState bad = s0;
    bad.p = {0.0, 1.0, 0.5, 0.2, 0.1, 0.0};
    REQUIRE_THROWS_AS(wave_op_decoupled_inverse(bad, 1.0), DomainError);
}

TEST_CASE("intertwiner relation", "[scattering][slow]")
{
    const double c = 1.0;
    WaveOpOptions opts;
    opts.tolerance = 1e-9;
    opts.dt = 2e-5;

    const auto x = testutil::random_state(4, 120);
    const auto wx = intertwiner(x, c, opts);

    for (double t : {1.0, 5.0, 10.0}) {
        const auto lhs = decoupled_flow(wx, c, t);  // U-hat_t W x
        IntegrationPlan plan;
        plan.dt = 2e-5;
        plan.t_end = t;
        plan.sample_stride = 1000;
        plan.system = System::forced(c);
        const auto moved = integrate(x, plan).states.back();
        const auto rhs = intertwiner(moved, c, opts);  // W U_t x
        REQUIRE(testutil::max_abs_diff(lhs, rhs) < 1e-5);
    }

    // symmetric N=3 state: the core of W x is fixed by symmetry
    const auto sym = intertwiner({{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}, c, opts);
    REQUIRE(sym.q[1] == Approx(0.0).margin(1e-10));
    REQUIRE(sym.p[1] == Approx(0.0).margin(1e-10));
}

TEST_CASE("forced flow converges to the intertwined decoupled flow", "[scattering][slow]")
{
    // an endpoint drifting slowly into the core keeps the interaction alive
    // through t ~ 10, so the approach U_t x -> U-hat_t W x stays measurable
    // above the integrator floor before it dies super-exponentially
    const double c = 1.0;
    const LatticeState x{{0.0, 20.0, 21.0, 41.0}, {6.0, 0.0, 0.0, -6.0}};
    WaveOpOptions opts;
    opts.tolerance = 1e-9;
    opts.dt = 1e-5;
    opts.t_first = 10.0;
    const auto wx = intertwiner(x, c, opts);

    double prev = 1e300;
    for (double t : {5.0, 10.0, 20.0}) {
        detail::CompensatedVerlet walker(x, System::forced(c), 2e-6);
        walker.steps(static_cast<std::uint64_t>(std::llround(t / 2e-6)));
        const double defect = testutil::max_abs_diff(walker.s, decoupled_flow(wx, c, t));
        REQUIRE(defect < prev);
        prev = defect;
    }
}

TEST_CASE("free integrals: values and commutation", "[scattering]")
{
    const LatticeState zero{{0.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}};
    for (double v : free_integrals(zero, 1.0)) REQUIRE(v == 0.0);

    // pairwise Poisson brackets vanish (central differences)
    const double c = 1.3;
    const auto point = testutil::random_state(4, 121);
    std::vector<Observable> obs;
    for (std::size_t n = 0; n < 4; ++n)
        obs.push_back([n, c](const LatticeState& s) { return free_integrals(s, c)[n]; });
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
            REQUIRE(std::abs(poisson_bracket(obs[i], obs[j], point, 1e-5)) < 1e-8);
}

TEST_CASE("lyapunov functional decays along the open flow", "[scattering]")
{
    // state already at its limit velocities: S(0) reduces to the bond part
    LatticeState sep{{0.0, -5.0, -10.0}, {-1.0, 0.0, 1.0}};
    std::vector<double> limits(3);
    for (std::size_t i = 0; i < 3; ++i) limits[i] = -0.5 * sep.p[i];
    Trajectory one;
    one.times = {0.0};
    one.states = {sep};
    double bonds = 0.0;
    for (std::size_t i = 0; i + 1 < 3; ++i) {
        const double b = 0.5 * std::exp(0.5 * (sep.q[i] - sep.q[i + 1]));
        bonds += 2.0 * b * b;
    }
    REQUIRE(lyapunov_series(one, limits)[0] == Approx(bonds).margin(1e-15));

    // generic open run: S decays, and the fitted rate is stable
    const auto s0 = testutil::random_state(4, 122);
    const auto spec = spectrum_of(s0);
    const auto traj = run(s0, System::open(), 40.0, 1e-3, 100);
    const auto series = lyapunov_series(traj, spec.lambdas);

    auto value_at = [&](double t) {
        const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t - 1e-9);
        return series[static_cast<std::size_t>(it - traj.times.begin())];
    };
    for (double t : {20.0, 30.0, 40.0}) REQUIRE(value_at(t) < value_at(t / 2.0));

    auto rate_over = [&](double t_begin) {
        std::vector<double> ts, ys;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            if (traj.times[i] < t_begin || series[i] < 1e-280) continue;
            ts.push_back(traj.times[i]);
            ys.push_back(std::log(series[i]));
        }
        return -linear_fit(ts, ys)[1];
    };
    const double r1 = rate_over(10.0);
    const double r2 = rate_over(20.0);
    REQUIRE(r1 > 0.0);
    REQUIRE(r2 > 0.0);
    REQUIRE(std::abs(r1 - r2) < 0.2 * std::max(r1, r2));
}
