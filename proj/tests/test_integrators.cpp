#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fvi/errors.hpp"
#include "fvi/integrators.hpp"
#include "fvi/observables.hpp"

using namespace fvi;

namespace {

FieldModel uniform_field(double eps, Vec3 b0 = {0, 0, 1}) {
    FieldModel m;
    m.label = "uniform";
    m.epsilon = eps;
    m.b0 = b0;
    m.b1 = [](const Vec3&) { return Vec3{}; };
    m.a1 = [](const Vec3&) { return Vec3{}; };
    m.a1_jac = [](const Vec3&) { return Mat3::zero(); };
    m.u = [](const Vec3&) { return 0.0; };
    m.f = [](const Vec3&) { return Vec3{}; };
    return m;
}

FieldModel harmonic() {
    FieldModel m = uniform_field(1.0);
    m.label = "harmonic";
    m.b0 = {0, 0, 1};
    // B = 0 overall: cancel the constant part with b1.
    m.b1 = [](const Vec3&) { return Vec3{0, 0, -1}; };
    m.a1 = [](const Vec3& x) { return -0.5 * cross(Vec3{0, 0, 1}, x); };
    m.a1_jac = [](const Vec3&) { return hat({0, 0, -0.5}); };
    m.u = [](const Vec3& x) { return 0.5 * dot(x, x); };
    m.f = [](const Vec3& x) { return -x; };
    return m;
}

SolverConfig config(double h, double t_end) {
    SolverConfig cfg;
    cfg.h = h;
    cfg.t_end = t_end;
    return cfg;
}

}  // namespace

TEST_CASE("step count") {
    CHECK(step_count(1.0, 0.1) == 10);
    CHECK(step_count(std::numbers::pi / 2, 0.1) == 15);
    CHECK(step_count(0.0, 0.1) == 0);
    CHECK(step_count(1000.0, 0.01) == 100000);
    CHECK_THROWS_AS(validate_config(config(0.0, 1.0)), InvalidArgument);
    CHECK_THROWS_AS(validate_config(config(-0.1, 1.0)), InvalidArgument);
}

TEST_CASE("field-parallel free motion is exact") {
    const Vec3 b0 = Vec3{1, 2, 2} / 3.0;
    const FieldModel m = uniform_field(0.01, b0);
    const Vec3 x0{0.1, -0.2, 0.3};
    const Vec3 v0 = 0.7 * b0;
    const double h = 0.05;
    const FviStepper stepper(m, config(h, 1.0));

    const StepResult s1 = stepper.startup(x0, v0);
    CHECK(norm(cross(s1.state.x_curr - x0, b0)) < 1e-12);
    CHECK(norm(s1.state.x_curr - x0) == doctest::Approx(h * norm(v0)).epsilon(1e-12));

    TwoStepState st = s1.state;
    double worst_x = 0.0, worst_v = 0.0;
    for (int n = 1; n < 10000; ++n) {
        st = stepper.step(st).state;
        const Vec3 exact = x0 + (static_cast<double>(n + 1) * h) * v0;
        worst_x = std::max(worst_x, norm(st.x_curr - exact) / (1.0 + norm(exact)));
        worst_v = std::max(worst_v, norm(st.v_curr - v0));
    }
    CHECK(worst_x < 1e-12);
    CHECK(worst_v < 1e-12);
}

TEST_CASE("startup is consistent to second order") {
    const FieldModel m = problem1();
    double dev[2];
    const double hs[2] = {1e-2, 1e-3};
    for (int k = 0; k < 2; ++k) {
        const StepResult s = fvi_startup(m, config(hs[k], 1.0), m.x0, m.v0);
        dev[k] = norm(s.state.x_curr - (m.x0 + hs[k] * m.v0));
    }
    CHECK(dev[0] / dev[1] == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("time symmetry round trip") {
    const FieldModel m = problem1();
    const SolverConfig cfg = config(0.05, 1.0);
    const FviStepper fwd(m, cfg);
    const FviStepper bwd = fwd.reversed();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const Vec3 x_prev = m.x0 + Vec3{u(rng), u(rng), u(rng)};
        const Vec3 x_curr = x_prev + 0.05 * m.v0 + Vec3{u(rng), u(rng), u(rng)} * 0.01;
        const StepResult next = fwd.step({x_prev, x_curr, {}, 1, {}});
        const StepResult back = bwd.step({next.state.x_curr, x_curr, {}, 1, {}});
        worst = std::max(worst, norm(back.state.x_curr - x_prev) / (1.0 + norm(x_prev)));
    }
    CHECK(worst <= 100.0 * cfg.fp_tol);
}

TEST_CASE("residuals and fixed-point diagnostics on problem runs") {
    for (const FieldModel& m : {problem1(), problem2(), problem3(0.01), problem4(0.01)}) {
        CAPTURE(m.label);
        const SolverConfig cfg = config(0.01, 1.0);
        const FviStepper st(m, cfg);
        const StepResult s1 = st.startup(m.x0, m.v0);
        const Residual r0 = st.startup_residual(m.x0, m.v0, s1.state.x_curr);
        CHECK(r0.residual <= 100.0 * cfg.fp_tol * r0.scale);
        TwoStepState s = s1.state;
        for (int n = 0; n < 100; ++n) {
            const StepResult r = st.step(s);
            const Residual res = st.step_residual(s.x_prev, s.x_curr, r.state.x_curr);
            CHECK(res.residual <= 100.0 * cfg.fp_tol * res.scale);
            CHECK(r.diagnostics.converged);
            CHECK(r.diagnostics.iterations_used <= 50);
            s = r.state;
        }
    }
}

TEST_CASE("velocity recovery matches the midpoint identity") {
    const FieldModel m = problem3(0.02);
    const SolverConfig cfg = config(0.03, 0.6);
    const FviStepper st(m, cfg);
    const auto recs = fvi_trajectory(m, cfg, m.x0, m.v0);
    REQUIRE(recs.size() == 20);
    Vec3 v_prev = m.v0;
    for (const auto& r : recs) {
        const Vec3 mid = 0.5 * (r.v + v_prev);
        CHECK(norm(mid - r.v_mid) < 1e-13 * (1.0 + norm(mid)));
        v_prev = r.v;
    }
}

TEST_CASE("free-function steps agree with the stepper") {
    const FieldModel m = problem2();
    const SolverConfig cfg = config(0.02, 1.0);
    const StepResult a = fvi_startup(m, cfg, m.x0, m.v0);
    const StepResult b = FviStepper(m, cfg).startup(m.x0, m.v0);
    CHECK(a.state.x_curr == b.state.x_curr);
    CHECK(fvi_step(m, cfg, a.state).state.x_curr == FviStepper(m, cfg).step(b.state).state.x_curr);
}

TEST_CASE("trajectory emission") {
    const FieldModel m = problem1();
    CHECK(fvi_trajectory(m, config(0.1, 0.0), m.x0, m.v0).empty());
    const auto recs = fvi_trajectory(m, config(0.1, 1.0), m.x0, m.v0);
    REQUIRE(recs.size() == 10);
    for (std::size_t k = 0; k < recs.size(); ++k) {
        CHECK(recs[k].step == static_cast<std::int64_t>(k + 1));
        CHECK(recs[k].t == doctest::Approx(0.1 * static_cast<double>(k + 1)).epsilon(1e-15));
        CHECK(recs[k].t_mid == doctest::Approx(recs[k].t - 0.05).epsilon(1e-15));
    }
    const auto thin = fvi_trajectory(m, config(0.1, 1.0), m.x0, m.v0, Sampling{4});
    REQUIRE(thin.size() == 4);
    CHECK(thin[0].step == 1);
    CHECK(thin[1].step == 4);
    CHECK(thin[2].step == 8);
    CHECK(thin[3].step == 10);
}

TEST_CASE("strict mode reports non-convergence") {
    const FieldModel m = problem3(0.01);
    SolverConfig cfg = config(0.1, 1.0);
    cfg.fp_max_iter = 1;
    const RunSummary lax = fvi_run(m, cfg, m.x0, m.v0, {});
    CHECK(lax.nonconverged_steps > 0);
    cfg.strict = true;
    CHECK_THROWS_AS(fvi_run(m, cfg, m.x0, m.v0, {}), ConvergenceError);
}

TEST_CASE("boris free flight and rotation") {
    FieldModel m = uniform_field(1.0);
    m.b1 = [](const Vec3&) { return Vec3{0, 0, -1}; };
    const auto [x1, v1] = boris_step(m, 0.1, {1, 2, 3}, {0.5, -0.5, 1});
    CHECK(x1 == Vec3{1.05, 1.95, 3.1});
    CHECK(v1 == Vec3{0.5, -0.5, 1});

    const FieldModel g = uniform_field(0.01);
    const Vec3 v{0.3, -0.4, 0.2};
    const Vec3 w = boris_velocity_update(g, 0.37, {0, 0, 0}, v);
    CHECK(norm(w) == doctest::Approx(norm(v)).epsilon(1e-14));
    CHECK(w.z == doctest::Approx(v.z).epsilon(1e-15));
    const Vec3 back = boris_velocity_update(g, -0.37, {0, 0, 0}, w);
    CHECK(norm(back - v) < 1e-14);
}

TEST_CASE("boris converges at second order on problem 1") {
    const FieldModel m = problem1();
    const ReferenceSolution ref = reference_solve(m, m.x0, m.v0, 1.0, 1e-12);
    const PhaseState exact = ref.at(1.0);
    double err[2];
    const double hs[2] = {1.0 / 64, 1.0 / 128};
    for (int k = 0; k < 2; ++k) {
        const RunSummary r = boris_run(m, config(hs[k], 1.0), m.x0, m.v0, {});
        err[k] = norm(r.final_x - exact.x);
    }
    CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("reference solver exact line and harmonic orbit") {
    const Vec3 b0{0, 0, 1};
    const FieldModel line = uniform_field(0.5, b0);
    const Vec3 x0{1, 1, 1}, v0{0, 0, 2};
    const ReferenceSolution a = reference_solve(line, x0, v0, 3.0, 1e-10);
    CHECK(norm(a.at(3.0).x - (x0 + 3.0 * v0)) < 1e-10);

    const double tol = 1e-11;
    const double two_pi = 2.0 * std::numbers::pi;
    const ReferenceSolution h = reference_solve(harmonic(), {1, 0, 0}, {0, 0, 0}, two_pi, tol);
    CHECK(norm(h.at(two_pi).x - Vec3{1, 0, 0}) <= 10.0 * tol);
}

TEST_CASE("reference output times and dense output") {
    const FieldModel osc = harmonic();
    ReferenceOptions opt;
    opt.output_times = {0.5, 1.25, 2.0};
    opt.dense = true;
    const ReferenceSolution s = reference_solve(osc, {1, 0, 0}, {0, 1, 0}, 3.0, 1e-12, opt);
    REQUIRE(s.output_times().size() >= 3);
    for (double t : {0.5, 1.25, 2.0}) {
        const PhaseState p = s.at(t);
        CHECK(p.x.x == doctest::Approx(std::cos(t)).epsilon(1e-10));
        CHECK(p.x.y == doctest::Approx(std::sin(t)).epsilon(1e-10));
    }
    for (double t = 0.05; t < 3.0; t += 0.173) {
        const PhaseState p = s.at(t);
        CHECK(std::fabs(p.x.x - std::cos(t)) < 1e-8);
        CHECK(std::fabs(p.v.y - std::cos(t)) < 1e-8);
    }
}

TEST_CASE("reference conserves energy on problem 1") {
    const FieldModel m = problem1();
    const double tol = 1e-12;
    const ReferenceSolution s = reference_solve(m, m.x0, m.v0, 1.0, tol);
    const PhaseState p = s.at(1.0);
    CHECK(std::fabs(energy(m, p.x, p.v) - energy(m, m.x0, m.v0)) <= 10.0 * tol * 2.0);
}

TEST_CASE("reference guards") {
    const FieldModel m = problem3(1e-4);
    CHECK_THROWS_AS(reference_solve(m, m.x0, m.v0, 100.0, 1e-10), ReferenceCostError);
    CHECK_THROWS_AS(reference_solve(m, m.x0, m.v0, 1.0, 1e-15), InvalidArgument);
}
