#include <cfloat>
#include <cmath>
#include <limits>
#include <sstream>

#include "fvi/errors.hpp"
#include "fvi/integrators.hpp"

namespace fvi {

void validate_config(const SolverConfig& cfg) {
    if (!(cfg.h > 0.0) || !std::isfinite(cfg.h)) throw InvalidArgument("solver config: h must be positive");
    if (!(cfg.fp_tol > 0.0)) throw InvalidArgument("solver config: fp_tol must be positive");
    if (cfg.fp_max_iter < 1) throw InvalidArgument("solver config: fp_max_iter must be >= 1");
    if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end))
        throw InvalidArgument("solver config: t_end must be finite and non-negative");
}

std::int64_t step_count(double t_end, double h) {
    const double ratio = t_end / h;
    if (!(ratio < 9.0e18)) throw InvalidArgument("step_count: t_end / h overflows the step counter");
    const double nearest = std::round(ratio);
    if (std::fabs(ratio - nearest) <= 1e-9 * std::fmax(1.0, ratio))
        return static_cast<std::int64_t>(nearest);
    return static_cast<std::int64_t>(std::floor(ratio));
}

FviStepper::FviStepper(FieldModel model, const SolverConfig& cfg)
    : model_(std::move(model)), cfg_(cfg), filters_(build_filters(cfg.h, model_.epsilon, model_.b0)) {
    if (cfg_.fp_max_iter < 1 || !(cfg_.fp_tol > 0.0))
        throw InvalidArgument("FviStepper: invalid fixed-point settings");
    h_psi_ = cfg_.h * filters_.psi;
    h_m_psi_ = filters_.resolvent * h_psi_;
}

FviStepper FviStepper::reversed() const {
    SolverConfig cfg = cfg_;
    cfg.h = -cfg.h;
    return FviStepper(model_, cfg);
}

template <class Map>
std::pair<Vec3, StepDiagnostics> FviStepper::solve(const Map& map, Vec3 seed, double x_scale) const {
    StepDiagnostics diag;
    Vec3 prev = seed;
    Vec3 next = map(prev);
    diag.iterations_used = 1;
    double inc = max_norm(next - prev);
    double best = inc;
    int stale = 0;
    // Increments below this are indistinguishable from rounding in the map.
    const double roundoff_floor = 1024.0 * DBL_EPSILON * (1.0 + x_scale * (1.0 + inf_norm(filters_.resolvent)));
    while (inc > cfg_.fp_tol && diag.iterations_used < cfg_.fp_max_iter) {
        prev = next;
        next = map(prev);
        ++diag.iterations_used;
        inc = max_norm(next - prev);
        if (inc < best) {
            best = inc;
            stale = 0;
        } else if (++stale >= 3 && best <= roundoff_floor) {
            diag.stagnated = true;
            break;
        }
    }
    diag.final_increment = inc;
    diag.converged = inc <= cfg_.fp_tol || diag.stagnated;
    return {next, diag};
}

StepResult FviStepper::startup(const Vec3& x0, const Vec3& v0) const {
    const auto& m = model_;
    const double h = cfg_.h;
    const Vec3 base = h_m_psi_ * (v0 + m.a1(x0));

    auto map = [&](const Vec3& d) {
        const Vec3 mid = x0 + 0.5 * d;
        const Vec3 inner = 0.5 * (transpose(potential_jacobian(m, mid)) * d) - m.a1(mid) + (0.5 * h) * m.f(mid);
        return base + h_m_psi_ * inner;
    };
    const Vec3 seed = base + h_m_psi_ * ((0.5 * h) * m.f(x0) - m.a1(x0));
    auto [d, diag] = solve(map, seed, max_norm(x0));

    StepResult out;
    out.state.x_prev = x0;
    out.state.x_curr = x0 + d;
    out.state.increment = d;
    out.state.v_curr = 2.0 * midpoint_velocity(out.state) - v0;
    out.state.step_index = 1;
    out.diagnostics = diag;
    return out;
}

StepResult FviStepper::step(const TwoStepState& s) const {
    const auto& m = model_;
    const double h = cfg_.h;
    const Vec3& xc = s.x_curr;
    const Vec3 d_prev = s.delta();
    const Vec3 mid_prev = xc - 0.5 * d_prev;

    // Everything that does not depend on x_{n+1}. M (I - c Psi hat(b0)) d is
    // applied as d - (h/eps) M Psi hat(b0) d so the component along b0 passes
    // through unrounded.
    const Vec3 lag = 0.5 * (transpose(potential_jacobian(m, mid_prev)) * d_prev) + m.a1(mid_prev) +
                     (0.5 * h) * m.f(mid_prev) - cross(m.b0, d_prev) / m.epsilon;
    const Vec3 base = d_prev + h_m_psi_ * lag;

    auto map = [&](const Vec3& d) {
        const Vec3 mid = xc + 0.5 * d;
        const Vec3 inner = 0.5 * (transpose(potential_jacobian(m, mid)) * d) - m.a1(mid) + (0.5 * h) * m.f(mid);
        return base + h_m_psi_ * inner;
    };
    // lag-only predictor: x_n stands in for the unknown midpoint
    const Vec3 seed = base + h_m_psi_ * ((0.5 * h) * m.f(xc) - m.a1(xc));
    auto [d, diag] = solve(map, seed, max_norm(xc));

    StepResult out;
    out.state.x_prev = xc;
    out.state.x_curr = xc + d;
    out.state.increment = d;
    out.state.v_curr = 2.0 * midpoint_velocity(out.state) - s.v_curr;
    out.state.step_index = s.step_index + 1;
    out.diagnostics = diag;
    return out;
}

Vec3 FviStepper::midpoint_velocity(const Vec3& x_curr, const Vec3& x_next) const {
    return (filters_.phi * (x_next - x_curr)) / cfg_.h;
}

Vec3 FviStepper::midpoint_velocity(const TwoStepState& state) const {
    return (filters_.phi * state.delta()) / cfg_.h;
}

Residual FviStepper::step_residual(const Vec3& xp, const Vec3& xc, const Vec3& xn) const {
    const auto& m = model_;
    const double h = cfg_.h;
    const Vec3 mid_next = 0.5 * (xc + xn);
    const Vec3 mid_prev = 0.5 * (xc + xp);
    const Vec3 terms[] = {
        h_psi_ * (0.5 * (transpose(total_potential_jacobian(m, mid_next)) * (xn - xc))),
        h_psi_ * (0.5 * (transpose(total_potential_jacobian(m, mid_prev)) * (xc - xp))),
        -(h_psi_ * total_potential(m, mid_next)),
        h_psi_ * total_potential(m, mid_prev),
        (0.5 * h) * (h_psi_ * m.f(mid_next)),
        (0.5 * h) * (h_psi_ * m.f(mid_prev)),
    };
    Vec3 r = xn - 2.0 * xc + xp;
    Residual out;
    out.scale = max_norm(xn) + 2.0 * max_norm(xc) + max_norm(xp);
    for (const Vec3& t : terms) {
        r -= t;
        out.scale += max_norm(t);
    }
    out.residual = max_norm(r);
    return out;
}

Residual FviStepper::startup_residual(const Vec3& x0, const Vec3& v0, const Vec3& x1) const {
    const auto& m = model_;
    const double h = cfg_.h;
    const Vec3 mid = 0.5 * (x0 + x1);
    const Vec3 terms[] = {
        h_psi_ * (v0 + total_potential(m, x0)),
        h_psi_ * (0.5 * (transpose(total_potential_jacobian(m, mid)) * (x1 - x0))),
        -(h_psi_ * total_potential(m, mid)),
        (0.5 * h) * (h_psi_ * m.f(mid)),
    };
    Vec3 r = x1 - x0;
    Residual out;
    out.scale = max_norm(x1) + max_norm(x0);
    for (const Vec3& t : terms) {
        r -= t;
        out.scale += max_norm(t);
    }
    out.residual = max_norm(r);
    return out;
}

StepResult fvi_startup(const FieldModel& model, const SolverConfig& cfg, const Vec3& x0, const Vec3& v0) {
    validate_config(cfg);
    return FviStepper(model, cfg).startup(x0, v0);
}

StepResult fvi_step(const FieldModel& model, const SolverConfig& cfg, const TwoStepState& state) {
    validate_config(cfg);
    return FviStepper(model, cfg).step(state);
}

namespace {

void check_step(const SolverConfig& cfg, const StepResult& r, RunSummary& summary) {
    if (!is_finite(r.state.x_curr) || !is_finite(r.state.v_curr)) {
        std::ostringstream msg;
        msg << "integration produced a non-finite state at step " << r.state.step_index;
        throw Error(msg.str());
    }
    summary.max_iterations = std::max(summary.max_iterations, r.diagnostics.iterations_used);
    if (!r.diagnostics.converged) {
        ++summary.nonconverged_steps;
        if (cfg.strict) {
            std::ostringstream msg;
            msg << "fixed-point iteration did not converge at step " << r.state.step_index
                << " (increment " << r.diagnostics.final_increment << " after "
                << r.diagnostics.iterations_used << " iterations)";
            throw ConvergenceError(msg.str());
        }
    }
}

}  // namespace

RunSummary fvi_run(const FieldModel& model, const SolverConfig& cfg, const Vec3& x0, const Vec3& v0,
                   const RecordSink& sink, Sampling sampling, const RecordSink& on_step) {
    validate_config(cfg);
    RunSummary summary;
    summary.final_x = x0;
    summary.final_v = v0;
    const std::int64_t total = step_count(cfg.t_end, cfg.h);
    if (total == 0) return summary;

    const FviStepper stepper(model, cfg);
    const double h = cfg.h;

    auto emit = [&](const TwoStepState& s, const StepDiagnostics& diag) {
        TrajectoryRecord rec;
        rec.step = s.step_index;
        rec.t = static_cast<double>(s.step_index) * h;
        rec.t_mid = rec.t - 0.5 * h;
        rec.x_mid = s.x_curr - 0.5 * s.delta();
        rec.v_mid = stepper.midpoint_velocity(s);
        rec.x = s.x_curr;
        rec.v = s.v_curr;
        rec.diagnostics = diag;
        if (on_step) on_step(rec);
        if (sink && sampling.emit(rec.step, total)) sink(rec);
    };

    StepResult r = stepper.startup(x0, v0);
    check_step(cfg, r, summary);
    emit(r.state, r.diagnostics);
    for (std::int64_t n = 1; n < total; ++n) {
        r = stepper.step(r.state);
        check_step(cfg, r, summary);
        emit(r.state, r.diagnostics);
    }
    summary.steps = total;
    summary.final_time = static_cast<double>(total) * h;
    summary.final_x = r.state.x_curr;
    summary.final_v = r.state.v_curr;
    return summary;
}

std::vector<TrajectoryRecord> fvi_trajectory(const FieldModel& model, const SolverConfig& cfg,
                                             const Vec3& x0, const Vec3& v0, Sampling sampling) {
    std::vector<TrajectoryRecord> out;
    fvi_run(model, cfg, x0, v0, [&](const TrajectoryRecord& r) { out.push_back(r); }, sampling);
    return out;
}

}  // namespace fvi
