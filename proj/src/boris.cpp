#include <algorithm>
#include <sstream>

#include "fvi/errors.hpp"
#include "fvi/integrators.hpp"

namespace fvi {

Vec3 boris_velocity_update(const FieldModel& model, double tau, const Vec3& x, const Vec3& v) {
    const Vec3 kick = (0.5 * tau) * model.f(x);
    const Vec3 minus = v + kick;
    // Cayley rotation: (plus - minus) = (plus + minus) x B tau / 2
    const Vec3 t = (0.5 * tau) * total_field(model, x);
    const Vec3 s = (2.0 / (1.0 + dot(t, t))) * t;
    const Vec3 prime = minus + cross(minus, t);
    const Vec3 plus = minus + cross(prime, s);
    return plus + kick;
}

std::pair<Vec3, Vec3> boris_step(const FieldModel& model, double h, const Vec3& x, const Vec3& v_half) {
    const Vec3 v_next = boris_velocity_update(model, h, x, v_half);
    return {x + h * v_next, v_next};
}

Vec3 boris_initial_half_velocity(const FieldModel& model, double h, const Vec3& x0, const Vec3& v0) {
    return boris_velocity_update(model, -0.5 * h, x0, v0);
}

RunSummary boris_run(const FieldModel& model, const SolverConfig& cfg, const Vec3& x0, const Vec3& v0,
                     const RecordSink& sink, Sampling sampling, const RecordSink& on_step) {
    validate_config(cfg);
    RunSummary summary;
    summary.final_x = x0;
    summary.final_v = v0;
    const std::int64_t total = step_count(cfg.t_end, cfg.h);
    if (total == 0) return summary;

    const double h = cfg.h;
    Vec3 x = x0;
    Vec3 v = v0;
    Vec3 v_half = boris_initial_half_velocity(model, h, x0, v0);
    for (std::int64_t n = 0; n < total; ++n) {
        auto [x_next, v_half_next] = boris_step(model, h, x, v_half);
        const Vec3 v_next = boris_velocity_update(model, 0.5 * h, x_next, v_half_next);
        if (!is_finite(x_next) || !is_finite(v_next)) {
            std::ostringstream msg;
            msg << "boris: non-finite state at step " << n + 1;
            throw Error(msg.str());
        }
        TrajectoryRecord rec;
        rec.step = n + 1;
        rec.t = static_cast<double>(n + 1) * h;
        rec.t_mid = rec.t - 0.5 * h;
        rec.x_mid = 0.5 * (x + x_next);
        rec.v_mid = 0.5 * (v + v_next);
        rec.x = x_next;
        rec.v = v_next;
        rec.diagnostics = {0, 0.0, true, false};
        if (on_step) on_step(rec);
        if (sink && sampling.emit(rec.step, total)) sink(rec);
        x = x_next;
        v = v_next;
        v_half = v_half_next;
    }
    summary.steps = total;
    summary.final_time = static_cast<double>(total) * h;
    summary.final_x = x;
    summary.final_v = v;
    return summary;
}

}  // namespace fvi
