#include "fvi/observables.hpp"

#include <algorithm>
#include <cmath>

#include "fvi/errors.hpp"

namespace fvi {

double energy(const FieldModel& model, const Vec3& x, const Vec3& v) { return 0.5 * dot(v, v) + model.u(x); }

double momentum(const FieldModel& model, const Vec3& x, const Vec3& v) {
    if (!model.s_matrix)
        throw MissingInvarianceError("momentum: model '" + model.label + "' has no symmetry generator S");
    return dot(v + total_potential(model, x), *model.s_matrix * x);
}

double magnetic_moment(const FieldModel& model, const Vec3& x, const Vec3& v) {
    const Vec3 b = total_field(model, x);
    const double bn = norm(b);
    if (bn == 0.0) throw ZeroFieldError("magnetic_moment: B(x) vanishes");
    const Vec3 vb = cross(v, b);
    return dot(vb, vb) / (2.0 * model.epsilon * bn * bn * bn);
}

std::pair<Vec3, Vec3> project_parallel(const Vec3& b0, const Vec3& v) {
    const Vec3 par = dot(b0, v) * b0;
    return {par, v - par};
}

ObservableSample observe(const FieldModel& model, double t, const Vec3& x, const Vec3& v) {
    ObservableSample s;
    s.t = t;
    s.energy = energy(model, x, v);
    if (model.s_matrix) s.momentum = momentum(model, x, v);
    s.magnetic_moment = magnetic_moment(model, x, v);
    std::tie(s.v_par, s.v_perp) = project_parallel(model.b0, v);
    return s;
}

namespace {

double ratio(const Vec3& num, const Vec3& exact, bool& absolute) {
    const double denom = norm(exact);
    const double diff = norm(num - exact);
    absolute = denom < 1e-12;
    return absolute ? diff : diff / denom;
}

}  // namespace

ErrorRecord relative_errors(const Vec3& b0, const Vec3& x_num, const Vec3& v_num, const Vec3& x_exact,
                            const Vec3& v_exact) {
    ErrorRecord e;
    const auto [par_num, perp_num] = project_parallel(b0, v_num);
    const auto [par_exact, perp_exact] = project_parallel(b0, v_exact);
    e.error_x = ratio(x_num, x_exact, e.absolute_x);
    e.error_v = ratio(v_num, v_exact, e.absolute_v);
    e.error_vpar = ratio(par_num, par_exact, e.absolute_vpar);
    e.error_vperp = ratio(perp_num, perp_exact, e.absolute_vperp);
    return e;
}

DriftAccumulator::DriftAccumulator(std::size_t total) : total_(total), decile_((total + 9) / 10) {}

void DriftAccumulator::add(double value) {
    if (seen_ == 0) first_ = value;
    const double d = std::fabs(value - first_);
    stats_.max_abs = std::max(stats_.max_abs, d);
    if (seen_ < decile_) stats_.first_decile_max = std::max(stats_.first_decile_max, d);
    if (seen_ + decile_ >= total_) stats_.last_decile_max = std::max(stats_.last_decile_max, d);
    ++seen_;
    stats_.samples = seen_;
}

DriftStats DriftAccumulator::stats() const { return stats_; }

DriftStats drift_stats(std::span<const double> series) {
    DriftAccumulator acc(series.size());
    for (double v : series) acc.add(v);
    return acc.stats();
}

DriftRecord drift_series(std::span<const ObservableSample> samples) {
    const std::size_t n = samples.size();
    DriftAccumulator h(n), i(n);
    std::optional<DriftAccumulator> m;
    if (n > 0 && samples.front().momentum) m.emplace(n);
    for (const auto& s : samples) {
        h.add(s.energy);
        i.add(s.magnetic_moment);
        if (m && s.momentum) m->add(*s.momentum);
    }
    DriftRecord out;
    out.energy = h.stats();
    out.magnetic_moment = i.stats();
    if (m) out.momentum = m->stats();
    return out;
}

}  // namespace fvi
