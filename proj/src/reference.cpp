// Dormand-Prince 5(4) with FSAL, standard step-size control and the
// 4th-order continuous extension (Hairer, Norsett & Wanner, dopri5).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "fvi/errors.hpp"
#include "fvi/integrators.hpp"

namespace fvi {

namespace {

using State = std::array<double, 6>;

constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

State pack(const Vec3& x, const Vec3& v) { return {x.x, x.y, x.z, v.x, v.y, v.z}; }
PhaseState unpack(const State& y) { return {{y[0], y[1], y[2]}, {y[3], y[4], y[5]}}; }

State rhs(const FieldModel& model, const State& y) {
    const Vec3 x{y[0], y[1], y[2]};
    const Vec3 v{y[3], y[4], y[5]};
    const Vec3 a = cross(v, total_field(model, x)) + model.f(x);
    return {v.x, v.y, v.z, a.x, a.y, a.z};
}

}  // namespace

PhaseState ReferenceSolution::at(double t) const {
    const auto it = std::lower_bound(out_t_.begin(), out_t_.end(), t);
    if (it != out_t_.end() && *it == t) return out_y_[static_cast<std::size_t>(it - out_t_.begin())];
    if (segments_.empty()) {
        std::ostringstream msg;
        msg << "reference solution: t = " << t << " is not an output time and dense output is off";
        throw InvalidArgument(msg.str());
    }
    if (t < 0.0 || t > t_end_) throw InvalidArgument("reference solution: t outside [0, t_end]");
    auto seg = std::upper_bound(segments_.begin(), segments_.end(), t,
                                [](double value, const Segment& s) { return value < s.t0; });
    if (seg != segments_.begin()) --seg;
    const double theta = (t - seg->t0) / seg->dt;
    const double theta1 = 1.0 - theta;
    State y;
    for (int i = 0; i < 6; ++i) {
        const auto& c = seg->coeff;
        y[i] = c[0][i] + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i])));
    }
    return unpack(y);
}

ReferenceSolution reference_solve(const FieldModel& model, const Vec3& x0, const Vec3& v0, double t_end,
                                  double tol, const ReferenceOptions& options) {
    if (!(tol >= 1e-13)) throw InvalidArgument("reference_solve: tol must be >= 1e-13");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidArgument("reference_solve: bad t_end");
    if (!options.force && model.epsilon <= 1e-4 && t_end > 10.0)
        throw ReferenceCostError("reference_solve: refusing eps <= 1e-4 with t_end > 10 (cost ~ t_end / eps)");

    ReferenceSolution sol;
    sol.t_end_ = t_end;

    std::vector<double> stops = options.output_times;
    for (double t : stops)
        if (t < 0.0 || t > t_end) throw InvalidArgument("reference_solve: output time outside [0, t_end]");
    stops.push_back(0.0);
    stops.push_back(t_end);
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    double max_step = options.max_step;
    if (max_step <= 0.0) max_step = model.epsilon < 1.0 ? model.epsilon / 4.0 : t_end;
    max_step = std::max(max_step, std::numeric_limits<double>::min());

    State y = pack(x0, v0);
    double t = 0.0;
    std::size_t next_stop = 0;
    auto record_stops = [&]() {
        while (next_stop < stops.size() && stops[next_stop] == t) {
            sol.out_t_.push_back(t);
            sol.out_y_.push_back(unpack(y));
            ++next_stop;
        }
    };
    record_stops();

    State k1 = rhs(model, y), k2, k3, k4, k5, k6, k7, ytmp, ynew;
    auto err_scale = [&](int i, const State& a, const State& b) {
        return tol + tol * std::max(std::fabs(a[i]), std::fabs(b[i]));
    };

    // initial step guess from derivative magnitudes
    double dnf = 0.0, dny = 0.0;
    for (int i = 0; i < 6; ++i) {
        const double sk = tol + tol * std::fabs(y[i]);
        dnf += (k1[i] / sk) * (k1[i] / sk);
        dny += (y[i] / sk) * (y[i] / sk);
    }
    double dt = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
    dt = std::min(dt, max_step);

    bool last_rejected = false;
    while (next_stop < stops.size()) {
        const double target = stops[next_stop];
        bool lands = false;
        const double dt_free = dt;
        if (t + dt >= target || target - (t + dt) < 1e-12 * std::max(1.0, std::fabs(target))) {
            dt = target - t;
            lands = true;
        }
        if (dt <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(t))) {
            std::ostringstream msg;
            msg << "reference_solve: step size underflow at t = " << t;
            throw StepSizeUnderflowError(msg.str());
        }

        for (int i = 0; i < 6; ++i) ytmp[i] = y[i] + dt * a21 * k1[i];
        k2 = rhs(model, ytmp);
        for (int i = 0; i < 6; ++i) ytmp[i] = y[i] + dt * (a31 * k1[i] + a32 * k2[i]);
        k3 = rhs(model, ytmp);
        for (int i = 0; i < 6; ++i) ytmp[i] = y[i] + dt * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        k4 = rhs(model, ytmp);
        for (int i = 0; i < 6; ++i)
            ytmp[i] = y[i] + dt * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        k5 = rhs(model, ytmp);
        for (int i = 0; i < 6; ++i)
            ytmp[i] = y[i] + dt * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        k6 = rhs(model, ytmp);
        for (int i = 0; i < 6; ++i)
            ynew[i] = y[i] + dt * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        k7 = rhs(model, ynew);

        double err = 0.0;
        for (int i = 0; i < 6; ++i) {
            const double e =
                dt * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double r = e / err_scale(i, y, ynew);
            err += r * r;
        }
        err = std::sqrt(err / 6.0);
        if (!std::isfinite(err)) err = 1e10;

        if (err <= 1.0) {
            if (options.dense) {
                ReferenceSolution::Segment seg;
                seg.t0 = t;
                seg.dt = dt;
                for (int i = 0; i < 6; ++i) {
                    const double ydiff = ynew[i] - y[i];
                    const double bspl = dt * k1[i] - ydiff;
                    seg.coeff[0][i] = y[i];
                    seg.coeff[1][i] = ydiff;
                    seg.coeff[2][i] = bspl;
                    seg.coeff[3][i] = ydiff - dt * k7[i] - bspl;
                    seg.coeff[4][i] =
                        dt * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
                }
                sol.segments_.push_back(seg);
            }
            t = lands ? target : t + dt;
            y = ynew;
            k1 = k7;
            ++sol.accepted_;
            record_stops();
            double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
            last_rejected = false;
            // a landing step may have been truncated; do not let it shrink the next one
            const double grown = dt * fac;
            dt = std::min(max_step, lands ? std::max(grown, dt_free) : grown);
        } else {
            ++sol.rejected_;
            last_rejected = true;
            dt *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        }
    }
    return sol;
}

}  // namespace fvi
