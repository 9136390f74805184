#pragma once
// Conserved and adiabatic quantities, velocity projections and error metrics.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fvi/fields.hpp"
#include "fvi/linalg3.hpp"

namespace fvi {

/// H(x, v) = |v|^2 / 2 + U(x).
double energy(const FieldModel& model, const Vec3& x, const Vec3& v);

/// M(x, v) = (v + A(x))^T S x. Throws MissingInvarianceError without S.
double momentum(const FieldModel& model, const Vec3& x, const Vec3& v);

/// I(x, v) = |v x B(x)|^2 / (2 eps |B(x)|^3). Throws ZeroFieldError if B(x) = 0.
double magnetic_moment(const FieldModel& model, const Vec3& x, const Vec3& v);

/// Splits v into (b0 (b0 . v), v - b0 (b0 . v)).
std::pair<Vec3, Vec3> project_parallel(const Vec3& b0, const Vec3& v);

struct ObservableSample {
    double t = 0.0;
    double energy = 0.0;
    std::optional<double> momentum;
    double magnetic_moment = 0.0;
    Vec3 v_par{};
    Vec3 v_perp{};
};

/// Evaluates every observable at (x, v); momentum only when S is present.
ObservableSample observe(const FieldModel& model, double t, const Vec3& x, const Vec3& v);

/// Relative global errors |a - b| / |b| against the exact state. A denominator
/// below 1e-12 switches that metric to the absolute error and raises its flag.
struct ErrorRecord {
    double error_x = 0.0;
    double error_v = 0.0;
    double error_vpar = 0.0;
    double error_vperp = 0.0;
    bool absolute_x = false;
    bool absolute_v = false;
    bool absolute_vpar = false;
    bool absolute_vperp = false;
};

ErrorRecord relative_errors(const Vec3& b0, const Vec3& x_num, const Vec3& v_num, const Vec3& x_exact,
                            const Vec3& v_exact);

/// Drift of one quantity relative to its first sample.
struct DriftStats {
    double max_abs = 0.0;
    double first_decile_max = 0.0;
    double last_decile_max = 0.0;
    std::size_t samples = 0;
};

struct DriftRecord {
    DriftStats energy;
    std::optional<DriftStats> momentum;
    DriftStats magnetic_moment;
};

/// Folds a sample stream one value at a time; first value is the reference.
/// Decile bounds need the total length up front.
class DriftAccumulator {
public:
    explicit DriftAccumulator(std::size_t total);
    void add(double value);
    DriftStats stats() const;

private:
    std::size_t total_;
    std::size_t decile_;
    std::size_t seen_ = 0;
    double first_ = 0.0;
    DriftStats stats_;
};

/// Max absolute drift of a scalar series, and over its first and last
/// ceil(n/10) samples.
DriftStats drift_stats(std::span<const double> series);

DriftRecord drift_series(std::span<const ObservableSample> samples);

}  // namespace fvi
