#pragma once
// Time integrators: the filtered two-step variational integrator (FVI),
// the Boris baseline and an adaptive Dormand-Prince reference solver.

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "fvi/fields.hpp"
#include "fvi/filters.hpp"
#include "fvi/linalg3.hpp"

namespace fvi {

struct SolverConfig {
    double h = 0.01;
    /// Absolute max-norm tolerance on fixed-point increments.
    double fp_tol = 1e-16;
    int fp_max_iter = 50;
    double t_end = 1.0;
    /// Abort on fixed-point non-convergence instead of recording it.
    bool strict = false;
};

/// Throws InvalidArgument unless h > 0, fp_tol > 0, fp_max_iter >= 1, t_end >= 0.
void validate_config(const SolverConfig& cfg);

/// Number of steps of size h that fit in [0, t_end], tolerating roundoff in
/// t_end / h (so t_end = 1, h = 0.1 gives 10).
std::int64_t step_count(double t_end, double h);

/// Two-step recurrence state (x_{n-1}, x_n, v_n).
struct TwoStepState {
    Vec3 x_prev{};
    Vec3 x_curr{};
    Vec3 v_curr{};
    std::int64_t step_index = 0;
    /// x_n - x_{n-1} as computed, before rounding into x_n. Set by the
    /// stepper; when absent it is recomputed from the two positions.
    std::optional<Vec3> increment;

    Vec3 delta() const { return increment ? *increment : x_curr - x_prev; }
};

struct StepDiagnostics {
    int iterations_used = 0;
    double final_increment = 0.0;
    bool converged = false;
    /// Stopped because increments stalled at roundoff level above fp_tol.
    bool stagnated = false;
};

struct StepResult {
    TwoStepState state;
    StepDiagnostics diagnostics;
};

/// Residual of an implicit equation together with the magnitude of the
/// largest terms that enter it; residual / scale is the relative defect.
struct Residual {
    double residual = 0.0;
    double scale = 0.0;
};

/// FVI stepper with the filter matrices cached for a fixed (h, eps, b0).
///
/// Positions follow
///   x_{n+1} - 2 x_n + x_{n-1} = h Psi ( 1/2 A'(x_{n+1/2})^T (x_{n+1} - x_n)
///                                     + 1/2 A'(x_{n-1/2})^T (x_n - x_{n-1})
///                                     - A(x_{n+1/2}) + A(x_{n-1/2})
///                                     + h/2 (F(x_{n+1/2}) + F(x_{n-1/2})) )
/// and velocities (v_{n+1} + v_n) / 2 = Phi (x_{n+1} - x_n) / h.
///
/// The 1/eps part of A is linear in x and cancels into the increments
/// d_n = x_n - x_{n-1}:
///   (I + c Psi hat(b0)) d_{n+1} = (I - c Psi hat(b0)) d_n + h Psi G1,   c = h / 2eps,
/// where G1 collects the A1, A1' and F terms. The fixed-point map iterates on
/// d_{n+1} with the resolvent M applied once per evaluation.
class FviStepper {
public:
    FviStepper(FieldModel model, const SolverConfig& cfg);

    /// Solves for x_1 from (x_0, v_0) with p_0 = v_0 + A(x_0).
    StepResult startup(const Vec3& x0, const Vec3& v0) const;

    /// Advances (x_{n-1}, x_n, v_n) to (x_n, x_{n+1}, v_{n+1}).
    StepResult step(const TwoStepState& state) const;

    /// v_{n+1/2} = Phi (x_{n+1} - x_n) / h.
    Vec3 midpoint_velocity(const Vec3& x_curr, const Vec3& x_next) const;
    /// Same, from the increment carried by a stepper state.
    Vec3 midpoint_velocity(const TwoStepState& state) const;

    /// Residual of the un-rearranged two-step equation with the full A.
    Residual step_residual(const Vec3& x_prev, const Vec3& x_curr, const Vec3& x_next) const;

    /// Residual of the startup equation with the full A.
    Residual startup_residual(const Vec3& x0, const Vec3& v0, const Vec3& x1) const;

    /// Same scheme with h -> -h.
    FviStepper reversed() const;

    const FilterPack& filters() const { return filters_; }
    const FieldModel& model() const { return model_; }
    const SolverConfig& config() const { return cfg_; }

private:
    template <class Map>
    std::pair<Vec3, StepDiagnostics> solve(const Map& map, Vec3 seed, double x_scale) const;

    FieldModel model_;
    SolverConfig cfg_;
    FilterPack filters_;
    Mat3 h_m_psi_;  // h * M * Psi
    Mat3 h_psi_;    // h * Psi
};

StepResult fvi_startup(const FieldModel& model, const SolverConfig& cfg, const Vec3& x0, const Vec3& v0);
StepResult fvi_step(const FieldModel& model, const SolverConfig& cfg, const TwoStepState& state);

/// One emitted step n -> n+1 of a trajectory.
struct TrajectoryRecord {
    std::int64_t step = 0;  // n + 1
    double t_mid = 0.0;     // t_{n+1/2}
    Vec3 x_mid{};
    Vec3 v_mid{};
    double t = 0.0;         // t_{n+1}
    Vec3 x{};
    Vec3 v{};
    StepDiagnostics diagnostics{};
};

/// Output thinning. The first and last steps are always emitted; in between
/// every stride-th step. Integration itself is unaffected.
struct Sampling {
    std::int64_t stride = 1;

    bool emit(std::int64_t step, std::int64_t total) const {
        return step == 1 || step == total || (stride > 0 && step % stride == 0);
    }
};

using RecordSink = std::function<void(const TrajectoryRecord&)>;

struct RunSummary {
    std::int64_t steps = 0;
    std::int64_t nonconverged_steps = 0;
    int max_iterations = 0;
    double final_time = 0.0;
    Vec3 final_x{};
    Vec3 final_v{};
};

/// Integrates to t_end, sending every step to `on_step` and the thinned
/// subset to `sink`. Throws ConvergenceError in strict mode.
RunSummary fvi_run(const FieldModel& model, const SolverConfig& cfg, const Vec3& x0, const Vec3& v0,
                   const RecordSink& sink, Sampling sampling = {}, const RecordSink& on_step = {});

std::vector<TrajectoryRecord> fvi_trajectory(const FieldModel& model, const SolverConfig& cfg,
                                             const Vec3& x0, const Vec3& v0, Sampling sampling = {});

// ---------------------------------------------------------------------------
// Boris

/// Kick-rotate-kick velocity update over a time span tau at fixed x.
Vec3 boris_velocity_update(const FieldModel& model, double tau, const Vec3& x, const Vec3& v);

/// One leapfrog step: takes (x_n, v_{n-1/2}), returns (x_{n+1}, v_{n+1/2}).
std::pair<Vec3, Vec3> boris_step(const FieldModel& model, double h, const Vec3& x, const Vec3& v_half);

/// v_{-1/2} from v_0 by a backward half update; the endpoint velocity is
/// recovered as v_n = boris_velocity_update(model, h/2, x_n, v_{n-1/2}).
Vec3 boris_initial_half_velocity(const FieldModel& model, double h, const Vec3& x0, const Vec3& v0);

/// Boris counterpart of fvi_run. Midpoint samples are arithmetic means of
/// endpoint samples.
RunSummary boris_run(const FieldModel& model, const SolverConfig& cfg, const Vec3& x0, const Vec3& v0,
                     const RecordSink& sink, Sampling sampling = {}, const RecordSink& on_step = {});

// ---------------------------------------------------------------------------
// Reference solver

struct PhaseState {
    Vec3 x{};
    Vec3 v{};
};

struct ReferenceOptions {
    /// Times (in [0, t_end]) the integrator lands on exactly.
    std::vector<double> output_times;
    /// Keep every accepted step for dense interpolation.
    bool dense = false;
    /// Upper bound on the internal step; 0 selects eps/4 when eps < 1.
    double max_step = 0.0;
    /// Disable the t_end / eps cost guard.
    bool force = false;
};

/// Result of an adaptive Dormand-Prince 5(4) solve.
class ReferenceSolution {
public:
    /// State at t. Exact output times (and t = 0, t_end) are returned as
    /// stored; other times need `dense` and use the 4th-order continuous
    /// extension.
    PhaseState at(double t) const;

    double t_end() const { return t_end_; }
    std::int64_t accepted_steps() const { return accepted_; }
    std::int64_t rejected_steps() const { return rejected_; }
    const std::vector<double>& output_times() const { return out_t_; }
    const std::vector<PhaseState>& output_states() const { return out_y_; }

private:
    friend ReferenceSolution reference_solve(const FieldModel&, const Vec3&, const Vec3&, double, double,
                                             const ReferenceOptions&);
    struct Segment {
        double t0 = 0.0;
        double dt = 0.0;
        std::array<std::array<double, 6>, 5> coeff{};
    };

    double t_end_ = 0.0;
    std::int64_t accepted_ = 0;
    std::int64_t rejected_ = 0;
    std::vector<double> out_t_;
    std::vector<PhaseState> out_y_;
    std::vector<Segment> segments_;
};

/// Solves x'' = x' x B(x) + F(x) with rtol = atol = tol (tol >= 1e-13).
/// Throws ReferenceCostError for eps <= 1e-4 with t_end > 10 unless forced,
/// and StepSizeUnderflowError when the controller stalls.
ReferenceSolution reference_solve(const FieldModel& model, const Vec3& x0, const Vec3& v0, double t_end,
                                  double tol, const ReferenceOptions& options = {});

}  // namespace fvi
