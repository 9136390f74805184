#pragma once
// Experiment harness: convergence sweeps against the reference solver and
// long-horizon conservation runs, aggregated per (h, eps) cell.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fvi/integrators.hpp"
#include "fvi/observables.hpp"

namespace fvi {

enum class Method { fvi, boris, reference };

std::string_view to_string(Method m);
/// Throws InvalidArgument for unknown labels.
Method parse_method(std::string_view label);

/// How h is tied to eps in a sweep.
///   independent : every (eps, h) pair of the two grids
///   linear      : h = alpha * eps           (c* eps^2 <= h^2 <= C* eps)
///   sqrt        : h = alpha * sqrt(eps)     (h^2 > C* eps when alpha^2 > C*)
///   three_halves: h = alpha * eps^{3/2}     (h^2 < c* eps^2)
enum class Coupling { independent, linear, sqrt, three_halves };

std::string_view to_string(Coupling c);
Coupling parse_coupling(std::string_view label);

struct CouplingRule {
    Coupling kind = Coupling::independent;
    double alpha = 1.0;

    double step_for(double epsilon) const;
};

/// Step-size regime relative to eps with regime constants C* and c*.
enum class Regime { large_step, intermediate, small_step };

Regime classify_regime(double h, double epsilon, double c_upper = 1.0, double c_lower = 1.0);
std::string_view to_string(Regime r);

struct SweepSpec {
    std::string problem = "p1";
    Method method = Method::fvi;
    /// Descending step sizes; unused by coupled sweeps.
    std::vector<double> h_grid;
    /// Descending eps values; p1 and p2 always use {1}.
    std::vector<double> eps_grid{1.0};
    CouplingRule coupling{};
    double t_end = 1.0;
    std::int64_t sample_stride = 0;  // 0 keeps no trajectory samples
    double reference_tol = 1e-12;
    std::int64_t step_budget = 100'000'000;
    int parallelism = 1;
    /// fp_tol, fp_max_iter and strict are taken from here; h and t_end are per cell.
    SolverConfig solver{};
};

/// Throws InvalidArgument when grids are empty, non-positive or not descending.
void validate_spec(const SweepSpec& spec);

enum class CellStatus { ok, skipped, failed };

struct TrajectorySample {
    double t = 0.0;
    Vec3 x{};
    Vec3 v{};
    double e_h = 0.0;
    std::optional<double> e_m;
    double e_i = 0.0;
    int iterations = 0;
};

struct CellResult {
    double h = 0.0;
    double epsilon = 0.0;
    /// Final time actually reached, floor(t_end / h) * h.
    double t_end = 0.0;
    CellStatus status = CellStatus::ok;
    std::string message;

    std::optional<ErrorRecord> errors;
    /// Local log-log slope against the previous cell along the swept parameter.
    std::optional<double> order_x;
    std::optional<double> order_v;
    std::optional<DriftRecord> drift;
    std::vector<TrajectorySample> trajectory;

    std::int64_t steps = 0;
    std::int64_t nonconverged_steps = 0;
    int max_iterations = 0;
    double wall_seconds = 0.0;
};

struct SweepResult {
    SweepSpec spec;
    std::vector<CellResult> cells;
};

/// (h, eps) pairs in emission order: eps outer, h inner.
std::vector<std::pair<double, double>> sweep_cells(const SweepSpec& spec);

/// Integrates every cell with spec.method and compares the terminal state with
/// the reference solution. Per-cell failures are recorded; the sweep continues.
SweepResult convergence_sweep(const SweepSpec& spec);

/// Long-horizon runs recording drift of H, M (when S exists) and I at
/// midpoint states, plus thinned trajectory samples when sample_stride > 0.
SweepResult conservation_run(const SweepSpec& spec);

/// p_k = log(e_k / e_{k+1}) / log(h_k / h_{k+1}) for consecutive entries.
std::vector<double> observed_orders(std::span<const double> steps, std::span<const double> errors);

/// Least-squares slope of log(ys) against log(xs).
double loglog_slope(std::span<const double> xs, std::span<const double> ys);

/// loglog_slope over the ceil(n/2) entries with the smallest xs.
double finest_half_slope(std::span<const double> xs, std::span<const double> ys);

// ---------------------------------------------------------------------------
// CSV output

enum class CsvKind { sweep, trajectory, drift };

/// Header row for each schema.
std::string_view csv_header(CsvKind kind);

/// Writes `result` in the requested schema. Trajectory rows concatenate the
/// samples of every cell in grid order. Throws Error with the path on I/O failure.
void emit_csv(const SweepResult& result, const std::filesystem::path& path, CsvKind kind);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace fvi
