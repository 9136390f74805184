#include "fvi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

#include "fvi/errors.hpp"

namespace fvi {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::fvi: return "fvi";
        case Method::boris: return "boris";
        case Method::reference: return "reference";
    }
    return "?";
}

Method parse_method(std::string_view label) {
    if (label == "fvi") return Method::fvi;
    if (label == "boris") return Method::boris;
    if (label == "reference") return Method::reference;
    throw InvalidArgument("unknown method '" + std::string(label) + "' (expected fvi, boris or reference)");
}

std::string_view to_string(Coupling c) {
    switch (c) {
        case Coupling::independent: return "independent";
        case Coupling::linear: return "linear";
        case Coupling::sqrt: return "sqrt";
        case Coupling::three_halves: return "three-halves";
    }
    return "?";
}

Coupling parse_coupling(std::string_view label) {
    if (label == "independent") return Coupling::independent;
    if (label == "linear") return Coupling::linear;
    if (label == "sqrt") return Coupling::sqrt;
    if (label == "three-halves") return Coupling::three_halves;
    throw InvalidArgument("unknown coupling '" + std::string(label) +
                          "' (expected independent, linear, sqrt or three-halves)");
}

double CouplingRule::step_for(double epsilon) const {
    switch (kind) {
        case Coupling::linear: return alpha * epsilon;
        case Coupling::sqrt: return alpha * std::sqrt(epsilon);
        case Coupling::three_halves: return alpha * epsilon * std::sqrt(epsilon);
        case Coupling::independent: break;
    }
    throw InvalidArgument("CouplingRule::step_for: independent coupling has no step rule");
}

Regime classify_regime(double h, double epsilon, double c_upper, double c_lower) {
    const double h2 = h * h;
    if (h2 > c_upper * epsilon) return Regime::large_step;
    if (h2 >= c_lower * epsilon * epsilon) return Regime::intermediate;
    return Regime::small_step;
}

std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::large_step: return "h^2 > C*eps";
        case Regime::intermediate: return "c*eps^2 <= h^2 <= C*eps";
        case Regime::small_step: return "h^2 < c*eps^2";
    }
    return "?";
}

namespace {

void check_grid(const std::vector<double>& grid, const char* name) {
    if (grid.empty()) throw InvalidArgument(std::string("sweep spec: ") + name + " is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i]))
            throw InvalidArgument(std::string("sweep spec: ") + name + " entries must be positive");
        if (i > 0 && !(grid[i] < grid[i - 1]))
            throw InvalidArgument(std::string("sweep spec: ") + name + " must be strictly descending");
    }
}

bool fixed_epsilon_problem(std::string_view label) { return label == "p1" || label == "p2"; }

}  // namespace

void validate_spec(const SweepSpec& spec) {
    if (!is_builtin_problem(spec.problem)) throw InvalidArgument("sweep spec: unknown problem " + spec.problem);
    check_grid(spec.eps_grid, "eps grid");
    if (spec.coupling.kind == Coupling::independent) check_grid(spec.h_grid, "h grid");
    else if (!(spec.coupling.alpha > 0.0)) throw InvalidArgument("sweep spec: coupling alpha must be positive");
    if (!(spec.t_end >= 0.0) || !std::isfinite(spec.t_end)) throw InvalidArgument("sweep spec: bad t_end");
    if (spec.sample_stride < 0) throw InvalidArgument("sweep spec: sample stride must be >= 0");
    if (spec.parallelism < 1) throw InvalidArgument("sweep spec: parallelism must be >= 1");
}

std::vector<std::pair<double, double>> sweep_cells(const SweepSpec& spec) {
    std::vector<std::pair<double, double>> cells;
    std::vector<double> eps_grid = spec.eps_grid;
    if (fixed_epsilon_problem(spec.problem)) eps_grid = {1.0};
    for (double eps : eps_grid) {
        if (spec.coupling.kind == Coupling::independent) {
            for (double h : spec.h_grid) cells.emplace_back(h, eps);
        } else {
            cells.emplace_back(spec.coupling.step_for(eps), eps);
        }
    }
    return cells;
}

std::vector<double> observed_orders(std::span<const double> steps, std::span<const double> errors) {
    if (steps.size() != errors.size()) throw InvalidArgument("observed_orders: size mismatch");
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < steps.size(); ++k)
        out.push_back(std::log(errors[k] / errors[k + 1]) / std::log(steps[k] / steps[k + 1]));
    return out;
}

double loglog_slope(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw InvalidArgument("loglog_slope: need >= 2 paired points");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double lx = std::log(xs[i]);
        const double ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double finest_half_slope(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw InvalidArgument("finest_half_slope: size mismatch");
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    const std::size_t keep = std::max<std::size_t>(2, (xs.size() + 1) / 2);
    std::vector<double> fx, fy;
    for (std::size_t i = 0; i < std::min(keep, idx.size()); ++i) {
        fx.push_back(xs[idx[i]]);
        fy.push_back(ys[idx[i]]);
    }
    return loglog_slope(fx, fy);
}

namespace {

using CellJob = std::function<CellResult(double h, double eps)>;

std::vector<CellResult> run_cells(const SweepSpec& spec, const CellJob& job) {
    const auto cells = sweep_cells(spec);
    std::vector<CellResult> out(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const auto [h, eps] = cells[i];
            const auto start = std::chrono::steady_clock::now();
            CellResult r;
            try {
                r = job(h, eps);
            } catch (const ReferenceCostError& e) {
                r.status = CellStatus::skipped;
                r.message = e.what();
            } catch (const std::exception& e) {
                r.status = CellStatus::failed;
                r.message = e.what();
            }
            r.h = h;
            r.epsilon = eps;
            if (r.status != CellStatus::ok && r.t_end == 0.0 && h > 0.0) {
                try {
                    r.t_end = static_cast<double>(step_count(spec.t_end, h)) * h;
                } catch (const Error&) {
                }
            }
            r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            out[i] = std::move(r);
        }
    };
    const int threads = std::min<int>(spec.parallelism, static_cast<int>(cells.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return out;
}

SolverConfig cell_config(const SweepSpec& spec, double h) {
    SolverConfig cfg = spec.solver;
    cfg.h = h;
    cfg.t_end = spec.t_end;
    return cfg;
}

void check_budget(const SweepSpec& spec, std::int64_t steps) {
    if (steps > spec.step_budget) {
        std::ostringstream msg;
        msg << "cell needs " << steps << " steps, above the step budget " << spec.step_budget;
        throw InvalidArgument(msg.str());
    }
}

RunSummary run_method(Method method, const FieldModel& model, const SolverConfig& cfg, const RecordSink& sink,
                      Sampling sampling, const RecordSink& on_step) {
    if (method == Method::boris) return boris_run(model, cfg, model.x0, model.v0, sink, sampling, on_step);
    return fvi_run(model, cfg, model.x0, model.v0, sink, sampling, on_step);
}

// Local slopes between consecutive ok cells that share the swept parameter line.
void fill_orders(const SweepSpec& spec, std::vector<CellResult>& cells) {
    const bool along_h = spec.coupling.kind == Coupling::independent;
    for (std::size_t k = 1; k < cells.size(); ++k) {
        const CellResult& a = cells[k - 1];
        CellResult& b = cells[k];
        if (a.status != CellStatus::ok || b.status != CellStatus::ok || !a.errors || !b.errors) continue;
        if (along_h && a.epsilon != b.epsilon) continue;
        const double xa = along_h ? a.h : a.epsilon;
        const double xb = along_h ? b.h : b.epsilon;
        if (a.errors->error_x > 0.0 && b.errors->error_x > 0.0)
            b.order_x = std::log(a.errors->error_x / b.errors->error_x) / std::log(xa / xb);
        if (a.errors->error_v > 0.0 && b.errors->error_v > 0.0)
            b.order_v = std::log(a.errors->error_v / b.errors->error_v) / std::log(xa / xb);
    }
}

}  // namespace

SweepResult convergence_sweep(const SweepSpec& spec) {
    validate_spec(spec);
    SweepResult result;
    result.spec = spec;
    result.cells = run_cells(spec, [&](double h, double eps) {
        const FieldModel model = problem_by_label(spec.problem, eps);
        SolverConfig cfg = cell_config(spec, h);
        validate_config(cfg);
        const std::int64_t steps = step_count(spec.t_end, h);
        check_budget(spec, steps);

        CellResult cell;
        cell.t_end = static_cast<double>(steps) * h;
        const ReferenceSolution ref =
            reference_solve(model, model.x0, model.v0, cell.t_end, spec.reference_tol);
        const PhaseState exact = ref.at(cell.t_end);

        PhaseState numeric = exact;
        if (spec.method != Method::reference) {
            const RunSummary run = run_method(spec.method, model, cfg, {}, {}, {});
            numeric = {run.final_x, run.final_v};
            cell.steps = run.steps;
            cell.nonconverged_steps = run.nonconverged_steps;
            cell.max_iterations = run.max_iterations;
        }
        cell.errors = relative_errors(model.b0, numeric.x, numeric.v, exact.x, exact.v);
        return cell;
    });
    fill_orders(spec, result.cells);
    return result;
}

SweepResult conservation_run(const SweepSpec& spec) {
    validate_spec(spec);
    if (spec.method == Method::reference)
        throw InvalidArgument("conservation_run: method must be fvi or boris");
    SweepResult result;
    result.spec = spec;
    result.cells = run_cells(spec, [&](double h, double eps) {
        const FieldModel model = problem_by_label(spec.problem, eps);
        const SolverConfig cfg = cell_config(spec, h);
        validate_config(cfg);
        const std::int64_t steps = step_count(spec.t_end, h);
        check_budget(spec, steps);

        CellResult cell;
        cell.t_end = static_cast<double>(steps) * h;
        if (steps == 0) return cell;

        DriftAccumulator acc_h(static_cast<std::size_t>(steps));
        DriftAccumulator acc_i(static_cast<std::size_t>(steps));
        std::optional<DriftAccumulator> acc_m;
        if (model.s_matrix) acc_m.emplace(static_cast<std::size_t>(steps));
        double h_ref = 0.0, i_ref = 0.0, m_ref = 0.0;

        auto on_step = [&](const TrajectoryRecord& rec) {
            const double hv = energy(model, rec.x_mid, rec.v_mid);
            const double iv = magnetic_moment(model, rec.x_mid, rec.v_mid);
            std::optional<double> mv;
            if (acc_m) mv = momentum(model, rec.x_mid, rec.v_mid);
            if (rec.step == 1) {
                h_ref = hv;
                i_ref = iv;
                m_ref = mv.value_or(0.0);
            }
            acc_h.add(hv);
            acc_i.add(iv);
            if (acc_m) acc_m->add(*mv);
            if (spec.sample_stride > 0 && Sampling{spec.sample_stride}.emit(rec.step, steps)) {
                TrajectorySample s;
                s.t = rec.t_mid;
                s.x = rec.x_mid;
                s.v = rec.v_mid;
                s.e_h = hv - h_ref;
                s.e_i = iv - i_ref;
                if (mv) s.e_m = *mv - m_ref;
                s.iterations = rec.diagnostics.iterations_used;
                cell.trajectory.push_back(s);
            }
        };
        const RunSummary run = run_method(spec.method, model, cfg, {}, {}, on_step);
        cell.steps = run.steps;
        cell.nonconverged_steps = run.nonconverged_steps;
        cell.max_iterations = run.max_iterations;

        DriftRecord drift;
        drift.energy = acc_h.stats();
        drift.magnetic_moment = acc_i.stats();
        if (acc_m) drift.momentum = acc_m->stats();
        cell.drift = drift;
        return cell;
    });
    return result;
}

}  // namespace fvi
