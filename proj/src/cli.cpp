#include "fvi/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "fvi/errors.hpp"
#include "fvi/filters.hpp"
#include "fvi/harness.hpp"

namespace fvi {

namespace {

struct Flags {
    std::string problem = "p1";
    std::string method = "fvi";
    std::optional<double> h;
    std::optional<double> eps;
    std::vector<double> h_grid;
    std::vector<double> eps_grid;
    std::string coupling;
    double alpha = 2.0;
    std::optional<double> t_end;
    std::string out;
    std::string trajectory;
    std::int64_t stride = 0;
    std::string profile = "desk";
    bool strict = false;
    int parallelism = 1;
    double tol = 1e-12;
    double fp_tol = 1e-16;
    int fp_max_iter = 50;
    int n_max = 5;
    double c = 0.1;
};

bool full_profile(const Flags& f) { return f.profile == "full"; }
bool strong_field(const std::string& problem) { return problem == "p3" || problem == "p4"; }

std::vector<double> dyadic(double scale, int k_first, int k_last) {
    std::vector<double> g;
    for (int k = k_first; k <= k_last; ++k) g.push_back(scale * std::ldexp(1.0, -k));
    return g;
}

void add_problem_options(CLI::App* sub, Flags& f) {
    sub->add_option("--problem", f.problem, "Built-in problem")
        ->check(CLI::IsMember({"p1", "p2", "p3", "p4"}))
        ->capture_default_str();
    sub->add_option("--method", f.method, "Integrator")
        ->check(CLI::IsMember({"fvi", "boris", "reference"}))
        ->capture_default_str();
    sub->add_option("--t-end", f.t_end, "Final time")->check(CLI::PositiveNumber);
    sub->add_option("--profile", f.profile, "Default grid size")
        ->check(CLI::IsMember({"desk", "full"}))
        ->capture_default_str();
    sub->add_flag("--strict", f.strict, "Fail on fixed-point non-convergence");
    sub->add_option("--parallelism", f.parallelism, "Worker threads for sweep cells")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--fp-tol", f.fp_tol, "Fixed-point increment tolerance")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--fp-max-iter", f.fp_max_iter, "Fixed-point iteration cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_config(CLI::App* sub, std::string& path) {
    sub->add_option("--config", path, "key=value defaults file, '#' comments; flags override");
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool given(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.starts_with(flag + "="); });
}

/// Appends `--key value` for every config entry whose flag is absent from `args`.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].starts_with("--config=")) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw Error("cannot read config file '" + path + "'");

    std::vector<std::string> extra;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::ConversionError(path + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string flag = "--" + key;
        if (key == "config" || given(args, flag)) continue;
        if (key == "strict") {
            if (value == "true" || value == "1") extra.push_back(flag);
            continue;
        }
        extra.push_back(flag);
        extra.push_back(value);
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

SweepSpec base_spec(const Flags& f) {
    SweepSpec spec;
    spec.problem = f.problem;
    spec.method = parse_method(f.method);
    spec.reference_tol = f.tol;
    spec.parallelism = f.parallelism;
    spec.solver.fp_tol = f.fp_tol;
    spec.solver.fp_max_iter = f.fp_max_iter;
    spec.solver.strict = f.strict;
    return spec;
}

std::string join(const std::vector<double>& xs) {
    std::string s = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ", ";
        std::ostringstream os;
        os.precision(3);
        os << xs[i];
        s += os.str();
    }
    return s + "]";
}

void warn_resonance(const SweepResult& result, const Flags& f, std::ostream& err) {
    if (result.spec.method != Method::fvi || !strong_field(f.problem)) return;
    for (const auto& cell : result.cells) {
        const auto v = check_resonance(cell.h, cell.epsilon, f.n_max, f.c);
        if (v.empty()) continue;
        err << "warning: h=" << cell.h << " eps=" << cell.epsilon << ": near-resonant for k =";
        for (const auto& r : v) err << ' ' << r.k;
        err << " (c=" << f.c << ")\n";
    }
}

struct Tally {
    std::int64_t nonconverged = 0;
    int skipped = 0;
    int failed = 0;
};

Tally tally(const SweepResult& result, std::ostream& err) {
    Tally t;
    for (const auto& cell : result.cells) {
        t.nonconverged += cell.nonconverged_steps;
        if (cell.status == CellStatus::skipped) {
            ++t.skipped;
            err << "skipped: h=" << cell.h << " eps=" << cell.epsilon << ": " << cell.message << '\n';
        } else if (cell.status == CellStatus::failed) {
            ++t.failed;
            err << "failed: h=" << cell.h << " eps=" << cell.epsilon << ": " << cell.message << '\n';
        }
    }
    return t;
}

void print_tally(std::ostream& out, const Tally& t) {
    out << " nonconverged_steps=" << t.nonconverged;
    if (t.skipped) out << " skipped=" << t.skipped;
    if (t.failed) out << " failed=" << t.failed;
    out << '\n';
}

int status_of(const Tally& t, const Flags& f) {
    if (t.failed) return 1;
    if (f.strict && t.nonconverged) return 1;
    return 0;
}

int do_converge(const Flags& f, std::ostream& out, std::ostream& err) {
    SweepSpec spec = base_spec(f);
    const bool strong = strong_field(f.problem);
    spec.coupling.kind = f.coupling.empty()
                             ? (strong ? Coupling::linear : Coupling::independent)
                             : parse_coupling(f.coupling);
    spec.coupling.alpha = f.alpha;
    spec.t_end = f.t_end.value_or(strong ? std::numbers::pi / 2 : 1.0);
    spec.h_grid = !f.h_grid.empty() ? f.h_grid : f.h ? std::vector<double>{*f.h} : dyadic(1.0, 1, full_profile(f) ? 10 : 8);
    if (strong)
        spec.eps_grid = !f.eps_grid.empty() ? f.eps_grid
                        : f.eps             ? std::vector<double>{*f.eps}
                                            : dyadic(std::numbers::pi, 6, full_profile(f) ? 13 : 11);
    const SweepResult result = convergence_sweep(spec);
    emit_csv(result, f.out, CsvKind::sweep);
    warn_resonance(result, f, err);
    const Tally t = tally(result, err);

    std::vector<double> orders;
    for (const auto& cell : result.cells)
        if (cell.order_x) orders.push_back(*cell.order_x);
    out << "converge " << f.problem << ' ' << f.method << ": cells=" << result.cells.size()
        << " order_x=" << join(orders);
    print_tally(out, t);
    return status_of(t, f);
}

SweepSpec conserve_spec(const Flags& f, double default_t_end) {
    SweepSpec spec = base_spec(f);
    if (spec.method == Method::reference)
        throw InvalidArgument("method 'reference' is only available for converge");
    spec.t_end = f.t_end.value_or(default_t_end);
    spec.h_grid = !f.h_grid.empty() ? f.h_grid : std::vector<double>{f.h.value_or(0.01)};
    spec.eps_grid = !f.eps_grid.empty() ? f.eps_grid : std::vector<double>{f.eps.value_or(1e-4)};
    return spec;
}

int do_conserve(const Flags& f, std::ostream& out, std::ostream& err) {
    SweepSpec spec = conserve_spec(f, full_profile(f) ? 10000.0 : 1000.0);
    if (!f.trajectory.empty()) spec.sample_stride = f.stride > 0 ? f.stride : 100;
    const SweepResult result = conservation_run(spec);
    emit_csv(result, f.out, CsvKind::drift);
    if (!f.trajectory.empty()) emit_csv(result, f.trajectory, CsvKind::trajectory);
    warn_resonance(result, f, err);
    const Tally t = tally(result, err);

    out << "conserve " << f.problem << ' ' << f.method << ':';
    for (const auto& cell : result.cells) {
        if (!cell.drift) continue;
        out << " [h=" << cell.h << " eps=" << cell.epsilon << " max_eH=" << cell.drift->energy.max_abs;
        if (cell.drift->momentum) out << " max_eM=" << cell.drift->momentum->max_abs;
        out << " max_eI=" << cell.drift->magnetic_moment.max_abs << ']';
    }
    print_tally(out, t);
    return status_of(t, f);
}

int do_run(const Flags& f, std::ostream& out, std::ostream& err) {
    const FieldModel defaults = problem_by_label(f.problem, f.eps.value_or(1e-4));
    SweepSpec spec = conserve_spec(f, defaults.t_end);
    spec.h_grid = {f.h.value_or(0.01)};
    spec.eps_grid = {f.eps.value_or(1e-4)};
    spec.sample_stride = f.stride > 0 ? f.stride : 1;
    const SweepResult result = conservation_run(spec);
    emit_csv(result, f.out, CsvKind::trajectory);
    warn_resonance(result, f, err);
    const Tally t = tally(result, err);

    out << "run " << f.problem << ' ' << f.method << ':';
    if (!result.cells.empty()) {
        const CellResult& cell = result.cells.front();
        out << " steps=" << cell.steps << " t=" << cell.t_end;
        if (cell.drift) {
            out << " max_eH=" << cell.drift->energy.max_abs;
            if (cell.drift->momentum) out << " max_eM=" << cell.drift->momentum->max_abs;
            out << " max_eI=" << cell.drift->magnetic_moment.max_abs;
        }
    }
    print_tally(out, t);
    return status_of(t, f);
}

int do_check(const Flags& f, std::ostream& out) {
    const double h = *f.h;
    const double eps = *f.eps;
    const auto violations = check_resonance(h, eps, f.n_max, f.c);
    out << "check h=" << h << " eps=" << eps << " h/2eps=" << h / (2.0 * eps)
        << " regime=" << to_string(classify_regime(h, eps)) << " violations=" << violations.size() << '\n';
    for (const auto& v : violations)
        out << "  k=" << v.k << " |sin|=" << std::fabs(v.sin_value) << " |cos|=" << std::fabs(v.cos_value)
            << " (c=" << f.c << ")\n";
    return 0;
}

}  // namespace

int parse_and_dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Filtered variational integrator for charged-particle dynamics", "fvi"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    Flags f;
    std::string config_path;

    auto* run = app.add_subcommand("run", "Integrate one trajectory and write its samples");
    auto* converge = app.add_subcommand("converge", "Error sweep against the reference solver");
    auto* conserve = app.add_subcommand("conserve", "Long-time drift of H, M and I");
    auto* check = app.add_subcommand("check", "Report near-resonant step sizes");

    for (auto* sub : {run, converge, conserve}) {
        add_config(sub, config_path);
        add_problem_options(sub, f);
        sub->add_option("--out", f.out, "CSV output path")->required();
        sub->add_option("--h", f.h, "Step size")->check(CLI::PositiveNumber);
        sub->add_option("--eps", f.eps, "Field scale (ignored for p1, p2)")->check(CLI::PositiveNumber);
        sub->add_option("--n-max", f.n_max, "Resonance warning depth")->check(CLI::PositiveNumber);
        sub->add_option("--c", f.c, "Resonance warning threshold")->check(CLI::PositiveNumber);
    }
    for (auto* sub : {converge, conserve}) {
        sub->add_option("--h-grid", f.h_grid, "Descending step sizes")
            ->delimiter(',')
            ->check(CLI::PositiveNumber);
        sub->add_option("--eps-grid", f.eps_grid, "Descending eps values")
            ->delimiter(',')
            ->check(CLI::PositiveNumber);
    }
    converge->add_option("--coupling", f.coupling, "h-eps coupling")
        ->check(CLI::IsMember({"independent", "linear", "sqrt", "three-halves"}));
    converge->add_option("--alpha", f.alpha, "Coupling constant")->check(CLI::PositiveNumber)->capture_default_str();
    converge->add_option("--tol", f.tol, "Reference solver tolerance")
        ->check(CLI::Range(1e-13, 1e-3))
        ->capture_default_str();
    for (auto* sub : {run, conserve}) {
        sub->add_option("--stride", f.stride, "Keep every stride-th step")->check(CLI::PositiveNumber);
    }
    conserve->add_option("--trajectory", f.trajectory, "Also write thinned samples here");

    add_config(check, config_path);
    check->add_option("--h", f.h, "Step size")->required()->check(CLI::PositiveNumber);
    check->add_option("--eps", f.eps, "Field scale")->required()->check(CLI::PositiveNumber);
    check->add_option("--n-max", f.n_max, "Largest multiple k")->check(CLI::PositiveNumber)->capture_default_str();
    check->add_option("--c", f.c, "Threshold on |sin| and |cos|")->check(CLI::PositiveNumber)->capture_default_str();

    std::vector<std::string> expanded;
    try {
        expanded = expand_config(std::vector<std::string>(args.begin(), args.end()));
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    try {
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        return 2;
    }
    if (f.out.empty() && !check->parsed()) {
        err << "error: --out must be nonempty\n";
        return 2;
    }

    try {
        if (check->parsed()) return do_check(f, out);
        if (converge->parsed()) return do_converge(f, out, err);
        if (conserve->parsed()) return do_conserve(f, out, err);
        return do_run(f, out, err);
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace fvi
