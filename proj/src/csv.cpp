#include <charconv>
#include <fstream>
#include <optional>
#include <system_error>

#include "fvi/errors.hpp"
#include "fvi/harness.hpp"

namespace fvi {

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string_view csv_header(CsvKind kind) {
    switch (kind) {
        case CsvKind::sweep:
            return "problem,method,h,eps,t_end,error_x,error_v,error_vpar,error_vperp,order_x,skipped";
        case CsvKind::trajectory: return "t,x1,x2,x3,v1,v2,v3,e_H,e_M,e_I,iters";
        case CsvKind::drift:
            return "problem,method,h,eps,t_end,max_eH,max_eM,max_eI,first_decile_eH,last_decile_eH";
    }
    return "";
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

int status_code(CellStatus s) {
    switch (s) {
        case CellStatus::ok: return 0;
        case CellStatus::skipped: return 1;
        case CellStatus::failed: return 2;
    }
    return 2;
}

void write_rows(std::ostream& os, const SweepResult& result, CsvKind kind) {
    const auto& spec = result.spec;
    const std::string prefix = spec.problem + "," + std::string(to_string(spec.method)) + ",";
    for (const CellResult& c : result.cells) {
        switch (kind) {
            case CsvKind::sweep: {
                os << prefix << format_double(c.h) << ',' << format_double(c.epsilon) << ','
                   << format_double(c.t_end) << ',';
                if (c.errors) {
                    os << format_double(c.errors->error_x) << ',' << format_double(c.errors->error_v) << ','
                       << format_double(c.errors->error_vpar) << ',' << format_double(c.errors->error_vperp);
                } else {
                    os << ",,,";
                }
                os << ',' << opt(c.order_x) << ',' << status_code(c.status) << '\n';
                break;
            }
            case CsvKind::trajectory: {
                for (const TrajectorySample& s : c.trajectory) {
                    os << format_double(s.t) << ',' << format_double(s.x.x) << ',' << format_double(s.x.y) << ','
                       << format_double(s.x.z) << ',' << format_double(s.v.x) << ',' << format_double(s.v.y)
                       << ',' << format_double(s.v.z) << ',' << format_double(s.e_h) << ',' << opt(s.e_m)
                       << ',' << format_double(s.e_i) << ',' << s.iterations << '\n';
                }
                break;
            }
            case CsvKind::drift: {
                if (!c.drift) continue;
                const DriftRecord& d = *c.drift;
                std::optional<double> max_m;
                if (d.momentum) max_m = d.momentum->max_abs;
                os << prefix << format_double(c.h) << ',' << format_double(c.epsilon) << ','
                   << format_double(c.t_end) << ',' << format_double(d.energy.max_abs) << ',' << opt(max_m)
                   << ',' << format_double(d.magnetic_moment.max_abs) << ','
                   << format_double(d.energy.first_decile_max) << ','
                   << format_double(d.energy.last_decile_max) << '\n';
                break;
            }
        }
    }
}

}  // namespace

void emit_csv(const SweepResult& result, const std::filesystem::path& path, CsvKind kind) {
    std::ofstream os(path, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    os << csv_header(kind) << '\n';
    write_rows(os, result, kind);
    os.flush();
    if (!os) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace fvi
