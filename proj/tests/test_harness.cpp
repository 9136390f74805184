#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fvi/errors.hpp"
#include "fvi/harness.hpp"

using namespace fvi;

namespace {

std::filesystem::path temp_csv(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("fvi_test_" + name + ".csv");
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

SweepSpec p1_spec(std::vector<double> h_grid) {
    SweepSpec s;
    s.problem = "p1";
    s.h_grid = std::move(h_grid);
    s.t_end = 1.0;
    return s;
}

}  // namespace

TEST_CASE("labels round trip") {
    for (Method m : {Method::fvi, Method::boris, Method::reference}) CHECK(parse_method(to_string(m)) == m);
    for (Coupling c : {Coupling::independent, Coupling::linear, Coupling::sqrt, Coupling::three_halves})
        CHECK(parse_coupling(to_string(c)) == c);
    CHECK_THROWS_AS(parse_method("euler"), InvalidArgument);
}

TEST_CASE("coupling rules and regimes") {
    CHECK(CouplingRule{Coupling::linear, 2.0}.step_for(0.01) == doctest::Approx(0.02));
    CHECK(CouplingRule{Coupling::sqrt, 1.0}.step_for(0.01) == doctest::Approx(0.1));
    CHECK(CouplingRule{Coupling::three_halves, 1.0}.step_for(0.01) == doctest::Approx(0.001));
    CHECK(classify_regime(0.1, 1e-4) == Regime::large_step);
    CHECK(classify_regime(0.02, 0.01) == Regime::intermediate);
    CHECK(classify_regime(1e-3, 0.01) == Regime::small_step);
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(validate_spec(p1_spec({})), InvalidArgument);
    CHECK_THROWS_AS(validate_spec(p1_spec({0.1, 0.2})), InvalidArgument);
    CHECK_THROWS_AS(validate_spec(p1_spec({0.1, -0.05})), InvalidArgument);
    SweepSpec bad = p1_spec({0.1});
    bad.problem = "p7";
    CHECK_THROWS_AS(validate_spec(bad), InvalidArgument);
    CHECK_NOTHROW(validate_spec(p1_spec({0.2, 0.1})));
}

TEST_CASE("cell order") {
    SweepSpec s = p1_spec({0.2, 0.1});
    s.problem = "p3";
    s.eps_grid = {0.1, 0.01};
    const auto cells = sweep_cells(s);
    REQUIRE(cells.size() == 4);
    CHECK(cells[0] == std::pair{0.2, 0.1});
    CHECK(cells[1] == std::pair{0.1, 0.1});
    CHECK(cells[2] == std::pair{0.2, 0.01});
    s.problem = "p1";
    CHECK(sweep_cells(s).size() == 2);
    s.problem = "p3";
    s.coupling = {Coupling::linear, 2.0};
    const auto coupled = sweep_cells(s);
    REQUIRE(coupled.size() == 2);
    CHECK(coupled[1].first == doctest::Approx(0.02));
}

TEST_CASE("slopes") {
    const std::vector<double> h{0.4, 0.2, 0.1};
    const std::vector<double> e{1.6, 0.4, 0.1};
    const auto p = observed_orders(h, e);
    REQUIRE(p.size() == 2);
    CHECK(p[0] == doctest::Approx(2.0));
    CHECK(loglog_slope(h, e) == doctest::Approx(2.0));
    const std::vector<double> x{8, 4, 2, 1};
    const std::vector<double> y{64, 8, 2, 1};
    CHECK(finest_half_slope(x, y) == doctest::Approx(1.0));
    CHECK_THROWS_AS(loglog_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), InvalidArgument);
}

TEST_CASE("reference against itself") {
    SweepSpec s = p1_spec({0.1});
    s.method = Method::reference;
    const SweepResult r = convergence_sweep(s);
    REQUIRE(r.cells.size() == 1);
    REQUIRE(r.cells[0].errors.has_value());
    CHECK(r.cells[0].errors->error_x == 0.0);
    CHECK(r.cells[0].errors->error_v == 0.0);
}

TEST_CASE("p1 convergence orders") {
    std::vector<double> grid;
    for (int k = 1; k <= 8; ++k) grid.push_back(std::ldexp(1.0, -k));
    const SweepResult r = convergence_sweep(p1_spec(grid));
    REQUIRE(r.cells.size() == 8);
    for (std::size_t k = 4; k < 8; ++k) {
        REQUIRE(r.cells[k].order_x.has_value());
        CHECK(*r.cells[k].order_x >= 1.7);
        CHECK(*r.cells[k].order_x <= 2.3);
        CHECK(*r.cells[k].order_v >= 1.7);
        CHECK(*r.cells[k].order_v <= 2.3);
    }
    CHECK_FALSE(r.cells[0].order_x.has_value());
}

TEST_CASE("conservation run") {
    SweepSpec s = p1_spec({0.1});
    s.t_end = 100.0;
    s.sample_stride = 100;
    const SweepResult r = conservation_run(s);
    REQUIRE(r.cells.size() == 1);
    const CellResult& c = r.cells[0];
    REQUIRE(c.drift.has_value());
    REQUIRE(c.drift->momentum.has_value());
    CHECK(c.steps == 1000);
    CHECK(c.drift->energy.samples == 1000);
    CHECK(c.drift->energy.last_decile_max <= 2.0 * c.drift->energy.first_decile_max);
    CHECK(c.trajectory.size() == 11);
    CHECK(c.trajectory.front().e_h == 0.0);

    s.t_end = 0.0;
    const SweepResult empty = conservation_run(s);
    CHECK_FALSE(empty.cells[0].drift.has_value());
    CHECK(empty.cells[0].trajectory.empty());

    s.method = Method::reference;
    CHECK_THROWS_AS(conservation_run(s), InvalidArgument);
}

TEST_CASE("cost guard marks cells skipped") {
    SweepSpec s = p1_spec({0.001});
    s.problem = "p3";
    s.eps_grid = {1e-4};
    s.t_end = 20.0;
    const SweepResult r = convergence_sweep(s);
    REQUIRE(r.cells.size() == 1);
    CHECK(r.cells[0].status == CellStatus::skipped);
    CHECK(r.cells[0].t_end == doctest::Approx(20.0));

    SweepSpec b = p1_spec({1e-6});
    b.step_budget = 1000;
    CHECK(convergence_sweep(b).cells[0].status == CellStatus::failed);
}

TEST_CASE("parallel sweeps are deterministic") {
    SweepSpec s = p1_spec({0.5, 0.25, 0.125, 0.0625});
    const SweepResult serial = convergence_sweep(s);
    s.parallelism = 4;
    const SweepResult parallel = convergence_sweep(s);
    REQUIRE(serial.cells.size() == parallel.cells.size());
    for (std::size_t k = 0; k < serial.cells.size(); ++k) {
        CHECK(serial.cells[k].h == parallel.cells[k].h);
        CHECK(serial.cells[k].errors->error_x == parallel.cells[k].errors->error_x);
        CHECK(serial.cells[k].errors->error_v == parallel.cells[k].errors->error_v);
    }
}

TEST_CASE("csv output") {
    SUBCASE("empty result is header only") {
        SweepResult r;
        r.spec = p1_spec({0.1});
        const auto p = temp_csv("empty");
        emit_csv(r, p, CsvKind::sweep);
        const auto rows = read_csv(p);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].size() == 11);
        std::filesystem::remove(p);
    }
    SUBCASE("sweep rows round trip") {
        const SweepResult r = convergence_sweep(p1_spec({0.2, 0.1}));
        const auto p = temp_csv("sweep");
        emit_csv(r, p, CsvKind::sweep);
        const auto rows = read_csv(p);
        REQUIRE(rows.size() == 3);
        CHECK(rows[0][0] == "problem");
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& row = rows[k + 1];
            REQUIRE(row.size() == 11);
            CHECK(row[0] == "p1");
            CHECK(row[1] == "fvi");
            CHECK(std::stod(row[2]) == r.cells[k].h);
            CHECK(std::stod(row[5]) == r.cells[k].errors->error_x);
            CHECK(row[10] == "0");
        }
        CHECK(rows[1][9].empty());
        CHECK(std::stod(rows[2][9]) == *r.cells[1].order_x);
        std::filesystem::remove(p);
    }
    SUBCASE("drift and trajectory schemas") {
        SweepSpec s = p1_spec({0.1});
        s.t_end = 2.0;
        s.sample_stride = 5;
        const SweepResult r = conservation_run(s);
        const auto p = temp_csv("drift");
        emit_csv(r, p, CsvKind::drift);
        auto rows = read_csv(p);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].size() == 10);
        CHECK(std::stod(rows[1][5]) == r.cells[0].drift->energy.max_abs);
        emit_csv(r, p, CsvKind::trajectory);
        rows = read_csv(p);
        CHECK(rows.size() == 1 + r.cells[0].trajectory.size());
        CHECK(rows[0].size() == 11);
        std::filesystem::remove(p);
    }
    CHECK_THROWS_AS(emit_csv(SweepResult{}, "/nonexistent-dir/x.csv", CsvKind::sweep), Error);
}

TEST_CASE("shortest round-trip formatting") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e-17}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(0.5) == "0.5");
}
