#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fvi/cli.hpp"

namespace {

struct Outcome {
    int status;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int status = fvi::parse_and_dispatch(args, out, err);
    return {status, out.str(), err.str()};
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("fvi_cli_" + name);
}

std::vector<std::string> lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> v;
    for (std::string s; std::getline(in, s);) v.push_back(s);
    return v;
}

}  // namespace

TEST_CASE("converge writes eight levels for problem 1") {
    const auto p = temp_path("converge.csv");
    const Outcome o = invoke({"converge", "--problem", "p1", "--method", "fvi", "--t-end", "1", "--out", p.string()});
    CHECK(o.status == 0);
    CHECK(o.out.find("order_x=") != std::string::npos);
    CHECK(o.out.find("nonconverged_steps=0") != std::string::npos);
    const auto rows = lines(p);
    CHECK(rows.size() == 9);
    std::filesystem::remove(p);
}

TEST_CASE("check reports a violation near a multiple of pi") {
    const Outcome o = invoke({"check", "--h", "0.314159", "--eps", "0.05"});
    CHECK(o.status == 0);
    CHECK(o.out.find("violations=5") != std::string::npos);
    CHECK(o.out.find("k=1 ") != std::string::npos);
    const Outcome clean = invoke({"check", "--h", "1.5707963267948966", "--eps", "1", "--n-max", "1"});
    CHECK(clean.out.find("violations=0") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
    CHECK(invoke({"converge", "--problem", "p1"}).status == 2);
    CHECK(invoke({}).status == 2);
    CHECK(invoke({"converge", "--problem", "p9", "--out", "x.csv"}).status == 2);
    CHECK(invoke({"run", "--h", "-0.1", "--out", "x.csv"}).status == 2);
    CHECK(invoke({"run", "--out", ""}).status == 2);
    CHECK(invoke({"conserve", "--method", "reference", "--out", "x.csv"}).status == 2);
    CHECK(invoke({"frobnicate"}).status == 2);
    CHECK(invoke({"--help"}).status == 0);
}

TEST_CASE("runtime failures exit with 1") {
    CHECK(invoke({"run", "--t-end", "0.1", "--out", "/nonexistent-dir/x.csv"}).status == 1);
    CHECK(invoke({"run", "--config", "/nonexistent-dir/cfg", "--out", "x.csv"}).status == 1);
}

TEST_CASE("strict mode turns non-convergence into failure") {
    const auto p = temp_path("strict.csv");
    const std::vector<std::string> base{"run", "--problem", "p3", "--eps", "0.01", "--h", "0.1",
                                        "--t-end", "1", "--fp-max-iter", "1", "--out", p.string()};
    const Outcome lax = invoke(base);
    CHECK(lax.status == 0);
    CHECK(lax.out.find("nonconverged_steps=0") == std::string::npos);
    auto strict = base;
    strict.push_back("--strict");
    CHECK(invoke(strict).status == 1);
    std::filesystem::remove(p);
}

TEST_CASE("config file supplies defaults and flags override") {
    const auto cfg = temp_path("cfg.txt");
    const auto out = temp_path("cfg.csv");
    {
        std::ofstream f(cfg);
        f << "# defaults\nproblem = p2\nh=0.05\n\nt-end=2  # short\nout=" << out.string() << "\n";
    }
    Outcome o = invoke({"conserve", "--config", cfg.string()});
    CHECK(o.status == 0);
    auto rows = lines(out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].rfind("p2,fvi,0.05,1,2,", 0) == 0);

    o = invoke({"conserve", "--config", cfg.string(), "--h", "0.1", "--problem", "p1"});
    CHECK(o.status == 0);
    rows = lines(out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].rfind("p1,fvi,0.1,1,2,", 0) == 0);
    std::filesystem::remove(cfg);
    std::filesystem::remove(out);
}

TEST_CASE("run writes a parseable trajectory") {
    const auto p = temp_path("run.csv");
    const Outcome o = invoke({"run", "--problem", "p1", "--h", "0.1", "--t-end", "1", "--out", p.string()});
    CHECK(o.status == 0);
    const auto rows = lines(p);
    REQUIRE(rows.size() == 11);
    CHECK(rows[0] == "t,x1,x2,x3,v1,v2,v3,e_H,e_M,e_I,iters");
    std::filesystem::remove(p);
}
