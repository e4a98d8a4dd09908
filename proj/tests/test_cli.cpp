// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ysg/cli.hpp"

using namespace ysg;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {
constexpr double kPi = 3.14159265358979323846;

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "ysg_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}
} // namespace

TEST_CASE("a minimal configuration parses with documented defaults", "[cli]") {
    const RunConfig rc = parse_config("# experiment\n"
                                      "\n"
                                      "command = spectrum   # trailing comments are stripped\n"
                                      "family=kink\n"
                                      "   lambda =  -4.0\n"
                                      "c = 1, 1, 1\n");
    REQUIRE(rc.command == "spectrum");
    REQUIRE(rc.family == "kink");
    REQUIRE(rc.graph.lambda == -4.0);
    REQUIRE(rc.graph.c[0] == 1.0);
    REQUIRE(rc.graph.c[2] == 1.0);
    REQUIRE(rc.L == 40.0);
    REQUIRE(rc.n == 4001);
    REQUIRE(rc.k == 8);
    REQUIRE_FALSE(rc.kernel_tol.has_value());
    REQUIRE_FALSE(rc.restricted);
    REQUIRE(rc.dt == 0.0);
    REQUIRE(rc.t_end == 0.0);
    REQUIRE(rc.record_every == 500);
    REQUIRE(rc.epsilon == 1e-6);
    REQUIRE(rc.initial == "family");
    REQUIRE(rc.pulse_amplitude == 1e-3);
    REQUIRE(rc.pulse_center == 10.0);
    REQUIRE(rc.pulse_width == 2.0);
    REQUIRE(rc.pulse_edge == 1);
    REQUIRE(rc.refine);
    REQUIRE(rc.out_dir == "out");
    REQUIRE_FALSE(rc.plot);
    REQUIRE(rc.jobs == 1);
    REQUIRE(rc.raw.at("lambda") == "-4.0");
}

TEST_CASE("configuration errors name the offending key", "[cli]") {
    const auto bad = [](const std::string& text) { return parse_config(text); };

    REQUIRE_THROWS_WITH(bad(""), ContainsSubstring("missing required key 'command'"));
    REQUIRE_THROWS_WITH(bad("command = fit\nfamily = kink\nlambda = -4\n"),
                        ContainsSubstring("key 'command': unknown command 'fit'"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nlambda = -4\n"),
                        ContainsSubstring("missing required key 'family'"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = quark\nlambda = -4\n"),
                        ContainsSubstring("must be kink, antikink or free"));
    REQUIRE_THROWS_WITH(bad("command = profile\nfamily = free\nlambda = -4\n"),
                        ContainsSubstring("needs a kink or antikink family"));
    REQUIRE_THROWS_WITH(bad("command = sweep\nfamily = free\nlambda = -4\n"),
                        ContainsSubstring("sweep runs take 'lambdas'"));
    REQUIRE_THROWS_WITH(bad("command = sweep\nfamily = free\n"),
                        ContainsSubstring("missing required key 'lambdas'"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = free\nlambdas = -4,-5\n"),
                        ContainsSubstring("only sweep runs take a lambda list"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = free\n"),
                        ContainsSubstring("missing required key 'lambda'"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = free\nlambda = -4\nL = abc\n"),
                        ContainsSubstring("key 'L': expected a number, got 'abc'"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = free\nlambda = -4\nn = 2.5\n"),
                        ContainsSubstring("key 'n': expected an integer, got '2.5'"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = free\nlambda = -4\nrestricted = maybe\n"),
                        ContainsSubstring("key 'restricted': expected true/false, got 'maybe'"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = free\nlambda = -4\nc = 1,2\n"),
                        ContainsSubstring("key 'c': expected exactly 3 edge speeds"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = free\nlambda = -4\nlambda = -5\n"),
                        ContainsSubstring("duplicate configuration key 'lambda'"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = free\nlambda = -4\ncolour = red\n"),
                        ContainsSubstring("unknown configuration key 'colour'"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = free\nlambda = -4\nkernel_tol = 0\n"),
                        ContainsSubstring("key 'kernel_tol': must be positive"));
    REQUIRE_THROWS_WITH(bad("command = evolve\nfamily = free\nlambda = 2\ninitial = soliton\n"),
                        ContainsSubstring("key 'initial': must be family or pulse"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = free\nlambda = -4\nk = 0\n"),
                        ContainsSubstring("key 'k': must be >= 1"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = free\nlambda = -4\nrecord_every = 0\n"),
                        ContainsSubstring("key 'record_every': must be >= 1"));
    REQUIRE_THROWS_WITH(
        bad("command = spectrum\nfamily = free\nlambda = -4\nc = 1,2,1\nrestricted = true\n"),
        ContainsSubstring("requires equal"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = kink\nlambda = -3\n"),
                        ContainsSubstring("lambda must be < -(c1+c2+c3)"));
    REQUIRE_THROWS_WITH(bad("command = evolve\nfamily = free\nlambda = 2\ndt = 0.05\n"),
                        ContainsSubstring("key 'dt': CFL number exceeds 0.9"));
    REQUIRE_THROWS_WITH(
        bad("command = evolve\nfamily = free\nlambda = 2\ninitial = pulse\npulse_edge = 4\n"),
        ContainsSubstring("key 'pulse_edge': must be 1, 2 or 3"));
    REQUIRE_THROWS_WITH(
        bad("command = evolve\nfamily = free\nlambda = 2\ninitial = pulse\npulse_width = 0\n"),
        ContainsSubstring("key 'pulse_width': must be positive"));
    REQUIRE_THROWS_WITH(bad("command = instability\nfamily = kink\nlambda = -4\nepsilon = 1e-2\n"),
                        ContainsSubstring("seed amplitude must lie in [1e-7, 1e-4]"));
    REQUIRE_THROWS_WITH(bad("command = instability\nfamily = kink\nlambda = -4\nL = 8\nn = 801\n"),
                        ContainsSubstring("too short for a rate experiment"));
    REQUIRE_THROWS_WITH(bad("command = instability\nfamily = kink\nlambda = -4\nt_end = 31\n"),
                        ContainsSubstring("rate experiments need t_end <="));
    REQUIRE_THROWS_WITH(bad("command spectrum\n"),
                        ContainsSubstring("config line 1: expected 'key = value'"));
    REQUIRE_THROWS_WITH(bad("= 3\n"), ContainsSubstring("config line 1: empty key"));
    REQUIRE_THROWS_WITH(bad("command = spectrum\nfamily = free\nlambda = -4\nc = 1,-1,1\n"),
                        ContainsSubstring("edge speed c2 must be strictly positive"));
    REQUIRE_THROWS_AS(bad("command = spectrum\nfamily = free\nlambda = -4\nn = 1\n"),
                      config_error);
}

TEST_CASE("a profile run writes the sampled family to CSV", "[cli]") {
    const fs::path dir = fresh_dir("profile");
    RunConfig rc = parse_config("command = profile\n"
                                "family = antikink\n"
                                "lambda = -1.5707963267948966\n"
                                "L = 40\n"
                                "n = 401\n");
    rc.out_dir = dir.string();
    const auto files = run(rc);
    REQUIRE(files == std::vector<std::string>{"profile.csv", "manifest.json"});

    const auto rows = read_csv(dir / "profile.csv");
    REQUIRE(rows.size() == 1 + 3 * 401);
    REQUIRE(rows[0] == std::vector<std::string>{"edge_index", "x", "value"});

    // edge 1 starts at pi (the shift vanishes at this coupling) and tends to
    // 2 pi; edges 2 and 3 coincide, start at -pi, and decay to 0.
    const auto cell = [&rows](std::size_t r, std::size_t c) { return std::stod(rows[r][c]); };
    REQUIRE(cell(1, 0) == 1.0);
    REQUIRE(cell(1, 1) == 0.0);
    REQUIRE(cell(1, 2) == Approx(kPi).margin(1e-10));
    REQUIRE(cell(401, 2) == Approx(2.0 * kPi).margin(1e-6));
    REQUIRE(cell(402, 2) == Approx(-kPi).margin(1e-10));
    REQUIRE(cell(2 * 401, 2) == Approx(0.0).margin(1e-6));
    REQUIRE(rows[2 * 401][2] == rows[3 * 401][2]);
}

TEST_CASE("a spectrum run reports the free-operator ground state", "[cli]") {
    const fs::path dir = fresh_dir("spectrum");
    // The explicit kernel_tol keeps the discretized continuum edge (a
    // degenerate pair near (pi/2L)^2 = 1.5e-3) out of the kernel count.
    RunConfig rc = parse_config("command = spectrum\n"
                                "family = free\n"
                                "lambda = -3\n"
                                "n = 2001\n"
                                "k = 3\n"
                                "kernel_tol = 1e-4\n");
    rc.out_dir = dir.string();
    const auto files = run(rc);
    REQUIRE(files.back() == "manifest.json");

    const auto rows = read_csv(dir / "spectrum.csv");
    REQUIRE(rows[0] ==
            std::vector<std::string>{"lambda", "c1", "c2", "c3", "family", "eigen_index",
                                     "eigenvalue", "morse_index", "kernel_dim", "mu_plus"});
    REQUIRE(rows.size() == 1 + 3);
    REQUIRE(rows[1][4] == "free");
    REQUIRE(std::stod(rows[1][0]) == -3.0);
    REQUIRE(std::stoi(rows[1][5]) == 0);
    REQUIRE(std::stod(rows[1][6]) == Approx(-1.0).margin(5e-5));
    REQUIRE(std::stoi(rows[1][7]) == 1);  // Morse index
    REQUIRE(std::stoi(rows[1][8]) == 0);  // kernel dimension
    REQUIRE(std::stod(rows[1][9]) == Approx(1.0).margin(1e-4));
    REQUIRE(std::stod(rows[2][6]) > 0.0);
}

TEST_CASE("identical configurations produce byte-identical data files", "[cli]") {
    const std::string text = "command = spectrum\nfamily = free\nlambda = -3\nn = 1001\nk = 2\n";
    const fs::path a = fresh_dir("determinism_a");
    const fs::path b = fresh_dir("determinism_b");
    for (const fs::path& dir : {a, b}) {
        RunConfig rc = parse_config(text);
        rc.out_dir = dir.string();
        run(rc);
    }
    REQUIRE(slurp(a / "spectrum.csv") == slurp(b / "spectrum.csv"));

    const auto ja = nlohmann::json::parse(slurp(a / "manifest.json"));
    const auto jb = nlohmann::json::parse(slurp(b / "manifest.json"));
    REQUIRE(ja["tool_version"] == "1.0.0");
    REQUIRE(ja["command"] == "spectrum");
    REQUIRE(ja["config"]["n"] == "1001");
    REQUIRE(ja["wall_clock_seconds"].get<double>() >= 0.0);
    REQUIRE(ja["files"].size() == 1);
    REQUIRE(ja["files"][0]["name"] == "spectrum.csv");
    REQUIRE(ja["files"][0]["sha256"] == jb["files"][0]["sha256"]);
    REQUIRE(ja["files"][0]["sha256"].get<std::string>() == sha256_file(a / "spectrum.csv"));
    REQUIRE(ja["files"][0]["bytes"].get<std::uint64_t>() ==
            fs::file_size(a / "spectrum.csv"));
}

TEST_CASE("sweep output does not depend on the worker count", "[cli]") {
    const std::string text =
        "command = sweep\nfamily = free\nlambdas = -3, -4.5, -6\nn = 1001\nk = 2\n";
    const fs::path serial = fresh_dir("sweep_serial");
    const fs::path parallel = fresh_dir("sweep_parallel");

    RunConfig rc1 = parse_config(text);
    rc1.out_dir = serial.string();
    rc1.jobs = 1;
    run(rc1);
    RunConfig rc3 = parse_config(text);
    rc3.out_dir = parallel.string();
    rc3.jobs = 3;
    run(rc3);

    REQUIRE(slurp(serial / "sweep.csv") == slurp(parallel / "sweep.csv"));

    // Rows keep the order of the requested list, two per coupling, and the
    // ground states track -9 / (c lambda)^2 scaled into each well.
    const auto rows = read_csv(serial / "sweep.csv");
    REQUIRE(rows.size() == 1 + 6);
    REQUIRE(std::stod(rows[1][0]) == -3.0);
    REQUIRE(std::stod(rows[3][0]) == -4.5);
    REQUIRE(std::stod(rows[5][0]) == -6.0);
    REQUIRE(std::stod(rows[1][6]) == Approx(-1.0).margin(2e-4));
    REQUIRE(std::stod(rows[3][6]) == Approx(-4.0 / 9.0).margin(2e-4));
    REQUIRE(std::stod(rows[5][6]) == Approx(-0.25).margin(2e-4));
}

TEST_CASE("an evolve run records snapshots, energy and norms", "[cli]") {
    const fs::path dir = fresh_dir("evolve");
    RunConfig rc = parse_config("command = evolve\n"
                                "family = free\n"
                                "lambda = 2\n"
                                "L = 20\n"
                                "n = 501\n"
                                "t_end = 2\n"
                                "record_every = 50\n"
                                "initial = pulse\n"
                                "pulse_amplitude = 1e-3\n"
                                "pulse_center = 10\n");
    rc.out_dir = dir.string();
    const auto files = run(rc);
    REQUIRE(files == std::vector<std::string>{"snapshots.csv", "energy.csv", "norms.csv",
                                              "manifest.json"});

    const auto energy_rows = read_csv(dir / "energy.csv");
    REQUIRE(energy_rows[0] == std::vector<std::string>{"time", "energy", "vertex_term",
                                                       "boundary_flux_estimate"});
    REQUIRE(energy_rows.size() >= 3);
    const double e0 = std::stod(energy_rows[1][1]);
    const double e_last = std::stod(energy_rows.back()[1]);
    const double t_last = std::stod(energy_rows.back()[0]);
    REQUIRE(e0 > 0.0);
    REQUIRE(std::abs(e_last - e0) <= 1e-3 * e0);
    REQUIRE(t_last == Approx(2.0).margin(0.02));

    const auto norm_rows = read_csv(dir / "norms.csv");
    REQUIRE(norm_rows[0] == std::vector<std::string>{"time", "deviation"});
    REQUIRE(std::stod(norm_rows[1][1]) > 0.0); // free run measures against zero

    const auto snap_rows = read_csv(dir / "snapshots.csv");
    REQUIRE(snap_rows[0] == std::vector<std::string>{"time", "edge", "x", "u", "v"});
    REQUIRE((snap_rows.size() - 1) % (3 * 501) == 0);
    REQUIRE(snap_rows.size() >= 1 + 2 * 3 * 501);
}

TEST_CASE("an instability run cross-checks the spectral rate", "[cli]") {
    const fs::path dir = fresh_dir("instability");
    RunConfig rc = parse_config("command = instability\n"
                                "family = kink\n"
                                "lambda = -4\n"
                                "L = 40\n"
                                "n = 1001\n"
                                "k = 2\n");
    rc.out_dir = dir.string();
    const auto files = run(rc);
    REQUIRE(std::find(files.begin(), files.end(), "rate.csv") != files.end());
    REQUIRE(std::find(files.begin(), files.end(), "norms.csv") != files.end());

    const auto rows = read_csv(dir / "rate.csv");
    REQUIRE(rows[0] == std::vector<std::string>{"lambda", "nu0", "mu_spectral",
                                                "sigma_measured", "rel_err", "r_squared"});
    REQUIRE(rows.size() == 2);
    const double nu0 = std::stod(rows[1][1]);
    const double mu = std::stod(rows[1][2]);
    const double sigma = std::stod(rows[1][3]);
    const double rel_err = std::stod(rows[1][4]);
    const double r2 = std::stod(rows[1][5]);
    REQUIRE(nu0 == Approx(-0.739).margin(2e-3));
    REQUIRE(mu == Approx(0.8597).margin(2e-3));
    REQUIRE(std::abs(sigma - mu) <= 0.05 * mu);
    REQUIRE(rel_err <= 0.05);
    REQUIRE(r2 >= 0.999);
}

TEST_CASE("plots are well-formed SVG documents", "[cli]") {
    const fs::path dir = fresh_dir("plot");
    RunConfig rc = parse_config("command = profile\n"
                                "family = kink\n"
                                "lambda = -6\n"
                                "n = 401\n");
    rc.out_dir = dir.string();
    rc.plot = true;
    const auto files = run(rc);
    REQUIRE(std::find(files.begin(), files.end(), "profile.svg") != files.end());

    const std::string svg = slurp(dir / "profile.svg");
    REQUIRE_THAT(svg, ContainsSubstring("<svg"));
    REQUIRE_THAT(svg, ContainsSubstring("</svg>"));
    REQUIRE_THAT(svg, ContainsSubstring("<polyline"));
    REQUIRE_THAT(svg, ContainsSubstring("width=\"800\""));
    REQUIRE_THAT(svg, ContainsSubstring("height=\"500\""));
}

TEST_CASE("CSV cells round-trip doubles exactly", "[cli]") {
    for (double v : {3.14159265358979323846, 1.0 / 3.0, 6.02214076e23, -1e-300, 0.0, -0.1,
                     0.8596814365371229}) {
        REQUIRE(std::stod(fmt17(v)) == v);
    }
    REQUIRE(fmt17(0.0) == "0");
    REQUIRE(fmt17(2.0) == "2");
}
