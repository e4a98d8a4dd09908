// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Command-line front end: flat key=value configuration files, validated
/// defaults, and the run pipelines (profile, spectrum, evolve, instability,
/// sweep) that emit deterministic CSVs, optional SVG plots, and a JSON
/// manifest per run.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ysg/dynamics.hpp"
#include "ysg/errors.hpp"
#include "ysg/graph.hpp"
#include "ysg/output.hpp"
#include "ysg/profiles.hpp"
#include "ysg/spectral.hpp"

namespace ysg {

/// All run parameters (file keys plus command-line flags).
struct RunConfig {
    std::string command;       ///< profile | spectrum | evolve | instability | sweep
    std::string family;        ///< kink | antikink | free
    YGraphSpec graph;          ///< c and lambda
    double L = 40.0;
    int n = 4001;
    int k = 8;
    std::optional<double> kernel_tol; ///< override of max(5e-3, 10 h^2)
    bool restricted = false;
    double dt = 0.0;    ///< 0 = default 0.4 h / max c
    double t_end = 0.0; ///< 0 = per-command default
    int record_every = 500;
    double epsilon = 1e-6;
    std::vector<double> lambdas; ///< sweep points
    std::string initial = "family"; ///< family | pulse
    double pulse_amplitude = 1e-3;
    double pulse_center = 10.0;
    double pulse_width = 2.0;
    int pulse_edge = 1; ///< 1-based
    bool refine = true; ///< Newton-refine the discrete background

    // Command-line flags.
    std::string out_dir = "out";
    bool plot = false;
    int jobs = 1;

    std::map<std::string, std::string> raw; ///< config-file echo for the manifest
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': expected a number, got '" + val + "'");
    }
}

inline int parse_int(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(val, &pos);
        if (pos != val.size()) throw std::invalid_argument("trailing characters");
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': expected an integer, got '" + val + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& val) {
    if (val == "true" || val == "1") return true;
    if (val == "false" || val == "0") return false;
    throw config_error("key '" + key + "': expected true/false, got '" + val + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& val) {
    std::vector<double> out;
    std::stringstream ss(val);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw config_error("key '" + key + "': empty list entry");
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw config_error("key '" + key + "': expected a comma-separated list");
    return out;
}

} // namespace detail

/// Parses and validates a flat key=value configuration ('#' starts a
/// comment).  Unknown keys, duplicates, type mismatches, and precondition
/// violations are all configuration errors naming the offending key.
inline RunConfig parse_config(const std::string& text) {
    static const char* required_hint =
        "required keys: command (profile|spectrum|evolve|instability|sweep), family "
        "(kink|antikink|free), and lambda (or lambdas for sweep)";

    std::map<std::string, std::string> kv;
    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) +
                               ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw config_error("config line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key))
            throw config_error("duplicate configuration key '" + key + "'");
        kv[key] = val;
    }

    static const std::set<std::string> known = {
        "command", "family", "lambda", "lambdas", "c", "L", "n", "k", "kernel_tol",
        "restricted", "dt", "t_end", "record_every", "epsilon", "initial",
        "pulse_amplitude", "pulse_center", "pulse_width", "pulse_edge", "refine"};
    for (const auto& [key, val] : kv)
        if (!known.count(key)) throw config_error("unknown configuration key '" + key + "'");

    RunConfig rc;
    rc.raw = kv;
    auto has = [&kv](const char* key) { return kv.count(key) != 0; };
    auto get = [&kv](const char* key) { return kv.at(key); };

    if (!has("command"))
        throw config_error(std::string("missing required key 'command'; ") + required_hint);
    rc.command = get("command");
    static const std::set<std::string> commands = {"profile", "spectrum", "evolve", "instability",
                                                   "sweep"};
    if (!commands.count(rc.command))
        throw config_error("key 'command': unknown command '" + rc.command + "'; " + required_hint);

    if (!has("family"))
        throw config_error(std::string("missing required key 'family'; ") + required_hint);
    rc.family = get("family");
    if (rc.family != "kink" && rc.family != "antikink" && rc.family != "free")
        throw config_error("key 'family': must be kink, antikink or free, got '" + rc.family + "'");
    if (rc.family == "free" && (rc.command == "profile" || rc.command == "instability"))
        throw config_error("key 'family': command '" + rc.command +
                           "' needs a kink or antikink family");

    if (has("c")) {
        const auto c = detail::parse_list("c", get("c"));
        if (c.size() != 3) throw config_error("key 'c': expected exactly 3 edge speeds");
        rc.graph.c = {c[0], c[1], c[2]};
    }

    if (rc.command == "sweep") {
        if (has("lambda"))
            throw config_error("key 'lambda': sweep runs take 'lambdas' (a comma list) instead");
        if (!has("lambdas"))
            throw config_error(std::string("missing required key 'lambdas'; ") + required_hint);
        rc.lambdas = detail::parse_list("lambdas", get("lambdas"));
    } else {
        if (has("lambdas"))
            throw config_error("key 'lambdas': only sweep runs take a lambda list");
        if (!has("lambda"))
            throw config_error(std::string("missing required key 'lambda'; ") + required_hint);
        rc.graph.lambda = detail::parse_double("lambda", get("lambda"));
    }

    if (has("L")) rc.L = detail::parse_double("L", get("L"));
    if (has("n")) rc.n = detail::parse_int("n", get("n"));
    if (has("k")) rc.k = detail::parse_int("k", get("k"));
    if (has("kernel_tol")) {
        rc.kernel_tol = detail::parse_double("kernel_tol", get("kernel_tol"));
        if (!(*rc.kernel_tol > 0.0)) throw config_error("key 'kernel_tol': must be positive");
    }
    if (has("restricted")) rc.restricted = detail::parse_bool("restricted", get("restricted"));
    if (has("dt")) rc.dt = detail::parse_double("dt", get("dt"));
    if (has("t_end")) rc.t_end = detail::parse_double("t_end", get("t_end"));
    if (has("record_every")) rc.record_every = detail::parse_int("record_every", get("record_every"));
    if (has("epsilon")) rc.epsilon = detail::parse_double("epsilon", get("epsilon"));
    if (has("initial")) {
        rc.initial = get("initial");
        if (rc.initial != "family" && rc.initial != "pulse")
            throw config_error("key 'initial': must be family or pulse, got '" + rc.initial + "'");
    }
    if (has("pulse_amplitude"))
        rc.pulse_amplitude = detail::parse_double("pulse_amplitude", get("pulse_amplitude"));
    if (has("pulse_center")) rc.pulse_center = detail::parse_double("pulse_center", get("pulse_center"));
    if (has("pulse_width")) rc.pulse_width = detail::parse_double("pulse_width", get("pulse_width"));
    if (has("pulse_edge")) rc.pulse_edge = detail::parse_int("pulse_edge", get("pulse_edge"));
    if (has("refine")) rc.refine = detail::parse_bool("refine", get("refine"));

    // Range validation.
    rc.graph.validate();
    build_grid(rc.L, rc.n); // throws on a degenerate grid
    if (rc.k < 1) throw config_error("key 'k': must be >= 1");
    if (rc.record_every < 1) throw config_error("key 'record_every': must be >= 1");
    if (rc.restricted && !rc.graph.equal_speeds())
        throw config_error("key 'restricted': the symmetric-subspace reduction requires equal "
                           "edge speeds");
    if (rc.family == "kink") {
        const double csum = rc.graph.speed_sum();
        auto check = [csum](double lam) {
            if (!(lam < -csum))
                throw config_error("lambda must be < -(c1+c2+c3) = " + std::to_string(-csum) +
                                   " for kink, got " + std::to_string(lam));
        };
        if (rc.command == "sweep")
            for (double lam : rc.lambdas) check(lam);
        else
            check(rc.graph.lambda);
    }
    if (rc.command == "evolve" || rc.command == "instability") {
        if (rc.dt > 0.0) {
            const EdgeGrid g = build_grid(rc.L, rc.n);
            if (rc.dt * rc.graph.max_speed() / g.h() > 0.9)
                throw config_error("key 'dt': CFL number exceeds 0.9");
        }
        if (rc.initial == "pulse") {
            if (rc.pulse_edge < 1 || rc.pulse_edge > 3)
                throw config_error("key 'pulse_edge': must be 1, 2 or 3");
            if (!(rc.pulse_width > 0.0)) throw config_error("key 'pulse_width': must be positive");
        }
    }
    if (rc.command == "instability") {
        if (!(rc.epsilon >= 1e-7 && rc.epsilon <= 1e-4))
            throw config_error("key 'epsilon': seed amplitude must lie in [1e-7, 1e-4]");
        const double horizon = (rc.L - 10.0) / rc.graph.max_speed();
        if (!(horizon > 0.0))
            throw config_error("key 'L': too short for a rate experiment (needs L > 10)");
        if (rc.t_end > horizon)
            throw config_error("key 't_end': rate experiments need t_end <= (L-10)/max c = " +
                               std::to_string(horizon) +
                               " so reflections stay out of the fit window");
    }
    return rc;
}

namespace detail {

/// Re-derives the kernel/Morse classification and floor estimate for a
/// user-supplied tolerance.
inline void apply_kernel_tol(SpectrumReport& rep, double tol, bool free_potential) {
    rep.kernel_tol = tol;
    rep.morse_index = 0;
    rep.kernel_dim = 0;
    for (double nu : rep.eigenvalues) {
        if (nu < -tol) ++rep.morse_index;
        if (std::abs(nu) <= tol) ++rep.kernel_dim;
    }
    const double cut = free_potential ? tol : 0.5;
    rep.continuum_floor_estimate = std::numeric_limits<double>::quiet_NaN();
    for (double nu : rep.eigenvalues)
        if (nu > cut) {
            rep.continuum_floor_estimate = nu;
            break;
        }
}

inline FamilyKind family_kind(const std::string& family) {
    return family == "kink" ? FamilyKind::Kink : FamilyKind::AntikinkKink;
}

/// Assembles and solves the operator for one lambda; shared by spectrum,
/// sweep and instability.
inline SpectrumReport compute_spectrum(const RunConfig& rc, double lambda,
                                       std::optional<ProfileFamily>* fam_out = nullptr) {
    YGraphSpec spec = rc.graph;
    spec.lambda = lambda;
    const EdgeGrid grid = build_grid(rc.L, rc.n);
    OperatorSpec os;
    if (rc.family == "free") {
        os = free_operator(spec, grid, rc.restricted);
        if (fam_out) fam_out->reset();
    } else {
        const ProfileFamily fam = make_family(family_kind(rc.family), spec);
        os = operator_around(fam, grid, rc.restricted);
        if (fam_out) *fam_out = fam;
    }
    SpectrumReport rep = lowest_eigenpairs(assemble(os), rc.k);
    if (rc.kernel_tol) apply_kernel_tol(rep, *rc.kernel_tol, rc.family == "free");
    return rep;
}

inline std::vector<SpectrumRow> spectrum_rows(const RunConfig& rc, double lambda) {
    const SpectrumReport rep = compute_spectrum(rc, lambda);
    const GrowingMode gm = growing_mode_rate(rep);
    std::vector<SpectrumRow> rows;
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
        SpectrumRow r;
        r.lambda = lambda;
        r.c = rc.graph.c;
        r.family = rc.family;
        r.eigen_index = static_cast<int>(i);
        r.eigenvalue = rep.eigenvalues[i];
        r.morse_index = rep.morse_index;
        r.kernel_dim = rep.kernel_dim;
        r.mu_plus = gm.mu_plus;
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<PlotSeries> field_series(const GraphField& f) {
    std::vector<PlotSeries> out;
    for (int j = 0; j < 3; ++j) {
        PlotSeries s;
        s.label = "edge " + std::to_string(j + 1);
        for (int i = 0; i < f.grid.n_points; ++i)
            s.points.emplace_back(f.grid.node(i),
                                  f.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace detail

/// Executes one validated configuration.  Returns the names of all files
/// written into rc.out_dir (manifest last).
inline std::vector<std::string> run(const RunConfig& rc) {
    const auto t0 = std::chrono::steady_clock::now();
    std::error_code ec;
    std::filesystem::create_directories(rc.out_dir, ec);
    if (ec) throw io_error("cannot create output directory " + rc.out_dir + ": " + ec.message());
    const std::filesystem::path out(rc.out_dir);
    std::vector<std::string> files;

    const EdgeGrid grid = build_grid(rc.L, rc.n);

    if (rc.command == "profile") {
        const ProfileFamily fam = make_family(detail::family_kind(rc.family), rc.graph);
        const GraphField phi = sample_profile(fam, grid);
        write_field_csv(out / "profile.csv", phi);
        files.push_back("profile.csv");
        if (rc.plot) {
            write_svg_plot(out / "profile.svg",
                           std::string(to_string(fam.kind)) + " profile, lambda = " +
                               fmt17(rc.graph.lambda) + " (" + to_string(fam.shape) + ")",
                           "x", "phi(x)", detail::field_series(phi));
            files.push_back("profile.svg");
        }
    } else if (rc.command == "spectrum") {
        const auto rows = detail::spectrum_rows(rc, rc.graph.lambda);
        write_spectrum_csv(out / "spectrum.csv", rows);
        files.push_back("spectrum.csv");
        if (rc.plot) {
            PlotSeries s;
            s.label = "eigenvalues";
            for (const auto& r : rows)
                s.points.emplace_back(static_cast<double>(r.eigen_index), r.eigenvalue);
            write_svg_plot(out / "spectrum.svg",
                           "lowest eigenvalues, family = " + rc.family + ", lambda = " +
                               fmt17(rc.graph.lambda),
                           "index", "eigenvalue", {s});
            files.push_back("spectrum.svg");
        }
    } else if (rc.command == "evolve" || rc.command == "instability") {
        std::optional<ProfileFamily> fam;
        if (rc.family != "free") fam = make_family(detail::family_kind(rc.family), rc.graph);

        EvolveConfig cfg;
        cfg.dt = rc.dt;
        cfg.record_every = rc.record_every;
        cfg.background = fam;
        cfg.refine_background = rc.refine;

        if (rc.command == "evolve") {
            cfg.t_end = rc.t_end > 0.0 ? rc.t_end : 10.0;
            GraphField u0 = fam ? (rc.refine ? refine_stationary(*fam, grid)
                                             : sample_profile(*fam, grid))
                                : GraphField::zeros(grid);
            State s0 = stationary_state(u0);
            if (rc.initial == "pulse") {
                const int j = rc.pulse_edge - 1;
                const double c = rc.graph.c[static_cast<std::size_t>(j)];
                for (int i = 0; i < grid.n_points; ++i) {
                    const double z = (grid.node(i) - rc.pulse_center) / rc.pulse_width;
                    const double g = rc.pulse_amplitude * std::exp(-z * z);
                    s0.u.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] += g;
                    // left-moving pulse: v = c d/dx for a wave u(x + c t)
                    s0.v.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                        c * (-2.0 * z / rc.pulse_width) * g;
                }
            }
            const Trajectory traj = evolve(s0, cfg, rc.graph);
            write_snapshots_csv(out / "snapshots.csv", traj.snapshots);
            write_energy_csv(out / "energy.csv", traj.energy);
            write_norms_csv(out / "norms.csv", traj.deviation);
            files.insert(files.end(), {"snapshots.csv", "energy.csv", "norms.csv"});
            if (rc.plot) {
                write_svg_plot(out / "state.svg",
                               "final state, t = " + fmt17(traj.snapshots.back().time), "x", "u(x)",
                               detail::field_series(traj.snapshots.back().u));
                PlotSeries es;
                es.label = "energy";
                for (const auto& e : traj.energy.samples) es.points.emplace_back(e.time, e.energy);
                write_svg_plot(out / "energy.svg", "discrete energy", "t", "H(t)", {es});
                files.insert(files.end(), {"state.svg", "energy.svg"});
            }
        } else {
            const SpectrumReport rep = detail::compute_spectrum(rc, rc.graph.lambda);
            const GrowingMode gm = growing_mode_rate(rep);
            RateRow row;
            row.lambda = rc.graph.lambda;
            row.nu0 = rep.eigenvalues.front();
            row.mu_spectral = gm.mu_plus;
            if (gm.unstable) {
                const GraphField reference = rc.refine ? refine_stationary(*fam, grid)
                                                       : sample_profile(*fam, grid);
                const State s0 =
                    seeded_state(reference, rep.eigenvectors.front(), rc.epsilon, gm.mu_plus);
                cfg.t_end =
                    rc.t_end > 0.0 ? rc.t_end : (rc.L - 10.0) / rc.graph.max_speed();
                const Trajectory traj = evolve(s0, cfg, rc.graph);
                const RateFit fit = growth_rate(traj, rc.epsilon);
                if (fit.found) {
                    row.sigma_measured = fit.sigma;
                    row.rel_err = std::abs(fit.sigma - gm.mu_plus) / gm.mu_plus;
                    row.r_squared = fit.r_squared;
                }
                write_norms_csv(out / "norms.csv", traj.deviation);
                write_energy_csv(out / "energy.csv", traj.energy);
                files.insert(files.end(), {"norms.csv", "energy.csv"});
                if (rc.plot) {
                    PlotSeries g;
                    g.label = "log10 ||u - Phi||";
                    for (const auto& d : traj.deviation)
                        if (d.value > 0.0) g.points.emplace_back(d.time, std::log10(d.value));
                    write_svg_plot(out / "growth.svg",
                                   "perturbation growth, lambda = " + fmt17(rc.graph.lambda), "t",
                                   "log10 deviation", {g});
                    files.push_back("growth.svg");
                }
            }
            write_rate_csv(out / "rate.csv", {row});
            files.push_back("rate.csv");
        }
    } else { // sweep
        std::vector<std::vector<SpectrumRow>> results(rc.lambdas.size());
        std::vector<std::exception_ptr> errors(rc.lambdas.size());
        std::atomic<std::size_t> next{0};
        const int jobs = std::max(1, rc.jobs);
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= rc.lambdas.size()) return;
                try {
                    results[i] = detail::spectrum_rows(rc, rc.lambdas[i]);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        if (jobs == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);

        std::vector<SpectrumRow> all;
        for (const auto& rows : results) all.insert(all.end(), rows.begin(), rows.end());
        write_spectrum_csv(out / "sweep.csv", all);
        files.push_back("sweep.csv");
        if (rc.plot) {
            std::vector<PlotSeries> series(static_cast<std::size_t>(rc.k));
            for (int i = 0; i < rc.k; ++i)
                series[static_cast<std::size_t>(i)].label = "nu_" + std::to_string(i);
            for (const auto& r : all)
                series[static_cast<std::size_t>(r.eigen_index)].points.emplace_back(r.lambda,
                                                                                    r.eigenvalue);
            write_svg_plot(out / "sweep.svg", "eigenvalues vs lambda, family = " + rc.family,
                           "lambda", "eigenvalue", series);
            files.push_back("sweep.svg");
        }
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out, rc.command, rc.raw, wall, files);
    files.push_back("manifest.json");
    return files;
}

} // namespace ysg
