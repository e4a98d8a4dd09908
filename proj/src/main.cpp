// SPDX-License-Identifier: Apache-2.0

/// Command-line tool: stationary sine-Gordon profiles on a three-edge
/// junction, spectra of the linearized operators, and time-domain
/// instability experiments.  See README.md for the configuration keys.

#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "ysg/cli.hpp"
#include "ysg/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"sine-Gordon kinks on a tricrystal junction: profiles, spectra, dynamics"};
    std::string config_path;
    std::string out_dir = "out";
    bool plot = false;
    int jobs = 1;
    app.add_option("--config", config_path, "path to a key=value configuration file")
        ->required();
    app.add_option("--out", out_dir, "output directory (default: out)");
    app.add_flag("--plot", plot, "also emit SVG plots");
    app.add_option("--jobs", jobs, "worker threads for sweep runs (default: 1)");
    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream in(config_path);
        if (!in) throw ysg::io_error("cannot read config file " + config_path);
        std::stringstream buf;
        buf << in.rdbuf();

        ysg::RunConfig rc = ysg::parse_config(buf.str());
        rc.out_dir = out_dir;
        rc.plot = plot;
        rc.jobs = jobs;

        const auto files = ysg::run(rc);
        for (const auto& f : files) std::printf("wrote %s/%s\n", out_dir.c_str(), f.c_str());
        return 0;
    } catch (const ysg::config_error& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 1;
    } catch (const ysg::io_error& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 3;
    } catch (const ysg::numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
