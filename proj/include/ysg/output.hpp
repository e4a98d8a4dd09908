// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Deterministic experiment outputs: CSV files (17 significant digits,
/// byte-identical across reruns of an identical configuration), static SVG
/// line plots on a fixed 800x500 canvas, SHA-256 checksums, and a JSON run
/// manifest.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <openssl/evp.h>

#include "ysg/dynamics.hpp"
#include "ysg/errors.hpp"
#include "ysg/graph.hpp"

#include "json.hpp"

namespace ysg {

inline constexpr const char* tool_version = "1.0.0";

/// Shortest round-trip decimal representation used in every CSV cell.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw io_error("cannot open output file " + p.string());
    return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& p) {
    out.flush();
    if (!out) throw io_error("failed writing output file " + p.string());
}

} // namespace detail

/// CSV of a field on the graph: edge_index,x,value (edge_index is 1-based).
inline void write_field_csv(const std::filesystem::path& p, const GraphField& f) {
    auto out = detail::open_out(p);
    out << "edge_index,x,value\n";
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < f.grid.n_points; ++i)
            out << (j + 1) << ',' << fmt17(f.grid.node(i)) << ','
                << fmt17(f.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) << '\n';
    detail::finish(out, p);
}

struct SpectrumRow {
    double lambda = 0.0;
    std::array<double, 3> c{};
    std::string family;
    int eigen_index = 0;
    double eigenvalue = 0.0;
    int morse_index = 0;
    int kernel_dim = 0;
    double mu_plus = 0.0; ///< 0 when the configuration is spectrally stable
};

inline void write_spectrum_csv(const std::filesystem::path& p, const std::vector<SpectrumRow>& rows) {
    auto out = detail::open_out(p);
    out << "lambda,c1,c2,c3,family,eigen_index,eigenvalue,morse_index,kernel_dim,mu_plus\n";
    for (const auto& r : rows)
        out << fmt17(r.lambda) << ',' << fmt17(r.c[0]) << ',' << fmt17(r.c[1]) << ','
            << fmt17(r.c[2]) << ',' << r.family << ',' << r.eigen_index << ','
            << fmt17(r.eigenvalue) << ',' << r.morse_index << ',' << r.kernel_dim << ','
            << fmt17(r.mu_plus) << '\n';
    detail::finish(out, p);
}

inline void write_snapshots_csv(const std::filesystem::path& p, const std::vector<State>& snaps) {
    auto out = detail::open_out(p);
    out << "time,edge,x,u,v\n";
    for (const auto& s : snaps)
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < s.u.grid.n_points; ++i)
                out << fmt17(s.time) << ',' << (j + 1) << ',' << fmt17(s.u.grid.node(i)) << ','
                    << fmt17(s.u.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)])
                    << ','
                    << fmt17(s.v.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)])
                    << '\n';
    detail::finish(out, p);
}

inline void write_energy_csv(const std::filesystem::path& p, const EnergyReport& rep) {
    auto out = detail::open_out(p);
    out << "time,energy,vertex_term,boundary_flux_estimate\n";
    for (const auto& s : rep.samples)
        out << fmt17(s.time) << ',' << fmt17(s.energy) << ',' << fmt17(s.vertex_term) << ','
            << fmt17(s.boundary_flux_estimate) << '\n';
    detail::finish(out, p);
}

inline void write_norms_csv(const std::filesystem::path& p, const std::vector<NormSample>& dev) {
    auto out = detail::open_out(p);
    out << "time,deviation\n";
    for (const auto& s : dev) out << fmt17(s.time) << ',' << fmt17(s.value) << '\n';
    detail::finish(out, p);
}

struct RateRow {
    double lambda = 0.0;
    double nu0 = 0.0;
    double mu_spectral = 0.0;
    double sigma_measured = 0.0;
    double rel_err = 0.0;
    double r_squared = 0.0;
};

inline void write_rate_csv(const std::filesystem::path& p, const std::vector<RateRow>& rows) {
    auto out = detail::open_out(p);
    out << "lambda,nu0,mu_spectral,sigma_measured,rel_err,r_squared\n";
    for (const auto& r : rows)
        out << fmt17(r.lambda) << ',' << fmt17(r.nu0) << ',' << fmt17(r.mu_spectral) << ','
            << fmt17(r.sigma_measured) << ',' << fmt17(r.rel_err) << ',' << fmt17(r.r_squared)
            << '\n';
    detail::finish(out, p);
}

/// One polyline on a plot.
struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

/// Static SVG line plot: fixed 800x500 canvas, auto-scaled axes, one
/// polyline per series.  Non-finite points are skipped.
inline void write_svg_plot(const std::filesystem::path& p, const std::string& title,
                           const std::string& xlabel, const std::string& ylabel,
                           const std::vector<PlotSeries>& series) {
    const double W = 800.0, H = 500.0;
    const double ml = 75.0, mr = 20.0, mt = 45.0, mb = 55.0;

    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool any = false;
    for (const auto& s : series)
        for (const auto& pt : s.points) {
            if (!std::isfinite(pt.first) || !std::isfinite(pt.second)) continue;
            if (!any) {
                xmin = xmax = pt.first;
                ymin = ymax = pt.second;
                any = true;
            } else {
                xmin = std::min(xmin, pt.first);
                xmax = std::max(xmax, pt.first);
                ymin = std::min(ymin, pt.second);
                ymax = std::max(ymax, pt.second);
            }
        }
    if (xmax - xmin < 1e-300) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if (ymax - ymin < 1e-300) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    const double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;

    auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto Y = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };
    auto esc = [](const std::string& s) {
        std::string o;
        for (char c : s) {
            if (c == '&') o += "&amp;";
            else if (c == '<') o += "&lt;";
            else if (c == '>') o += "&gt;";
            else o += c;
        }
        return o;
    };
    static const char* palette[6] = {"#1f77b4", "#d62728", "#2ca02c",
                                     "#9467bd", "#ff7f0e", "#8c564b"};

    auto out = detail::open_out(p);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
           "viewBox=\"0 0 800 500\">\n"
        << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n"
        << "<text x=\"400\" y=\"25\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">"
        << esc(title) << "</text>\n";

    // Axes and ticks.
    out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(H - mb) << "\" x2=\"" << num(W - mr)
        << "\" y2=\"" << num(H - mb) << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(ml)
        << "\" y2=\"" << num(H - mb) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double fx = xmin + (xmax - xmin) * t / 4.0;
        const double fy = ymin + (ymax - ymin) * t / 4.0;
        out << "<line x1=\"" << num(X(fx)) << "\" y1=\"" << num(H - mb) << "\" x2=\"" << num(X(fx))
            << "\" y2=\"" << num(H - mb + 5) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << num(X(fx)) << "\" y=\"" << num(H - mb + 20)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(fx)
            << "</text>\n"
            << "<line x1=\"" << num(ml - 5) << "\" y1=\"" << num(Y(fy)) << "\" x2=\"" << num(ml)
            << "\" y2=\"" << num(Y(fy)) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << num(ml - 8) << "\" y=\"" << num(Y(fy) + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(fy)
            << "</text>\n";
    }
    out << "<text x=\"" << num((ml + W - mr) / 2) << "\" y=\"" << num(H - 12)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << esc(xlabel)
        << "</text>\n"
        << "<text x=\"18\" y=\"" << num((mt + H - mb) / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 "
        << num((mt + H - mb) / 2) << ")\">" << esc(ylabel) << "</text>\n";

    // Series.
    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = palette[si % 6];
        std::ostringstream pts;
        bool first = true;
        for (const auto& pt : series[si].points) {
            if (!std::isfinite(pt.first) || !std::isfinite(pt.second)) continue;
            if (!first) pts << ' ';
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.3f,%.3f", X(pt.first), Y(pt.second));
            pts << buf;
            first = false;
        }
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
            << pts.str() << "\"/>\n";
        if (!series[si].label.empty()) {
            const double ly = mt + 16.0 * static_cast<double>(si);
            out << "<line x1=\"" << num(W - mr - 130) << "\" y1=\"" << num(ly) << "\" x2=\""
                << num(W - mr - 110) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
                << "\" stroke-width=\"2\"/>\n"
                << "<text x=\"" << num(W - mr - 105) << "\" y=\"" << num(ly + 4)
                << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(series[si].label)
                << "</text>\n";
        }
    }
    out << "</svg>\n";
    detail::finish(out, p);
}

/// Hex SHA-256 of a file's bytes.
inline std::string sha256_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw io_error("cannot read file for checksum: " + p.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw io_error("checksum context allocation failed");
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw io_error("checksum init failed");
    }
    char buf[65536];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(got)) != 1) {
            EVP_MD_CTX_free(ctx);
            throw io_error("checksum update failed");
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw io_error("checksum finalize failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

/// JSON manifest describing one run: tool version, configuration echo,
/// wall-clock seconds, and a checksum per emitted file.  The manifest itself
/// carries the timing, so the data files stay byte-identical across reruns.
inline void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                           const std::map<std::string, std::string>& config_echo,
                           double wall_clock_seconds, const std::vector<std::string>& files) {
    nlohmann::json j;
    j["tool_version"] = tool_version;
    j["command"] = command;
    j["config"] = config_echo;
    j["wall_clock_seconds"] = wall_clock_seconds;
    j["files"] = nlohmann::json::array();
    for (const auto& name : files) {
        const std::filesystem::path fp = out_dir / name;
        nlohmann::json entry;
        entry["name"] = name;
        entry["bytes"] = static_cast<std::uint64_t>(std::filesystem::file_size(fp));
        entry["sha256"] = sha256_file(fp);
        j["files"].push_back(entry);
    }
    const std::filesystem::path mp = out_dir / "manifest.json";
    auto out = detail::open_out(mp);
    out << j.dump(2) << '\n';
    detail::finish(out, mp);
}

} // namespace ysg
