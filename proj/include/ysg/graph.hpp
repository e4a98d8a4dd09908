// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Tricrystal Y-junction geometry: three half-line edges meeting at one
/// vertex, each carrying a constant wave speed c_j, with a delta-prime
/// vertex condition parameterized by a real coupling lambda:
///
///     c_1 u'_1(0) = c_2 u'_2(0) = c_3 u'_3(0),
///     sum_j c_j u_j(0) = lambda * c_1 u'_1(0).
///
/// lambda == 0 degenerates to the Kirchhoff-type constraint
/// sum_j c_j u_j(0) = 0 and is flagged separately throughout.
///
/// Edges are truncated to [0, L] with a shared uniform grid; fields on the
/// graph are triples of per-edge sample vectors.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ysg/errors.hpp"

namespace ysg {

/// The junction: three positive edge speeds plus the vertex coupling.
struct YGraphSpec {
    std::array<double, 3> c{1.0, 1.0, 1.0};
    double lambda = 0.0;

    double speed_sum() const { return c[0] + c[1] + c[2]; }
    double max_speed() const { return std::max(c[0], std::max(c[1], c[2])); }
    bool kirchhoff() const { return lambda == 0.0; }
    bool equal_speeds() const { return c[0] == c[1] && c[1] == c[2]; }

    void validate() const {
        for (int j = 0; j < 3; ++j) {
            if (!(c[j] > 0.0) || !std::isfinite(c[j]))
                throw config_error("edge speed c" + std::to_string(j + 1) +
                                   " must be strictly positive, got " + std::to_string(c[j]));
        }
        if (!std::isfinite(lambda))
            throw config_error("vertex coupling lambda must be finite");
    }
};

/// Shared uniform grid on the truncated edge [0, L].
struct EdgeGrid {
    double length = 40.0;
    int n_points = 4001;

    double h() const { return length / (n_points - 1); }
    double node(int i) const { return length * i / (n_points - 1); }

    bool operator==(const EdgeGrid& o) const {
        return length == o.length && n_points == o.n_points;
    }
};

/// Builds a uniform grid, rejecting degenerate requests.
inline EdgeGrid build_grid(double length, int n_points) {
    if (!(length > 0.0) || !std::isfinite(length))
        throw config_error("grid length must be positive and finite, got " + std::to_string(length));
    if (n_points < 8)
        throw config_error("grid needs at least 8 points per edge, got " + std::to_string(n_points));
    return EdgeGrid{length, n_points};
}

/// A real-valued function on the graph: one sample vector per edge on the
/// shared grid.
struct GraphField {
    EdgeGrid grid;
    std::array<std::vector<double>, 3> values;

    static GraphField zeros(const EdgeGrid& g) {
        GraphField f;
        f.grid = g;
        for (auto& v : f.values) v.assign(static_cast<std::size_t>(g.n_points), 0.0);
        return f;
    }

    void check_finite(const char* what) const {
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < grid.n_points; ++i)
                if (!std::isfinite(values[j][i]))
                    throw numeric_error(std::string(what) + ": non-finite value on edge " +
                                        std::to_string(j + 1) + " at node " + std::to_string(i));
    }
};

inline void require_same_grid(const GraphField& a, const GraphField& b) {
    if (!(a.grid == b.grid))
        throw config_error("graph fields live on different grids");
}

/// Samples three per-edge functions at the grid nodes (exact, no interpolation).
inline GraphField sample(const std::array<std::function<double(double)>, 3>& f, const EdgeGrid& grid) {
    GraphField out;
    out.grid = grid;
    for (int j = 0; j < 3; ++j) {
        out.values[j].resize(static_cast<std::size_t>(grid.n_points));
        for (int i = 0; i < grid.n_points; ++i) {
            const double v = f[j](grid.node(i));
            if (!std::isfinite(v))
                throw numeric_error("sample: non-finite value on edge " + std::to_string(j + 1) +
                                    " at node " + std::to_string(i));
            out.values[j][i] = v;
        }
    }
    return out;
}

/// L^2(graph) inner product: sum over edges of composite-trapezoid integrals.
inline double inner_product(const GraphField& u, const GraphField& v) {
    require_same_grid(u, v);
    const int n = u.grid.n_points;
    const double h = u.grid.h();
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) {
        const auto& a = u.values[j];
        const auto& b = v.values[j];
        double s = 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
        for (int i = 1; i < n - 1; ++i) s += a[i] * b[i];
        acc += h * s;
    }
    return acc;
}

inline double norm_l2(const GraphField& u) { return std::sqrt(inner_product(u, u)); }

/// Values and one-sided derivative estimates of a field at the vertex.
/// The derivative uses the second-order three-point stencil
/// (-3 u_0 + 4 u_1 - u_2) / (2h).
struct VertexTrace {
    std::array<double, 3> value{};
    std::array<double, 3> derivative{};
};

inline VertexTrace vertex_trace(const GraphField& u) {
    VertexTrace t;
    const double h = u.grid.h();
    for (int j = 0; j < 3; ++j) {
        const auto& a = u.values[j];
        t.value[j] = a[0];
        t.derivative[j] = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * h);
    }
    return t;
}

/// Residuals of the delta-prime vertex conditions evaluated with the
/// second-order one-sided trace stencil.  For lambda == 0, r3 is the
/// Kirchhoff constraint residual sum_j c_j u_j(0).
struct BcResidual {
    double r1 = 0.0; ///< c1 u'_1(0) - c2 u'_2(0)
    double r2 = 0.0; ///< c2 u'_2(0) - c3 u'_3(0)
    double r3 = 0.0; ///< sum_j c_j u_j(0) - lambda c1 u'_1(0)
    double max_abs() const { return std::max(std::abs(r1), std::max(std::abs(r2), std::abs(r3))); }
};

inline BcResidual bc_residual(const GraphField& u, const YGraphSpec& spec) {
    const VertexTrace t = vertex_trace(u);
    BcResidual r;
    r.r1 = spec.c[0] * t.derivative[0] - spec.c[1] * t.derivative[1];
    r.r2 = spec.c[1] * t.derivative[1] - spec.c[2] * t.derivative[2];
    const double s = spec.c[0] * t.value[0] + spec.c[1] * t.value[1] + spec.c[2] * t.value[2];
    r.r3 = spec.kirchhoff() ? s : s - spec.lambda * spec.c[0] * t.derivative[0];
    return r;
}

} // namespace ysg
