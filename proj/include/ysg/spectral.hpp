// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Linearized operators around stationary profiles on the Y junction and
/// their low-lying spectra.
///
/// The quadratic form is
///
///     Q[u] = (1/lambda) (sum_j c_j u_j(0))^2
///            + sum_j int_0^L [ c_j^2 (u'_j)^2 + cos(phi_j) u_j^2 ] dx,
///
/// discretized with P1 finite elements on each edge (consistent mass,
/// linearly interpolated potential), a pinned far boundary at x = L, and the
/// rank-one vertex coupling.  lambda == 0 replaces the singular 1/lambda term
/// by eliminating the constraint sum_j c_j u_j(0) = 0 through an orthonormal
/// basis of its null space at the three vertex degrees of freedom.  The
/// restricted mode assembles the scalar form on the symmetric subspace
/// u_1 = u_2 = u_3 (equal speeds only):
///
///     q[w] = int_0^L [ c^2 (w')^2 + cos(phi) w^2 ] dx + (3 c^2/lambda) w(0)^2.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ysg/banded.hpp"
#include "ysg/errors.hpp"
#include "ysg/graph.hpp"
#include "ysg/profiles.hpp"

namespace ysg {

enum class PotentialKind { Free, KinkCos, AntikinkCos };

inline const char* to_string(PotentialKind p) {
    switch (p) {
        case PotentialKind::Free: return "free";
        case PotentialKind::KinkCos: return "kink";
        default: return "antikink";
    }
}

/// What to assemble: which potential, around which family, on which graph/grid,
/// and whether to work on the symmetric subspace u_1 = u_2 = u_3.
struct OperatorSpec {
    PotentialKind potential = PotentialKind::Free;
    std::optional<ProfileFamily> family; ///< required unless potential == Free
    YGraphSpec spec;
    EdgeGrid grid;
    bool restricted = false;
};

inline OperatorSpec free_operator(const YGraphSpec& spec, const EdgeGrid& grid,
                                  bool restricted = false) {
    OperatorSpec os;
    os.potential = PotentialKind::Free;
    os.spec = spec;
    os.grid = grid;
    os.restricted = restricted;
    return os;
}

inline OperatorSpec operator_around(const ProfileFamily& fam, const EdgeGrid& grid,
                                    bool restricted = false) {
    OperatorSpec os;
    os.potential =
        fam.kind == FamilyKind::Kink ? PotentialKind::KinkCos : PotentialKind::AntikinkCos;
    os.family = fam;
    os.spec = fam.spec;
    os.grid = grid;
    os.restricted = restricted;
    return os;
}

/// Discrete stiffness/mass pair together with the degree-of-freedom layout.
///
/// Layouts (n = nodes per edge; far node x = L always pinned to zero):
///  * full:              dof(edge j, node i) = 3 i + j, i in [0, n-2]
///  * full, lambda == 0: two combined vertex dofs spanning the constraint
///                       null space (basis t1, t2), then 2 + 3(i-1) + j
///  * restricted:        single edge, dof = i (vertex dof pinned too when
///                       lambda == 0)
struct AssembledOperator {
    SymBanded K; ///< stiffness + potential + vertex coupling
    SymBanded M; ///< consistent mass, positive definite
    YGraphSpec spec;
    EdgeGrid grid;
    PotentialKind potential = PotentialKind::Free;
    bool restricted = false;
    bool kirchhoff = false;
    std::array<double, 3> t1{}, t2{}; ///< vertex constraint null-space basis (kirchhoff, full)

    int size() const { return K.size(); }

    /// GraphField -> coordinate vector.  The pinned far node is dropped; in
    /// kirchhoff mode the three vertex values are projected onto the
    /// constraint subspace; restricted mode reads edge 1 (fields in the
    /// symmetric subspace have identical edges).
    std::vector<double> flatten(const GraphField& u) const {
        if (!(u.grid == grid)) throw config_error("flatten: field grid differs from operator grid");
        const int n = grid.n_points;
        std::vector<double> x(static_cast<std::size_t>(size()), 0.0);
        if (restricted) {
            const auto& a = u.values[0];
            if (kirchhoff)
                for (int i = 1; i <= n - 2; ++i) x[static_cast<std::size_t>(i - 1)] = a[static_cast<std::size_t>(i)];
            else
                for (int i = 0; i <= n - 2; ++i) x[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)];
            return x;
        }
        if (kirchhoff) {
            for (int j = 0; j < 3; ++j) {
                x[0] += t1[static_cast<std::size_t>(j)] * u.values[static_cast<std::size_t>(j)][0];
                x[1] += t2[static_cast<std::size_t>(j)] * u.values[static_cast<std::size_t>(j)][0];
            }
            for (int i = 1; i <= n - 2; ++i)
                for (int j = 0; j < 3; ++j)
                    x[static_cast<std::size_t>(2 + 3 * (i - 1) + j)] =
                        u.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            return x;
        }
        for (int i = 0; i <= n - 2; ++i)
            for (int j = 0; j < 3; ++j)
                x[static_cast<std::size_t>(3 * i + j)] =
                    u.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        return x;
    }

    /// Coordinate vector -> GraphField (inverse of flatten; far node zero,
    /// restricted vectors replicated onto all three edges).
    GraphField expand(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != size())
            throw config_error("expand: coordinate vector has wrong length");
        const int n = grid.n_points;
        GraphField u = GraphField::zeros(grid);
        if (restricted) {
            for (int j = 0; j < 3; ++j) {
                if (kirchhoff)
                    for (int i = 1; i <= n - 2; ++i)
                        u.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                            x[static_cast<std::size_t>(i - 1)];
                else
                    for (int i = 0; i <= n - 2; ++i)
                        u.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                            x[static_cast<std::size_t>(i)];
            }
            return u;
        }
        if (kirchhoff) {
            for (int j = 0; j < 3; ++j)
                u.values[static_cast<std::size_t>(j)][0] =
                    x[0] * t1[static_cast<std::size_t>(j)] + x[1] * t2[static_cast<std::size_t>(j)];
            for (int i = 1; i <= n - 2; ++i)
                for (int j = 0; j < 3; ++j)
                    u.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                        x[static_cast<std::size_t>(2 + 3 * (i - 1) + j)];
            return u;
        }
        for (int i = 0; i <= n - 2; ++i)
            for (int j = 0; j < 3; ++j)
                u.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                    x[static_cast<std::size_t>(3 * i + j)];
        return u;
    }
};

namespace detail {

/// Orthonormal basis {t1, t2} of the plane orthogonal to w = (c1, c2, c3),
/// built deterministically: seed with the coordinate axis least aligned
/// with w, Gram-Schmidt, then the cross product.
inline void constraint_null_basis(const std::array<double, 3>& c, std::array<double, 3>& t1,
                                  std::array<double, 3>& t2) {
    const double wn = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    const std::array<double, 3> w{c[0] / wn, c[1] / wn, c[2] / wn};
    int e = 0;
    for (int j = 1; j < 3; ++j)
        if (std::abs(w[static_cast<std::size_t>(j)]) < std::abs(w[static_cast<std::size_t>(e)])) e = j;
    std::array<double, 3> a{0.0, 0.0, 0.0};
    a[static_cast<std::size_t>(e)] = 1.0;
    const double proj = a[0] * w[0] + a[1] * w[1] + a[2] * w[2];
    for (int j = 0; j < 3; ++j) t1[static_cast<std::size_t>(j)] = a[static_cast<std::size_t>(j)] - proj * w[static_cast<std::size_t>(j)];
    const double t1n = std::sqrt(t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]);
    for (auto& v : t1) v /= t1n;
    t2[0] = w[1] * t1[2] - w[2] * t1[1];
    t2[1] = w[2] * t1[0] - w[0] * t1[2];
    t2[2] = w[0] * t1[1] - w[1] * t1[0];
}

} // namespace detail

/// P1 finite-element assembly of the linearized form and consistent mass.
inline AssembledOperator assemble(const OperatorSpec& os) {
    os.spec.validate();
    if (os.grid.n_points < 8) throw config_error("operator grid needs at least 8 points per edge");
    if (os.restricted && !os.spec.equal_speeds())
        throw config_error("restricted (symmetric subspace) assembly requires equal edge speeds");
    if (os.potential != PotentialKind::Free) {
        if (!os.family)
            throw config_error("operator: a profile family is required for a non-free potential");
        const bool kink_pot = os.potential == PotentialKind::KinkCos;
        if (kink_pot != (os.family->kind == FamilyKind::Kink))
            throw config_error("operator: potential kind does not match the family kind");
        const auto& fs = os.family->spec;
        if (fs.lambda != os.spec.lambda || fs.c != os.spec.c)
            throw config_error("operator: family and graph parameters disagree");
    }

    const int n = os.grid.n_points;
    const double h = os.grid.h();

    AssembledOperator op;
    op.spec = os.spec;
    op.grid = os.grid;
    op.potential = os.potential;
    op.restricted = os.restricted;
    op.kirchhoff = os.spec.kirchhoff();

    // Potential samples cos(phi_j(x_i)); zero for the free operator.  In
    // restricted mode all edges carry the same potential (equal speeds give
    // identical shifts, and cos removes the 2 pi offset), so edge 1 is used.
    const int edges = os.restricted ? 1 : 3;
    std::array<std::vector<double>, 3> w;
    for (int j = 0; j < edges; ++j) {
        w[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(n), 0.0);
        if (os.potential != PotentialKind::Free)
            for (int i = 0; i < n; ++i)
                w[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                    std::cos(os.family->eval(j, os.grid.node(i), 0));
    }

    int size = 0, kd = 0;
    if (os.restricted) {
        size = op.kirchhoff ? n - 2 : n - 1;
        kd = 1;
    } else if (op.kirchhoff) {
        size = 2 + 3 * (n - 2);
        kd = 4;
        detail::constraint_null_basis(os.spec.c, op.t1, op.t2);
    } else {
        size = 3 * (n - 1);
        kd = 3;
    }
    op.K = SymBanded(size, kd);
    op.M = SymBanded(size, kd);

    // (dof, weight) decomposition of each (edge, node); empty when pinned.
    struct DofW {
        int dof[2];
        double wgt[2];
        int count;
    };
    auto node_dofs = [&](int j, int i) -> DofW {
        DofW d{{0, 0}, {0.0, 0.0}, 0};
        if (i == n - 1) return d;
        if (os.restricted) {
            if (i == 0) {
                if (!op.kirchhoff) d = {{0, 0}, {1.0, 0.0}, 1};
            } else {
                d = {{op.kirchhoff ? i - 1 : i, 0}, {1.0, 0.0}, 1};
            }
            return d;
        }
        if (op.kirchhoff) {
            if (i == 0)
                d = {{0, 1}, {op.t1[static_cast<std::size_t>(j)], op.t2[static_cast<std::size_t>(j)]}, 2};
            else
                d = {{2 + 3 * (i - 1) + j, 0}, {1.0, 0.0}, 1};
            return d;
        }
        d = {{3 * i + j, 0}, {1.0, 0.0}, 1};
        return d;
    };

    for (int j = 0; j < edges; ++j) {
        const double c2 = os.spec.c[static_cast<std::size_t>(j)] * os.spec.c[static_cast<std::size_t>(j)];
        const auto& wj = w[static_cast<std::size_t>(j)];
        for (int i = 0; i < n - 1; ++i) {
            const double w0 = wj[static_cast<std::size_t>(i)];
            const double w1 = wj[static_cast<std::size_t>(i + 1)];
            const double kloc[2][2] = {
                {c2 / h + (h / 12.0) * (3.0 * w0 + w1), -c2 / h + (h / 12.0) * (w0 + w1)},
                {-c2 / h + (h / 12.0) * (w0 + w1), c2 / h + (h / 12.0) * (w0 + 3.0 * w1)}};
            const double mloc[2][2] = {{h / 3.0, h / 6.0}, {h / 6.0, h / 3.0}};
            const DofW maps[2] = {node_dofs(j, i), node_dofs(j, i + 1)};
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int p = 0; p < maps[a].count; ++p)
                        for (int q = 0; q < maps[b].count; ++q) {
                            const int d1 = maps[a].dof[p], d2 = maps[b].dof[q];
                            if (d1 < d2) continue; // symmetric term stored once
                            const double ww = maps[a].wgt[p] * maps[b].wgt[q];
                            op.K.add(d1, d2, kloc[a][b] * ww);
                            op.M.add(d1, d2, mloc[a][b] * ww);
                        }
        }
    }

    // Vertex coupling.
    if (!op.kirchhoff) {
        if (os.restricted) {
            const double c = os.spec.c[0];
            op.K.add(0, 0, 3.0 * c * c / os.spec.lambda);
        } else {
            for (int j = 0; j < 3; ++j)
                for (int kk = 0; kk <= j; ++kk)
                    op.K.add(j, kk,
                             os.spec.c[static_cast<std::size_t>(j)] *
                                 os.spec.c[static_cast<std::size_t>(kk)] / os.spec.lambda);
        }
    }
    return op;
}

/// Low-lying generalized spectrum of an assembled operator.
struct SpectrumReport {
    std::vector<double> eigenvalues;      ///< ascending
    std::vector<GraphField> eigenvectors; ///< matching order
    int morse_index = 0;                  ///< #{nu < -kernel_tol}
    int kernel_dim = 0;                   ///< #{|nu| <= kernel_tol}
    double continuum_floor_estimate = 0.0;
    double kernel_tol = 0.0;
};

/// Computes the k lowest eigenpairs.  kernel_tol = max(5e-3, 10 h^2) absorbs
/// the O(h^2) discretization shift of exact zero modes.  The continuum-floor
/// estimate is heuristic: the smallest eigenvalue above 0.5 (above kernel_tol
/// for the free operator, whose band starts at 0); NaN when none qualifies.
inline SpectrumReport lowest_eigenpairs(const AssembledOperator& op, int k) {
    const double lam = op.spec.lambda;
    const double ss = op.spec.speed_sum();
    double sigma = -3.0;
    if (lam < 0.0) sigma -= 1.5 * (ss / lam) * (ss / lam);

    EigenPairs pairs = lowest_generalized(op.K, op.M, k, sigma);

    SpectrumReport rep;
    rep.eigenvalues = pairs.values;
    const double h = op.grid.h();
    rep.kernel_tol = std::max(5e-3, 10.0 * h * h);
    for (double nu : rep.eigenvalues) {
        if (nu < -rep.kernel_tol) ++rep.morse_index;
        if (std::abs(nu) <= rep.kernel_tol) ++rep.kernel_dim;
    }
    const double cut = op.potential == PotentialKind::Free ? rep.kernel_tol : 0.5;
    rep.continuum_floor_estimate = std::numeric_limits<double>::quiet_NaN();
    for (double nu : rep.eigenvalues)
        if (nu > cut) {
            rep.continuum_floor_estimate = nu;
            break;
        }
    const double scale = op.restricted ? 1.0 / std::sqrt(3.0) : 1.0;
    for (auto& v : pairs.vectors) {
        GraphField f = op.expand(v);
        if (scale != 1.0)
            for (auto& edge : f.values)
                for (auto& t : edge) t *= scale;
        rep.eigenvectors.push_back(std::move(f));
    }
    return rep;
}

/// Certified (Morse index, kernel dimension) readout.  Errors when the
/// largest computed eigenvalue still sits at or below kernel_tol, because
/// further negative or kernel eigenvalues could hide beyond the computed k.
inline std::pair<int, int> morse_and_kernel(const SpectrumReport& rep) {
    if (rep.eigenvalues.empty()) throw config_error("morse_and_kernel: empty report");
    if (rep.eigenvalues.back() <= rep.kernel_tol)
        throw numeric_error("morse_and_kernel: inconclusive at k = " +
                            std::to_string(rep.eigenvalues.size()) +
                            " (largest eigenvalue still below kernel_tol); increase k");
    return {rep.morse_index, rep.kernel_dim};
}

/// The two analytic kernel fields at the threshold (Flat) coupling:
/// kink:      (phi'_1, -phi'_2, 0) and (0, phi'_2, -phi'_3);
/// anti-kink: (-phi'_1, phi'_2, 0) and (-phi'_1, 0, phi'_3).
inline std::array<GraphField, 2> analytic_kernel_vectors(const ProfileFamily& fam,
                                                         const EdgeGrid& grid) {
    if (fam.shape != Shape::Flat)
        throw config_error(
            "analytic kernel vectors exist only at the threshold coupling (flat profile); "
            "away from it the kernel is trivial");
    std::array<GraphField, 2> out{GraphField::zeros(grid), GraphField::zeros(grid)};
    for (int i = 0; i < grid.n_points; ++i) {
        const double x = grid.node(i);
        const double d0 = fam.eval(0, x, 1);
        const double d1 = fam.eval(1, x, 1);
        const double d2 = fam.eval(2, x, 1);
        if (fam.kind == FamilyKind::Kink) {
            out[0].values[0][static_cast<std::size_t>(i)] = d0;
            out[0].values[1][static_cast<std::size_t>(i)] = -d1;
            out[1].values[1][static_cast<std::size_t>(i)] = d1;
            out[1].values[2][static_cast<std::size_t>(i)] = -d2;
        } else {
            out[0].values[0][static_cast<std::size_t>(i)] = -d0;
            out[0].values[1][static_cast<std::size_t>(i)] = d1;
            out[1].values[0][static_cast<std::size_t>(i)] = -d0;
            out[1].values[2][static_cast<std::size_t>(i)] = d2;
        }
    }
    return out;
}

/// Value of the assembled quadratic form, u^T K u (vertex term included).
inline double quadratic_form(const AssembledOperator& op, const GraphField& u) {
    const std::vector<double> x = op.flatten(u);
    std::vector<double> kx(x.size());
    op.K.matvec(x.data(), kx.data());
    return detail::dot(x, kx);
}

/// Rayleigh quotient u^T K u / u^T M u of the assembled pair.
inline double rayleigh_quotient(const AssembledOperator& op, const GraphField& u) {
    const std::vector<double> x = op.flatten(u);
    std::vector<double> kx(x.size()), mx(x.size());
    op.K.matvec(x.data(), kx.data());
    op.M.matvec(x.data(), mx.data());
    const double den = detail::dot(x, mx);
    if (den <= 0.0) throw numeric_error("rayleigh_quotient: vanishing mass norm");
    return detail::dot(x, kx) / den;
}

struct FormDecomposition {
    double A = 0.0; ///< nonnegative factored bulk term
    double P = 0.0; ///< boundary term, sign depends on the profile shape
};

/// Splits the form (without the 1/lambda vertex square) as A + P with
///     A = sum_j int c_j^2 (phi'_j)^2 [d/dx (u_j / phi'_j)]^2 dx  >= 0,
///     P = -sum_j c_j^2 u_j(0)^2 phi''_j(0) / phi'_j(0).
/// The midpoint ratio phi''/phi' = -tanh((x - shift_j)/c_j)/c_j is evaluated
/// in closed form (phi'_j never vanishes for these families).
inline FormDecomposition form_decomposition_P(const ProfileFamily& fam, const GraphField& u) {
    const EdgeGrid& grid = u.grid;
    const int n = grid.n_points;
    const double h = grid.h();
    FormDecomposition fd;
    for (int j = 0; j < 3; ++j) {
        const double c = fam.spec.c[static_cast<std::size_t>(j)];
        const auto& a = u.values[static_cast<std::size_t>(j)];
        for (int i = 0; i < n - 1; ++i) {
            const double du = (a[static_cast<std::size_t>(i + 1)] - a[static_cast<std::size_t>(i)]) / h;
            const double um = 0.5 * (a[static_cast<std::size_t>(i)] + a[static_cast<std::size_t>(i + 1)]);
            const double xm = 0.5 * (grid.node(i) + grid.node(i + 1));
            const double r = -std::tanh((xm - fam.shifts[static_cast<std::size_t>(j)]) / c) / c;
            const double t = du - um * r;
            fd.A += c * c * h * t * t;
        }
        const double dphi0 = fam.eval(j, 0.0, 1);
        if (std::abs(dphi0) < 1e-300)
            throw numeric_error("form decomposition: profile derivative vanishes at the vertex");
        fd.P -= c * c * a[0] * a[0] * fam.eval(j, 0.0, 2) / dphi0;
    }
    return fd;
}

/// Evaluates sum_j int (-sin(phi_j) + cos(phi_j) phi_j) phi_j dx by trapezoid
/// quadrature and asserts it is negative.  Valid for tail/flat kinks, whose
/// profiles satisfy 0 < phi <= pi; bump kinks violate that bound.
inline double negativity_witness_kink(const ProfileFamily& fam, const EdgeGrid& grid) {
    if (fam.kind != FamilyKind::Kink)
        throw config_error("negativity witness is defined for the kink family only");
    if (fam.shape == Shape::Bump)
        throw config_error("negativity witness requires 0 < phi <= pi, which fails for bump kinks");
    const int n = grid.n_points;
    const double h = grid.h();
    double total = 0.0;
    for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double phi = fam.eval(j, grid.node(i), 0);
            const double f = (-std::sin(phi) + std::cos(phi) * phi) * phi;
            s += (i == 0 || i == n - 1) ? 0.5 * f : f;
        }
        total += h * s;
    }
    if (!(total < 0.0))
        throw numeric_error("negativity witness failed: quadrature value " + std::to_string(total) +
                            " is not negative");
    return total;
}

struct GrowingMode {
    bool unstable = false;
    double mu_plus = 0.0;
    double mu_minus = 0.0;
};

/// Linearized growing-mode rates mu = +-sqrt(-nu_0) from the smallest
/// eigenvalue; a zero Morse index yields a no-instability report, not an
/// error.
inline GrowingMode growing_mode_rate(const SpectrumReport& rep) {
    GrowingMode gm;
    if (rep.morse_index == 0) return gm;
    const double nu0 = rep.eigenvalues.front();
    gm.unstable = true;
    gm.mu_plus = std::sqrt(-nu0);
    gm.mu_minus = -gm.mu_plus;
    return gm;
}

} // namespace ysg
