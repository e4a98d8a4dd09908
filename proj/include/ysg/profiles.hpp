// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Stationary sine-Gordon profiles on the Y junction.
///
/// Two closed-form families are supported, both continuous at the vertex
/// and satisfying the delta-prime conditions through a shift equation:
///
///  * Kink on every edge:       phi_j(x) = 4 atan(exp(-(x - b_j)/c_j)),
///    with b_j/c_j equal across edges and b_1 determined by
///        g(y) = (1 + y^2) atan(y) / y = -lambda / (c1+c2+c3),
///        y = exp(b_1/c_1).
///    Exists exactly for lambda < -(c1+c2+c3).
///
///  * Anti-kink on edge 1, shifted kinks on edges 2 and 3:
///        phi_1(x) = 4 atan(exp((x - a_1)/c_1)),
///        phi_{2,3}(x) = 4 atan(exp((x - a_j)/c_j)) - 2 pi,
///    with a_j/c_j equal and a_1 determined by
///        F(y) = ((1 + y^2)/y) [ (c1+c2+c3) atan(y) - (c2+c3) pi/2 ] = lambda,
///        y = exp(-a_1/c_1).
///    F is strictly increasing and onto, so this family exists for all lambda.
///
/// Profiles are classified by the sign of the shift: Bump (vertex value past
/// the half-way phase), Flat (zero shift, the threshold case), Tail.

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "ysg/errors.hpp"
#include "ysg/graph.hpp"

namespace ysg {

enum class Shape { Bump, Tail, Flat };
enum class FamilyKind { Kink, AntikinkKink };

inline const char* to_string(Shape s) {
    switch (s) {
        case Shape::Bump: return "bump";
        case Shape::Tail: return "tail";
        default: return "flat";
    }
}

inline const char* to_string(FamilyKind k) {
    return k == FamilyKind::Kink ? "kink" : "antikink";
}

/// Left side of the kink shift equation; strictly increasing for y > 0,
/// with g(0+) = 1 and g -> +infinity.
inline double kink_g(double y) {
    return (1.0 + y * y) * std::atan(y) / y;
}

/// Left side of the anti-kink shift equation; strictly increasing and onto R.
inline double antikink_F(double y, const YGraphSpec& spec) {
    const double pi = 4.0 * std::atan(1.0);
    return (1.0 + y * y) / y *
           (spec.speed_sum() * std::atan(y) - 0.5 * (spec.c[1] + spec.c[2]) * pi);
}

namespace detail {

/// Solves f(y) = target for a strictly increasing f on (0, inf):
/// brackets by doubling/halving away from y = 1, then bisects to machine
/// resolution, and verifies the residual.
template <class F>
double solve_increasing(F&& f, double target, const char* what) {
    double lo = 1.0, hi = 1.0;
    if (f(1.0) < target) {
        for (int it = 0; f(hi) < target; ++it) {
            hi *= 2.0;
            if (it > 400) throw numeric_error(std::string(what) + ": failed to bracket root above");
        }
        lo = hi / 2.0;
    } else {
        for (int it = 0; f(lo) > target; ++it) {
            lo *= 0.5;
            if (it > 400) throw numeric_error(std::string(what) + ": failed to bracket root below");
        }
        hi = lo * 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-17 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    const double y = 0.5 * (lo + hi);
    if (std::abs(f(y) - target) > 1e-12 * std::max(1.0, std::abs(target)))
        throw numeric_error(std::string(what) + ": root residual exceeds 1e-12");
    return y;
}

inline double sech(double z) { return 1.0 / std::cosh(z); }

} // namespace detail

/// Shift b_1 of the kink family.  Requires lambda < -(c1+c2+c3).
inline double kink_shift(const YGraphSpec& spec) {
    spec.validate();
    const double csum = spec.speed_sum();
    if (!(spec.lambda < -csum))
        throw config_error("kink family: lambda must be < -(c1+c2+c3) = " +
                           std::to_string(-csum) + ", got " + std::to_string(spec.lambda));
    const double target = -spec.lambda / csum;
    const double y = detail::solve_increasing(kink_g, target, "kink shift equation");
    return spec.c[0] * std::log(y);
}

/// Shift a_1 of the anti-kink family.  Defined for every real lambda.
inline double antikink_shift(const YGraphSpec& spec) {
    spec.validate();
    const double y = detail::solve_increasing(
        [&spec](double t) { return antikink_F(t, spec); }, spec.lambda, "anti-kink shift equation");
    return -spec.c[0] * std::log(y);
}

/// Kink classification by lambda against the threshold -(pi/2)(c1+c2+c3).
inline Shape classify_kink(const YGraphSpec& spec) {
    spec.validate();
    const double csum = spec.speed_sum();
    if (!(spec.lambda < -csum))
        throw config_error("kink family: lambda must be < -(c1+c2+c3) = " + std::to_string(-csum));
    const double pi = 4.0 * std::atan(1.0);
    const double threshold = -0.5 * pi * csum;
    if (std::abs(spec.lambda - threshold) <= 1e-12) return Shape::Flat;
    return spec.lambda < threshold ? Shape::Bump : Shape::Tail;
}

/// Anti-kink classification against the threshold -(pi/2)(c2+c3-c1).
inline Shape classify_antikink(const YGraphSpec& spec) {
    spec.validate();
    const double pi = 4.0 * std::atan(1.0);
    const double threshold = -0.5 * pi * (spec.c[1] + spec.c[2] - spec.c[0]);
    if (std::abs(spec.lambda - threshold) <= 1e-12) return Shape::Flat;
    return spec.lambda < threshold ? Shape::Bump : Shape::Tail;
}

/// A stationary family record with closed-form evaluators.
struct ProfileFamily {
    FamilyKind kind = FamilyKind::Kink;
    YGraphSpec spec;
    std::array<double, 3> shifts{}; ///< b_j (kink) or a_j (anti-kink)
    Shape shape = Shape::Flat;

    /// Limit value of phi_j at x -> +infinity.
    double asymptote(int j) const {
        if (kind == FamilyKind::Kink) return 0.0;
        const double pi = 4.0 * std::atan(1.0);
        return j == 0 ? 2.0 * pi : 0.0;
    }

    /// phi_j (order 0), phi'_j (order 1), or phi''_j (order 2) at x >= 0.
    double eval(int j, double x, int order) const {
        const double c = spec.c[j];
        const double z = (x - shifts[j]) / c;
        if (kind == FamilyKind::Kink) {
            switch (order) {
                case 0: return 4.0 * std::atan(std::exp(-z));
                case 1: return -(2.0 / c) * detail::sech(z);
                case 2: return (2.0 / (c * c)) * detail::sech(z) * std::tanh(z);
                default: throw config_error("profile eval order must be 0, 1 or 2");
            }
        }
        const double pi = 4.0 * std::atan(1.0);
        switch (order) {
            case 0: return 4.0 * std::atan(std::exp(z)) - (j == 0 ? 0.0 : 2.0 * pi);
            case 1: return (2.0 / c) * detail::sech(z);
            case 2: return -(2.0 / (c * c)) * detail::sech(z) * std::tanh(z);
            default: throw config_error("profile eval order must be 0, 1 or 2");
        }
    }
};

inline ProfileFamily make_kink_family(const YGraphSpec& spec) {
    ProfileFamily fam;
    fam.kind = FamilyKind::Kink;
    fam.spec = spec;
    const double b1 = kink_shift(spec);
    for (int j = 0; j < 3; ++j) fam.shifts[j] = spec.c[j] / spec.c[0] * b1;
    fam.shape = classify_kink(spec);
    return fam;
}

inline ProfileFamily make_antikink_family(const YGraphSpec& spec) {
    ProfileFamily fam;
    fam.kind = FamilyKind::AntikinkKink;
    fam.spec = spec;
    const double a1 = antikink_shift(spec);
    for (int j = 0; j < 3; ++j) fam.shifts[j] = spec.c[j] / spec.c[0] * a1;
    fam.shape = classify_antikink(spec);
    return fam;
}

inline ProfileFamily make_family(FamilyKind kind, const YGraphSpec& spec) {
    return kind == FamilyKind::Kink ? make_kink_family(spec) : make_antikink_family(spec);
}

/// Samples phi (or a derivative order) of a family on a grid.
inline GraphField sample_profile(const ProfileFamily& fam, const EdgeGrid& grid, int order = 0) {
    GraphField out;
    out.grid = grid;
    for (int j = 0; j < 3; ++j) {
        out.values[j].resize(static_cast<std::size_t>(grid.n_points));
        for (int i = 0; i < grid.n_points; ++i)
            out.values[j][i] = fam.eval(j, grid.node(i), order);
    }
    out.check_finite("sample_profile");
    return out;
}

} // namespace ysg
