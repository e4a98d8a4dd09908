// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ysg/graph.hpp"

using namespace ysg;
using Catch::Approx;

TEST_CASE("grid construction validates arguments and exposes spacing", "[graph]") {
    const EdgeGrid g = build_grid(40.0, 4001);
    REQUIRE(g.h() == Approx(0.01).epsilon(1e-14));
    REQUIRE(g.node(0) == 0.0);
    REQUIRE(g.node(4000) == Approx(40.0).epsilon(1e-14));

    REQUIRE_THROWS_AS(build_grid(0.0, 101), config_error);
    REQUIRE_THROWS_AS(build_grid(-3.0, 101), config_error);
    REQUIRE_THROWS_AS(build_grid(10.0, 7), config_error);
}

TEST_CASE("graph spec validation rejects bad speeds and non-finite coupling", "[graph]") {
    YGraphSpec ok;
    ok.c = {1.0, 2.0, 0.5};
    ok.lambda = -4.0;
    REQUIRE_NOTHROW(ok.validate());
    REQUIRE(ok.speed_sum() == Approx(3.5));
    REQUIRE(ok.max_speed() == Approx(2.0));
    REQUIRE_FALSE(ok.kirchhoff());
    REQUIRE_FALSE(ok.equal_speeds());

    YGraphSpec kir;
    kir.lambda = 0.0;
    REQUIRE(kir.kirchhoff());
    REQUIRE(kir.equal_speeds());

    YGraphSpec bad = ok;
    bad.c[1] = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), config_error);
    bad = ok;
    bad.c[2] = -1.0;
    REQUIRE_THROWS_AS(bad.validate(), config_error);
    bad = ok;
    bad.lambda = std::nan("");
    REQUIRE_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("sampled fields integrate with trapezoid accuracy", "[graph]") {
    const EdgeGrid g = build_grid(40.0, 4001);
    const auto f = [](double x) { return std::exp(-0.5 * x); };
    const GraphField u = sample({f, f, f}, g);

    // Each edge integrates f^2 = e^{-x}; three edges total.
    const double exact = 3.0 * (1.0 - std::exp(-40.0));
    REQUIRE(inner_product(u, u) == Approx(exact).epsilon(1e-4));
    REQUIRE(norm_l2(u) == Approx(std::sqrt(exact)).epsilon(1e-4));
}

TEST_CASE("zero fields have zero norm and values", "[graph]") {
    const EdgeGrid g = build_grid(10.0, 101);
    const GraphField z = GraphField::zeros(g);
    REQUIRE(norm_l2(z) == 0.0);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < g.n_points; ++i) REQUIRE(z.values[j][i] == 0.0);
}

TEST_CASE("vertex trace reproduces one-sided derivatives of quadratics exactly", "[graph]") {
    const EdgeGrid g = build_grid(10.0, 401);
    const GraphField u = sample({[](double x) { return 1.0 + 2.0 * x + 3.0 * x * x; },
                                 [](double x) { return -0.5 * x + x * x; },
                                 [](double x) { return 4.0 - 7.0 * x; }},
                                g);
    const VertexTrace tr = vertex_trace(u);
    REQUIRE(tr.value[0] == Approx(1.0).margin(1e-12));
    REQUIRE(tr.derivative[0] == Approx(2.0).margin(1e-9));
    REQUIRE(tr.derivative[1] == Approx(-0.5).margin(1e-9));
    REQUIRE(tr.derivative[2] == Approx(-7.0).margin(1e-9));
}

TEST_CASE("vertex condition residual vanishes for compatible linear fields", "[graph]") {
    YGraphSpec spec;
    spec.c = {1.0, 2.0, 0.5};
    spec.lambda = -4.0;
    const EdgeGrid g = build_grid(10.0, 401);

    // u_j = (s / c_j) x + t_j has c_j u_j'(0) = s on every edge; choosing
    // sum_j c_j t_j = lambda * s satisfies the coupling rule exactly.
    const double s = 0.75;
    const double t1 = 0.2, t2 = -0.1;
    const double t3 = (spec.lambda * s - spec.c[0] * t1 - spec.c[1] * t2) / spec.c[2];
    const GraphField u = sample({[&](double x) { return s / spec.c[0] * x + t1; },
                                 [&](double x) { return s / spec.c[1] * x + t2; },
                                 [&](double x) { return s / spec.c[2] * x + t3; }},
                                g);
    REQUIRE(bc_residual(u, spec).max_abs() <= 1e-10);

    YGraphSpec kir = spec;
    kir.lambda = 0.0;
    const double t3k = (-kir.c[0] * t1 - kir.c[1] * t2) / kir.c[2];
    const GraphField uk = sample({[&](double x) { return s / kir.c[0] * x + t1; },
                                  [&](double x) { return s / kir.c[1] * x + t2; },
                                  [&](double x) { return s / kir.c[2] * x + t3k; }},
                                 g);
    REQUIRE(bc_residual(uk, kir).max_abs() <= 1e-10);

    // Breaking the derivative match by a finite amount shows up in the residual.
    const GraphField ub = sample({[&](double x) { return 2.0 * x; },
                                  [&](double x) { return s / spec.c[1] * x + t2; },
                                  [&](double x) { return s / spec.c[2] * x + t3; }},
                                 g);
    REQUIRE(bc_residual(ub, spec).max_abs() > 0.1);
}

TEST_CASE("field integrity checks flag non-finite values and grid mismatches", "[graph]") {
    const EdgeGrid a = build_grid(10.0, 101);
    const EdgeGrid b = build_grid(10.0, 201);
    GraphField u = GraphField::zeros(a);
    GraphField v = GraphField::zeros(b);
    REQUIRE_THROWS_AS(require_same_grid(u, v), config_error);
    REQUIRE_THROWS_AS(inner_product(u, v), config_error);

    REQUIRE_NOTHROW(u.check_finite("u"));
    u.values[1][7] = std::nan("");
    REQUIRE_THROWS_AS(u.check_finite("u"), numeric_error);
}
