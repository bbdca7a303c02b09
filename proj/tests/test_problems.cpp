#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "heatinv/grid.hpp"
#include "heatinv/problems.hpp"
#include "heatinv/quadrature.hpp"

using namespace heatinv;
using Catch::Approx;

TEST_CASE("example 1 data", "[problems]") {
    auto p = problems::example1();
    CHECK(p.T == 1.0);
    CHECK(p.exact_p(1.0) == Approx(-3.0).margin(1e-15));
    CHECK(p.E(0.0) == Approx(1.0 / 6.0).margin(1e-12));
    CHECK(p.exact_r(0.0) == Approx(1.0).margin(1e-15));
    CHECK(p.phi(0.3, 0.25) == Approx(0.25 * 0.75).margin(1e-15));
}

TEST_CASE("example 2 data", "[problems]") {
    auto p = problems::example2();
    CHECK(p.T == Approx(1.0 / 3.0));
    CHECK(p.E(0.0) == Approx(8.0 / (3.0 * M_PI * M_PI)).margin(1e-14));
    CHECK(p.E(0.0) == Approx(0.270190).margin(1e-6));
    CHECK(p.exact_p(0.0) == Approx(1.0).margin(1e-15));
    CHECK(p.exact_r(0.0) == Approx(1.0).margin(1e-15));

    // overdetermination at t=0: integral of phi equals E(0)
    auto axis = grid::lobatto_axis(64);
    auto rule = quad::lobatto_rule(grid::make_grid(axis, axis));
    double qphi = quad::integrate_fn(rule, p.phi);
    CHECK(qphi == Approx(8.0 / (3.0 * M_PI * M_PI)).margin(1e-12));
}

TEST_CASE("E1 evaluation", "[problems]") {
    CHECK(problems::evaluate_E1(0.0) == Approx(1.0 / 6.0).margin(1e-12));

    // brute-force midpoint oracle with 1e6 panels at t = 1
    const int panels = 1000000;
    double h = 1.0 / panels;
    double acc = 0.0;
    for (int i = 0; i < panels; ++i) {
        double x = (i + 0.5) * h;
        acc += std::exp(x * (x - 1.0) * (x - 1.0));
    }
    double oracle = acc * h / 6.0;
    CHECK(problems::evaluate_E1(1.0) == Approx(oracle).margin(1e-9));

    // E is increasing in t
    double prev = problems::evaluate_E1(0.0);
    for (int i = 1; i <= 10; ++i) {
        double cur = problems::evaluate_E1(0.1 * i);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("manufactured solutions satisfy the PDE", "[problems]") {
    CHECK(problems::residual_check(problems::example1(), 20) < 1e-6);
    CHECK(problems::residual_check(problems::example2(), 20) < 1e-6);
}

TEST_CASE("residual check detects an injected defect", "[problems]") {
    auto p = problems::example2();
    auto f0 = p.f;
    p.f = [f0](double x, double y, double t) { return f0(x, y, t) + 1.0; };
    CHECK(problems::residual_check(p, 20) == Approx(1.0).margin(1e-5));
}

TEST_CASE("exact_r is the exponential of the integral of exact_p", "[problems]") {
    for (auto prob : {problems::example1(), problems::example2()}) {
        // composite Simpson of exact_p with 1e4 panels
        const int panels = 10000;
        double ht = prob.T / panels;
        double acc = 0.0;
        for (int n = 0; n < panels; ++n) {
            acc += ht / 6.0 *
                   (prob.exact_p(n * ht) + 4.0 * prob.exact_p((n + 0.5) * ht) +
                    prob.exact_p((n + 1) * ht));
        }
        CHECK(prob.exact_r(prob.T) == Approx(std::exp(acc)).epsilon(1e-8));
    }
}

TEST_CASE("overdetermination consistency of the exact solutions", "[problems]") {
    auto axis = grid::lobatto_axis(64);
    auto rule = quad::lobatto_rule(grid::make_grid(axis, axis));
    for (auto prob : {problems::example1(), problems::example2()}) {
        for (int s = 0; s <= 4; ++s) {
            double t = prob.T * s / 4.0;
            double integral = quad::integrate_fn(
                rule, [&](double x, double y) { return prob.exact_u(x, y, t); });
            CHECK(integral == Approx(prob.E(t)).margin(1e-6));
        }
    }
}
