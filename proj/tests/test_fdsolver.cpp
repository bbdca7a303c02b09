#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "heatinv/fdsolver.hpp"
#include "heatinv/grid.hpp"
#include "heatinv/problems.hpp"
#include "heatinv/quadrature.hpp"
#include "heatinv/spectral.hpp"

using namespace heatinv;
using Catch::Approx;

namespace {

grid::Grid2D ugrid(int n) { return grid::make_grid(grid::uniform_axis(n), grid::uniform_axis(n)); }
grid::Grid2D lgrid(int n) { return grid::make_grid(grid::lobatto_axis(n), grid::lobatto_axis(n)); }

bool boundary_conforms(const fd::FieldLevel& level) {
    const Array2D& v = level.values;
    std::size_t nx = v.nx() - 1, ny = v.ny() - 1;
    for (std::size_t j = 0; j <= ny; ++j) {
        if (v(0, j) != v(nx, j) || v(nx, j) != v(nx - 1, j)) return false;
    }
    for (std::size_t i = 0; i <= nx; ++i) {
        if (v(i, 0) != 0.0 || v(i, ny) != 0.0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("stability limit on uniform grids", "[fdsolver]") {
    CHECK(fd::stability_limit(ugrid(26)) == Approx(1.0 / 2704.0).epsilon(1e-12));
    CHECK(fd::stability_limit(ugrid(26)) == Approx(3.6982e-4).epsilon(1e-4));
    // nx = ny: ht_max = hx^2 / 4
    for (int n : {8, 15}) {
        double hx = 1.0 / n;
        CHECK(fd::stability_limit(ugrid(n)) == Approx(hx * hx / 4.0).epsilon(1e-12));
    }
}

TEST_CASE("stability limit on the Lobatto grid has the reference magnitude", "[fdsolver]") {
    double ht_max = fd::stability_limit(lgrid(26));
    long nt_needed = static_cast<long>(std::ceil(1.0 / ht_max));
    // same order of magnitude as the reference run's 147000, and that run
    // is admissible
    CHECK(nt_needed > 14700);
    CHECK(nt_needed < 1470000);
    CHECK(1.0 / 147000.0 <= ht_max * fd::kStabilitySlack);
}

TEST_CASE("apply_boundary", "[fdsolver]") {
    SECTION("random level satisfies the invariants afterwards") {
        fd::FieldLevel level{Array2D(9, 9), 0};
        std::mt19937 rng(3u);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (std::size_t i = 0; i < level.values.size(); ++i) {
            level.values.data()[i] = dist(rng);
        }
        fd::apply_boundary(level);
        CHECK(boundary_conforms(level));
    }
    SECTION("zero level unchanged") {
        fd::FieldLevel level{Array2D(6, 6, 0.0), 0};
        fd::apply_boundary(level);
        for (std::size_t i = 0; i < level.values.size(); ++i) {
            CHECK(level.values.data()[i] == 0.0);
        }
    }
    SECTION("copy row propagates") {
        fd::FieldLevel level{Array2D(5, 5, 0.0), 0};
        for (std::size_t j = 0; j < 5; ++j) {
            level.values(3, j) = 7.0;
        }
        fd::apply_boundary(level);
        for (std::size_t j = 1; j + 1 < 5; ++j) {
            CHECK(level.values(4, j) == 7.0);
            CHECK(level.values(0, j) == 7.0);
        }
        CHECK(level.values(4, 0) == 0.0);
        CHECK(level.values(4, 4) == 0.0);
    }
}

TEST_CASE("uniform step: diffusive decay and pure source", "[fdsolver]") {
    auto g = ugrid(10);
    double ht = 0.5 * fd::stability_limit(g);

    SECTION("sin(pi y) column decays") {
        fd::FieldLevel level{Array2D(11, 11), 0};
        for (std::size_t i = 0; i <= 10; ++i) {
            for (std::size_t j = 0; j <= 10; ++j) {
                level.values(i, j) = std::sin(M_PI * g.y.nodes[j]);
            }
        }
        fd::apply_boundary(level);
        Array2D f0(11, 11, 0.0);
        auto next = fd::explicit_step_uniform(level, 0.0, f0, g, ht);
        for (std::size_t i = 1; i < 10; ++i) {
            for (std::size_t j = 1; j < 10; ++j) {
                CHECK(next.values(i, j) < level.values(i, j));
                CHECK(next.values(i, j) > 0.0);
            }
        }
    }

    SECTION("zero field with unit source gains ht * r * f") {
        fd::FieldLevel level{Array2D(11, 11, 0.0), 0};
        Array2D f1(11, 11, 1.0);
        auto next = fd::explicit_step_uniform(level, 2.0, f1, g, ht);
        for (std::size_t i = 1; i < 10; ++i) {
            for (std::size_t j = 1; j < 10; ++j) {
                CHECK(next.values(i, j) == Approx(2.0 * ht).margin(1e-15));
            }
        }
        CHECK(boundary_conforms(next));
    }
}

TEST_CASE("non-uniform stencil is exact for quadratics", "[fdsolver]") {
    auto g = lgrid(9);
    double ht = 0.5 * fd::stability_limit(g);
    fd::FieldLevel level{Array2D(10, 10), 0};
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j) {
            level.values(i, j) = g.x.nodes[i] * g.x.nodes[i];
        }
    }
    Array2D f0(10, 10, 0.0);
    auto next = fd::explicit_step_nonuniform(level, 1.0, f0, g, ht);
    // v = x^2: the xx second difference is exactly 2, the yy one is 0
    for (std::size_t i = 1; i < 9; ++i) {
        for (std::size_t j = 1; j < 9; ++j) {
            double lap = (next.values(i, j) - level.values(i, j)) / ht;
            CHECK(lap == Approx(2.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("non-uniform path reduces to the uniform one on a uniform grid", "[fdsolver]") {
    auto g = ugrid(8);
    double ht = 0.9 * fd::stability_limit(g);
    auto prob = problems::example2();
    fd::FieldLevel level{Array2D(9, 9), 0};
    for (std::size_t i = 0; i < 9; ++i) {
        for (std::size_t j = 0; j < 9; ++j) {
            level.values(i, j) = prob.phi(g.x.nodes[i], g.y.nodes[j]);
        }
    }
    fd::apply_boundary(level);
    Array2D fn(9, 9, 0.0);
    for (int step = 0; step < 50; ++step) {
        double t = step * ht;
        for (std::size_t i = 1; i < 8; ++i) {
            for (std::size_t j = 1; j < 8; ++j) {
                fn(i, j) = prob.f(g.x.nodes[i], g.y.nodes[j], t);
            }
        }
        auto a = fd::explicit_step_uniform(level, 1.0, fn, g, ht);
        auto b = fd::explicit_step_nonuniform(level, 1.0, fn, g, ht);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            CHECK(std::abs(a.values.data()[i] - b.values.data()[i]) < 1e-13);
        }
        level = a;
    }
}

TEST_CASE("compute_r", "[fdsolver]") {
    auto prob = problems::example2();
    auto g = lgrid(26);
    auto rule = quad::lobatto_rule(g);
    fd::FieldLevel level{Array2D(27, 27), 0};
    for (std::size_t i = 0; i < 27; ++i) {
        for (std::size_t j = 0; j < 27; ++j) {
            level.values(i, j) = prob.phi(g.x.nodes[i], g.y.nodes[j]);
        }
    }
    double E0 = 8.0 / (3.0 * M_PI * M_PI);
    CHECK(fd::compute_r(level, E0, rule) == Approx(1.0).margin(1e-6));

    // linearity in the level
    for (std::size_t i = 0; i < level.values.size(); ++i) {
        level.values.data()[i] *= 3.0;
    }
    CHECK(fd::compute_r(level, E0, rule) == Approx(3.0).margin(3e-6));

    fd::FieldLevel zero{Array2D(27, 27, 0.0), 0};
    CHECK(fd::compute_r(zero, E0, rule) == 0.0);
    CHECK_THROWS_AS(fd::compute_r(zero, 0.0, rule), NumericError);
}

TEST_CASE("recover_p", "[fdsolver]") {
    SECTION("log-quadratic r gives p = t^2 - 4t to second order") {
        auto tg = grid::time_grid(1.0, 1000);  // ht = 1e-3
        std::vector<double> r(tg.samples());
        for (long n = 0; n < tg.samples(); ++n) {
            double t = tg.t(n);
            r[n] = std::exp(t * t * t / 3.0 - 2.0 * t * t);
        }
        auto p = fd::recover_p(r, tg);
        double worst = 0.0;
        for (long n = 1; n < tg.step_count; ++n) {
            double t = tg.t(n);
            worst = std::max(worst, std::abs(p[n] - (t * t - 4.0 * t)));
        }
        CHECK(worst <= 1e-5);
    }
    SECTION("constant r gives zero") {
        auto tg = grid::time_grid(1.0, 10);
        std::vector<double> r(11, 1.0);
        for (double v : fd::recover_p(r, tg)) {
            CHECK(v == Approx(0.0).margin(1e-13));
        }
    }
    SECTION("exponential r gives the constant rate") {
        auto tg = grid::time_grid(1.0, 200);
        std::vector<double> r(tg.samples());
        for (long n = 0; n < tg.samples(); ++n) {
            r[n] = std::exp(1.7 * tg.t(n));
        }
        for (double v : fd::recover_p(r, tg)) {
            CHECK(v == Approx(1.7).margin(1e-10));
        }
    }
    SECTION("nonpositive r is rejected") {
        auto tg = grid::time_grid(1.0, 4);
        std::vector<double> r = {1.0, 0.5, -0.1, 0.5, 1.0};
        CHECK_THROWS_AS(fd::recover_p(r, tg), NumericError);
    }
}

TEST_CASE("recover_u", "[fdsolver]") {
    fd::FieldLevel v{Array2D(4, 4, 6.0), 3};
    auto u = fd::recover_u(v, 2.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        CHECK(u.data()[i] == 3.0);
    }
    auto id = fd::recover_u(v, 1.0);
    for (std::size_t i = 0; i < id.size(); ++i) {
        CHECK(id.data()[i] == 6.0);
    }
    CHECK_THROWS_AS(fd::recover_u(v, 0.0), NumericError);
}

TEST_CASE("march refuses unstable configurations", "[fdsolver]") {
    auto prob = problems::example2();
    fd::SolveConfig cfg;
    cfg.method = fd::Method::UniformTrapezoid;
    cfg.nx = cfg.ny = 26;
    cfg.time_grid = grid::time_grid(prob.T, 10);  // ht far beyond 1/2704
    try {
        fd::march(prob, cfg);
        FAIL("march should have refused");
    } catch (const UnstableConfigError& e) {
        CHECK(e.suggested_nt >= 900);
    }
}

TEST_CASE("march enforces Simpson parity", "[fdsolver]") {
    auto prob = problems::example2();
    fd::SolveConfig cfg;
    cfg.method = fd::Method::UniformSimpson;
    cfg.nx = cfg.ny = 9;
    cfg.time_grid = grid::time_grid(prob.T, 4000);
    CHECK_THROWS_AS(fd::march(prob, cfg), InvalidArgumentError);
}

TEST_CASE("march detects divergence with the failing step", "[fdsolver]") {
    auto prob = problems::example2();
    prob.f = [](double, double, double) { return 1e308; };
    prob.exact_u = nullptr;  // no longer manufactured
    prob.exact_p = nullptr;
    fd::SolveConfig cfg;
    cfg.method = fd::Method::UniformTrapezoid;
    cfg.nx = cfg.ny = 8;
    cfg.time_grid = grid::time_grid(prob.T, 2000);
    try {
        fd::march(prob, cfg);
        FAIL("march should have diverged");
    } catch (const DivergenceError& e) {
        CHECK(e.step >= 1);
        CHECK(e.step <= 4);
    }
}

TEST_CASE("march on example 2 at coarse resolution", "[fdsolver]") {
    auto prob = problems::example2();
    fd::SolveConfig cfg;
    cfg.method = fd::Method::UniformTrapezoid;
    cfg.nx = cfg.ny = 10;
    cfg.time_grid = grid::time_grid(prob.T, 150);  // ht = 1/450 < 1/400
    auto res = fd::march(prob, cfg);

    // compatibility normalization puts r(0) at exactly 1
    CHECK(std::abs(res.r_samples[0] - 1.0) <= 1e-10);
    CHECK(boundary_conforms(res.v_final));
    CHECK(res.stability_margin <= 1.0);

    // u_final = v_final / r(Nt) elementwise
    for (std::size_t i = 0; i < res.u_final.size(); ++i) {
        CHECK(res.u_final.data()[i] ==
              Approx(res.v_final.values.data()[i] / res.r_samples.back()).margin(1e-14));
    }

    // coarse but in the right neighborhood
    Array2D u_exact(11, 11);
    auto g = ugrid(10);
    for (std::size_t i = 0; i < 11; ++i) {
        for (std::size_t j = 0; j < 11; ++j) {
            u_exact(i, j) = prob.exact_u(g.x.nodes[i], g.y.nodes[j], prob.T);
        }
    }
    double uerr = 0.0;
    for (std::size_t i = 0; i < u_exact.size(); ++i) {
        uerr = std::max(uerr, std::abs(u_exact.data()[i] - res.u_final.data()[i]));
    }
    CHECK(uerr < 5e-3);
}

TEST_CASE("march memoization flag does not change the result", "[fdsolver]") {
    auto prob = problems::example2();
    fd::SolveConfig cfg;
    cfg.method = fd::Method::UniformSimpson;
    cfg.nx = cfg.ny = 8;
    cfg.time_grid = grid::time_grid(prob.T, 300);
    auto a = fd::march(prob, cfg);
    cfg.memoize_f = true;
    auto b = fd::march(prob, cfg);
    for (std::size_t i = 0; i < a.u_final.size(); ++i) {
        CHECK(a.u_final.data()[i] == b.u_final.data()[i]);
    }
    CHECK(a.r_samples == b.r_samples);
}

TEST_CASE("second-order spatial convergence on example 2", "[fdsolver]") {
    auto prob = problems::example2();
    auto run = [&](int nx, long nt) {
        fd::SolveConfig cfg;
        cfg.method = fd::Method::UniformTrapezoid;
        cfg.nx = cfg.ny = nx;
        cfg.time_grid = grid::time_grid(prob.T, nt);
        auto res = fd::march(prob, cfg);
        auto g = ugrid(nx);
        double uerr = 0.0;
        for (int i = 0; i <= nx; ++i) {
            for (int j = 0; j <= nx; ++j) {
                uerr = std::max(uerr, std::abs(res.u_final(i, j) -
                                               prob.exact_u(g.x.nodes[i], g.y.nodes[j], prob.T)));
            }
        }
        return uerr;
    };
    // halving hx,hy with ht scaled by 4 reduces the u error by ~4
    double e1 = run(8, 300);    // ht = 1/900  < hx^2/4 = 1/256
    double e2 = run(16, 1200);  // ht = 1/3600 < 1/1024
    double ratio = e1 / e2;
    CHECK(ratio >= 3.0);
    CHECK(ratio <= 5.0);
}

TEST_CASE("one explicit step tracks the series oracle", "[fdsolver]") {
    auto prob = problems::example2();

    // one step from the sampled initial condition, r0 = 1 by compatibility;
    // the deviation from the truncated series at t1 is ht * O(ht + hx^2)
    auto one_step_deviation = [&](int nx) {
        auto g = ugrid(nx);
        double hx = 1.0 / nx;
        double ht = hx * hx / 8.0;
        fd::FieldLevel level{Array2D(nx + 1, nx + 1), 0};
        for (int i = 0; i <= nx; ++i) {
            for (int j = 0; j <= nx; ++j) {
                level.values(i, j) = prob.phi(g.x.nodes[i], g.y.nodes[j]);
            }
        }
        fd::apply_boundary(level);
        Array2D f0(nx + 1, nx + 1, 0.0);
        for (int i = 1; i < nx; ++i) {
            for (int j = 1; j < nx; ++j) {
                f0(i, j) = prob.f(g.x.nodes[i], g.y.nodes[j], 0.0);
            }
        }
        auto v1 = fd::explicit_step_uniform(level, 1.0, f0, g, ht);

        auto tg1 = grid::time_grid(ht, 1);
        auto axis = grid::lobatto_axis(8 * 40);
        auto rule = quad::lobatto_rule(grid::make_grid(axis, axis));
        auto table = spectral::expand(prob, spectral::Truncation{20, 1}, rule, tg1);
        spectral::CoefficientFunction p{tg1, {prob.exact_p(0.0), prob.exact_p(ht)}};
        std::vector<double> interior(g.x.nodes.begin() + 1, g.x.nodes.end() - 1);
        auto u1 = spectral::series_solution_grid(p, table, interior, interior, 1);

        double worst = 0.0;
        for (int i = 1; i < nx; ++i) {
            for (int j = 1; j < nx; ++j) {
                // v = u r and r(t1) = 1 + O(ht); compare against u r with
                // the exact r
                double expect = u1(i - 1, j - 1) * prob.exact_r(ht);
                worst = std::max(worst, std::abs(v1.values(i, j) - expect));
            }
        }
        double bound = ht * (ht + hx * hx);
        return std::pair<double, double>{worst, bound};
    };

    auto [d8, b8] = one_step_deviation(8);
    auto [d16, b16] = one_step_deviation(16);
    CHECK(d8 <= 20.0 * b8);
    CHECK(d16 <= 20.0 * b16);
    // refining hx (with ht tied to hx^2) shrinks the one-step deviation at
    // the expected ht * hx^2 ~ hx^4 rate
    CHECK(d8 / d16 > 8.0);
}

TEST_CASE("march progress callback fires", "[fdsolver]") {
    auto prob = problems::example2();
    fd::SolveConfig cfg;
    cfg.method = fd::Method::UniformTrapezoid;
    cfg.nx = cfg.ny = 8;
    cfg.time_grid = grid::time_grid(prob.T, 2500);
    long calls = 0;
    cfg.progress = [&](long, long) { ++calls; };
    fd::march(prob, cfg);
    CHECK(calls == 2);
}
