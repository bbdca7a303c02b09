#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "heatinv/array2d.hpp"
#include "heatinv/errors.hpp"
#include "heatinv/grid.hpp"
#include "heatinv/problems.hpp"
#include "heatinv/quadrature.hpp"

namespace heatinv::fd {

enum class Method { UniformTrapezoid, UniformSimpson, NonUniformLobatto };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::UniformTrapezoid:
            return "uniform-trapezoid";
        case Method::UniformSimpson:
            return "uniform-simpson";
        case Method::NonUniformLobatto:
            return "nonuniform-lobatto";
    }
    return "?";
}

/// Spatial grid of v-values at one time level.
struct FieldLevel {
    Array2D values;
    long time_index = 0;
};

struct SolveConfig {
    Method method = Method::UniformTrapezoid;
    int nx = 2;
    int ny = 2;
    grid::TimeGrid time_grid;
    bool memoize_f = false;
    // Called every 1000 steps with (step, total). Null disables progress.
    std::function<void(long, long)> progress;
};

struct SolveResult {
    FieldLevel v_final;
    Array2D u_final;
    std::vector<double> r_samples;
    std::vector<double> p_samples;
    double stability_margin = 0.0;  // ht / ht_max
    double e_scale = 1.0;           // compatibility normalization applied to E
    double wall_ms = 0.0;
};

// Slack admitting time steps marginally above the strict positivity bound;
// covers the classic Nt=2700 at 26x26 (limit 1/2704, excess 0.148%).
inline constexpr double kStabilitySlack = 1.002;

/// Largest time step keeping every center coefficient of the explicit
/// update nonnegative. On a uniform grid this is 1 / (2/hx^2 + 2/hy^2).
inline double stability_limit(const grid::Grid2D& g) {
    auto max_axis_coeff = [](const grid::Axis& a) {
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < a.nodes.size(); ++i) {
            double dl = a.nodes[i] - a.nodes[i - 1];
            double dr = a.nodes[i + 1] - a.nodes[i];
            worst = std::max(worst, 2.0 / (dl * dr));
        }
        return worst;
    };
    return 1.0 / (max_axis_coeff(g.x) + max_axis_coeff(g.y));
}

inline grid::Grid2D build_grid(const SolveConfig& cfg) {
    if (cfg.method == Method::UniformSimpson && (cfg.nx % 2 != 0 || cfg.ny % 2 != 0)) {
        throw InvalidArgumentError("march: Simpson requires even nx and ny, got " +
                                   std::to_string(cfg.nx) + "x" + std::to_string(cfg.ny));
    }
    if (cfg.method == Method::NonUniformLobatto) {
        return grid::make_grid(grid::lobatto_axis(cfg.nx), grid::lobatto_axis(cfg.ny));
    }
    return grid::make_grid(grid::uniform_axis(cfg.nx), grid::uniform_axis(cfg.ny));
}

inline quad::ProductRule build_rule(const SolveConfig& cfg, const grid::Grid2D& g) {
    switch (cfg.method) {
        case Method::UniformTrapezoid:
            return quad::trapezoid_rule(g);
        case Method::UniformSimpson:
            return quad::simpson_rule(g);
        case Method::NonUniformLobatto:
            return quad::lobatto_rule(g);
    }
    throw InvalidArgumentError("march: unknown method");
}

namespace detail {

inline void step_interior_uniform(const Array2D& v, Array2D& out, double ax, double ay,
                                  double ht, double r_n, const Array2D& f_n) {
    const std::size_t nx = out.nx() - 1, ny = out.ny() - 1;
    const double c0 = 1.0 - 2.0 * ax - 2.0 * ay;
    for (std::size_t i = 1; i < nx; ++i) {
        for (std::size_t j = 1; j < ny; ++j) {
            out(i, j) = ax * (v(i + 1, j) + v(i - 1, j)) + ay * (v(i, j + 1) + v(i, j - 1)) +
                        c0 * v(i, j) + ht * r_n * f_n(i, j);
        }
    }
}

/// Per-axis coefficients of the three-point second difference at the
/// interior nodes: lo[i] and hi[i] multiply the neighbors, diag[i] the
/// center (negative for increasing nodes).
struct AxisStencil {
    std::vector<double> lo, diag, hi;

    explicit AxisStencil(const std::vector<double>& x) {
        std::size_t n = x.size();
        lo.assign(n, 0.0);
        diag.assign(n, 0.0);
        hi.assign(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            lo[i] = 2.0 / ((x[i - 1] - x[i]) * (x[i - 1] - x[i + 1]));
            diag[i] = 2.0 / ((x[i] - x[i - 1]) * (x[i] - x[i + 1]));
            hi[i] = 2.0 / ((x[i + 1] - x[i - 1]) * (x[i + 1] - x[i]));
        }
    }
};

inline void step_interior_nonuniform(const Array2D& v, Array2D& out, const AxisStencil& sx,
                                     const AxisStencil& sy, double ht, double r_n,
                                     const Array2D& f_n) {
    const std::size_t nx = out.nx() - 1, ny = out.ny() - 1;
    for (std::size_t i = 1; i < nx; ++i) {
        for (std::size_t j = 1; j < ny; ++j) {
            double lap = sx.lo[i] * v(i - 1, j) + sx.diag[i] * v(i, j) + sx.hi[i] * v(i + 1, j) +
                         sy.lo[j] * v(i, j - 1) + sy.diag[j] * v(i, j) + sy.hi[j] * v(i, j + 1);
            out(i, j) = v(i, j) + ht * (lap + r_n * f_n(i, j));
        }
    }
}

}  // namespace detail

/// Nonlocal boundary in x (copy then wrap), Dirichlet in y; x first so
/// the corners end at zero.
inline void apply_boundary(FieldLevel& level) {
    Array2D& v = level.values;
    const std::size_t nx = v.nx() - 1, ny = v.ny() - 1;
    for (std::size_t j = 0; j <= ny; ++j) {
        v(nx, j) = v(nx - 1, j);
        v(0, j) = v(nx, j);
    }
    for (std::size_t i = 0; i <= nx; ++i) {
        v(i, 0) = 0.0;
        v(i, ny) = 0.0;
    }
}

/// One explicit step on a uniform grid:
///   v^{n+1} = (ht/hx^2)(v_E + v_W) + (ht/hy^2)(v_N + v_S)
///             + (1 - 2ht/hx^2 - 2ht/hy^2) v + ht r_n f,
/// followed by the boundary application.
inline FieldLevel explicit_step_uniform(const FieldLevel& level, double r_n, const Array2D& f_n,
                                        const grid::Grid2D& g, double ht) {
    double hx = g.x.nodes[1] - g.x.nodes[0];
    double hy = g.y.nodes[1] - g.y.nodes[0];
    FieldLevel out{Array2D(level.values.nx(), level.values.ny()), level.time_index + 1};
    detail::step_interior_uniform(level.values, out.values, ht / (hx * hx), ht / (hy * hy), ht,
                                  r_n, f_n);
    apply_boundary(out);
    return out;
}

/// One explicit step with the three-point non-uniform second difference in
/// each direction; on equal spacings the coefficients reduce to the
/// uniform stencil.
inline FieldLevel explicit_step_nonuniform(const FieldLevel& level, double r_n,
                                           const Array2D& f_n, const grid::Grid2D& g, double ht) {
    detail::AxisStencil sx(g.x.nodes), sy(g.y.nodes);
    FieldLevel out{Array2D(level.values.nx(), level.values.ny()), level.time_index + 1};
    detail::step_interior_nonuniform(level.values, out.values, sx, sy, ht, r_n, f_n);
    apply_boundary(out);
    return out;
}

/// Discrete overdetermination closure: r = (1/E_n) * integral of the level.
inline double compute_r(const FieldLevel& level, double E_n, const quad::ProductRule& rule) {
    if (E_n == 0.0) {
        throw NumericError("compute_r: E sample is zero");
    }
    return quad::integrate(rule, level.values) / E_n;
}

/// p(t_n) = d/dt ln r by central differences, second-order one-sided at
/// both endpoints.
inline std::vector<double> recover_p(const std::vector<double>& r_samples,
                                     const grid::TimeGrid& tg) {
    if (r_samples.size() != static_cast<std::size_t>(tg.samples()) || r_samples.size() < 3) {
        throw InvalidArgumentError("recover_p: need Nt+1 samples with Nt >= 2");
    }
    for (std::size_t i = 0; i < r_samples.size(); ++i) {
        if (!(r_samples[i] > 0.0)) {
            throw NumericError("recover_p: nonpositive r sample at index " + std::to_string(i));
        }
    }
    const double ht = tg.dt();
    std::vector<double> lr(r_samples.size());
    std::transform(r_samples.begin(), r_samples.end(), lr.begin(),
                   [](double v) { return std::log(v); });
    std::vector<double> p(lr.size());
    const std::size_t nt = lr.size() - 1;
    p[0] = (-3.0 * lr[0] + 4.0 * lr[1] - lr[2]) / (2.0 * ht);
    for (std::size_t n = 1; n < nt; ++n) {
        p[n] = (lr[n + 1] - lr[n - 1]) / (2.0 * ht);
    }
    p[nt] = (3.0 * lr[nt] - 4.0 * lr[nt - 1] + lr[nt - 2]) / (2.0 * ht);
    return p;
}

/// u = v / r at the final time.
inline Array2D recover_u(const FieldLevel& v_final, double r_final) {
    if (r_final == 0.0) {
        throw NumericError("recover_u: r at final time is zero");
    }
    Array2D u(v_final.values.nx(), v_final.values.ny());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u.data()[i] = v_final.values.data()[i] / r_final;
    }
    return u;
}

/// Explicit time march of the transformed problem, with the
/// overdetermination closed by quadrature before every step.
///
/// When the data passes the discrete compatibility check
/// |Q(phi) - E(0)| <= 1% |E(0)|, E is rescaled by Q(phi)/E(0) so that
/// r(0) = 1 exactly; incompatible data runs against the raw E and keeps
/// its incompatibility visible in r(0).
inline SolveResult march(const problems::ProblemData& prob, const SolveConfig& cfg) {
    auto t_start = std::chrono::steady_clock::now();

    const grid::Grid2D g = build_grid(cfg);
    const quad::ProductRule rule = build_rule(cfg, g);
    const grid::TimeGrid& tg = cfg.time_grid;
    const double ht = tg.dt();
    const long nt = tg.step_count;

    const double ht_max = stability_limit(g);
    if (ht > ht_max * kStabilitySlack) {
        long suggested = static_cast<long>(std::ceil(tg.horizon / ht_max));
        throw UnstableConfigError(
            "march: ht=" + std::to_string(ht) + " exceeds the stability limit " +
                std::to_string(ht_max) + " (method " + method_name(cfg.method) + ", " +
                std::to_string(cfg.nx) + "x" + std::to_string(cfg.ny) +
                "); smallest stable Nt is " + std::to_string(suggested),
            suggested);
    }

    const std::size_t px = g.x.nodes.size(), py = g.y.nodes.size();
    FieldLevel level{Array2D(px, py), 0};
    for (std::size_t i = 0; i < px; ++i) {
        for (std::size_t j = 0; j < py; ++j) {
            level.values(i, j) = prob.phi(g.x.nodes[i], g.y.nodes[j]);
        }
    }
    apply_boundary(level);

    double e_scale = 1.0;
    {
        double qphi = quad::integrate(rule, level.values);
        double e0 = prob.E(0.0);
        if (e0 != 0.0 && std::abs(qphi - e0) <= 0.01 * std::abs(e0)) {
            e_scale = qphi / e0;
        }
    }

    const bool uniform = cfg.method != Method::NonUniformLobatto;
    const double hx = g.x.nodes[1] - g.x.nodes[0];
    const double hy = g.y.nodes[1] - g.y.nodes[0];
    const double ax = ht / (hx * hx), ay = ht / (hy * hy);
    detail::AxisStencil sx(g.x.nodes), sy(g.y.nodes);

    std::vector<double> r(nt + 1);
    Array2D f_buf(px, py);
    Array2D next(px, py);

    std::vector<Array2D> f_table;
    if (cfg.memoize_f) {
        f_table.reserve(nt);
        for (long n = 0; n < nt; ++n) {
            Array2D fn(px, py);
            double t = tg.t(n);
            for (std::size_t i = 1; i + 1 < px; ++i) {
                for (std::size_t j = 1; j + 1 < py; ++j) {
                    fn(i, j) = prob.f(g.x.nodes[i], g.y.nodes[j], t);
                }
            }
            f_table.push_back(std::move(fn));
        }
    }

    for (long n = 0; n < nt; ++n) {
        const double t = tg.t(n);
        const double En = prob.E(t) * e_scale;
        if (En == 0.0) {
            throw NumericError("march: E vanishes at t=" + std::to_string(t));
        }
        r[n] = quad::integrate(rule, level.values) / En;
        // a non-finite value anywhere in the level poisons the reduction
        if (!std::isfinite(r[n])) {
            throw DivergenceError("march: non-finite values at step " + std::to_string(n), n);
        }

        const Array2D* fn = &f_buf;
        if (cfg.memoize_f) {
            fn = &f_table[n];
        } else {
            for (std::size_t i = 1; i + 1 < px; ++i) {
                for (std::size_t j = 1; j + 1 < py; ++j) {
                    f_buf(i, j) = prob.f(g.x.nodes[i], g.y.nodes[j], t);
                }
            }
        }

        if (uniform) {
            detail::step_interior_uniform(level.values, next, ax, ay, ht, r[n], *fn);
        } else {
            detail::step_interior_nonuniform(level.values, next, sx, sy, ht, r[n], *fn);
        }
        std::swap(level.values, next);
        level.time_index = n + 1;
        apply_boundary(level);

        if (cfg.progress && (n + 1) % 1000 == 0) {
            cfg.progress(n + 1, nt);
        }
    }

    const double ET = prob.E(tg.horizon) * e_scale;
    if (ET == 0.0) {
        throw NumericError("march: E vanishes at the final time");
    }
    r[nt] = quad::integrate(rule, level.values) / ET;
    if (!std::isfinite(r[nt])) {
        throw DivergenceError("march: non-finite values at step " + std::to_string(nt), nt);
    }

    SolveResult res;
    res.u_final = recover_u(level, r[nt]);
    res.v_final = std::move(level);
    res.p_samples = recover_p(r, tg);
    res.r_samples = std::move(r);
    res.stability_margin = ht / ht_max;
    res.e_scale = e_scale;
    res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            t_start)
                      .count();
    return res;
}

}  // namespace heatinv::fd
