#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "heatinv/array2d.hpp"
#include "heatinv/errors.hpp"
#include "heatinv/grid.hpp"
#include "heatinv/problems.hpp"
#include "heatinv/quadrature.hpp"

namespace heatinv::spectral {

inline constexpr double kSqrt2 = 1.4142135623730951;

// ---------------------------------------------------------------------------
// Mode bookkeeping
// ---------------------------------------------------------------------------

enum class Branch { Zero, Cosine, Associated };

/// Index of one root function. The flat index packs the three branches the
/// way the eigenfunction tables are usually written: 0 for the constant-in-x
/// mode, 2m-1 for the cosine modes, 2m for the associated modes.
struct ModeIndex {
    Branch branch = Branch::Zero;
    int m = 0;  // 0 only for the Zero branch
    int k = 1;

    int flat() const {
        switch (branch) {
            case Branch::Zero:
                return 0;
            case Branch::Cosine:
                return 2 * m - 1;
            case Branch::Associated:
                return 2 * m;
        }
        return 0;
    }

    static ModeIndex from_flat(int flat, int k) {
        if (flat < 0 || k < 1) {
            throw InvalidArgumentError("ModeIndex: flat index must be >= 0 and k >= 1");
        }
        if (flat == 0) return {Branch::Zero, 0, k};
        if (flat % 2 == 1) return {Branch::Cosine, (flat + 1) / 2, k};
        return {Branch::Associated, flat / 2, k};
    }
};

/// Truncation of the double series: m <= M (flat indices up to 2M), k <= K.
struct Truncation {
    int M = 0;
    int K = 1;

    int flat_count() const { return 2 * M + 1; }
};

/// mu_{m,k} = (2 pi m)^2 + (pi k)^2.
inline double eigenvalue(int m, int k) {
    if (k < 1 || m < 0) {
        throw InvalidArgumentError("eigenvalue: need m >= 0 and k >= 1");
    }
    double a = 2.0 * M_PI * m;
    double b = M_PI * k;
    return a * a + b * b;
}

/// Root functions of the nonlocal spectral problem (normalized).
inline double root_function(const ModeIndex& idx, double x, double y) {
    double vy = kSqrt2 * std::sin(M_PI * idx.k * y);
    switch (idx.branch) {
        case Branch::Zero:
            return 2.0 * vy;
        case Branch::Cosine:
            return 4.0 * std::cos(2.0 * M_PI * idx.m * x) * vy;
        case Branch::Associated:
            return 4.0 * (1.0 - x) * std::sin(2.0 * M_PI * idx.m * x) * vy;
    }
    return 0.0;
}

/// Root functions of the adjoint problem; biorthonormal to root_function.
inline double adjoint_function(const ModeIndex& idx, double x, double y) {
    double vy = kSqrt2 * std::sin(M_PI * idx.k * y);
    switch (idx.branch) {
        case Branch::Zero:
            return x * vy;
        case Branch::Cosine:
            return x * std::cos(2.0 * M_PI * idx.m * x) * vy;
        case Branch::Associated:
            return std::sin(2.0 * M_PI * idx.m * x) * vy;
    }
    return 0.0;
}

/// Quadrature approximation of the L2 inner product over the unit square.
template <typename F, typename G>
double inner_product(F&& f, G&& g, const quad::ProductRule& rule) {
    return quad::integrate_fn(rule, [&](double x, double y) { return f(x, y) * g(x, y); });
}

// ---------------------------------------------------------------------------
// Coefficient storage
// ---------------------------------------------------------------------------

/// Coefficients of phi and f against the adjoint system, for all modes
/// within a truncation; f is sampled at every node of the time grid.
class CoefficientTable {
public:
    CoefficientTable() = default;
    CoefficientTable(Truncation trunc, grid::TimeGrid tg)
        : trunc_(trunc),
          tg_(tg),
          phi_(static_cast<std::size_t>(trunc.flat_count()) * trunc.K, 0.0),
          f_(static_cast<std::size_t>(trunc.flat_count()) * trunc.K * tg.samples(), 0.0) {
        if (trunc.M < 0 || trunc.K < 1) {
            throw InvalidArgumentError("CoefficientTable: need M >= 0 and K >= 1");
        }
    }

    const Truncation& truncation() const { return trunc_; }
    const grid::TimeGrid& time_grid() const { return tg_; }

    double phi(int flat, int k) const { return phi_[pos(flat, k)]; }
    double& phi(int flat, int k) { return phi_[pos(flat, k)]; }

    /// f_{flat,k} sampled over the time grid (length Nt+1).
    const double* f(int flat, int k) const { return f_.data() + pos(flat, k) * tg_.samples(); }
    double* f(int flat, int k) { return f_.data() + pos(flat, k) * tg_.samples(); }

private:
    std::size_t pos(int flat, int k) const {
        if (flat < 0 || flat >= trunc_.flat_count() || k < 1 || k > trunc_.K) {
            throw InvalidArgumentError("CoefficientTable: mode (" + std::to_string(flat) + "," +
                                       std::to_string(k) + ") outside truncation");
        }
        return static_cast<std::size_t>(flat) * trunc_.K + (k - 1);
    }

    Truncation trunc_;
    grid::TimeGrid tg_;
    std::vector<double> phi_;
    std::vector<double> f_;
};

/// A scalar function of time sampled on a TimeGrid; used for p(t).
struct CoefficientFunction {
    grid::TimeGrid tg;
    std::vector<double> samples;

    static CoefficientFunction zero(const grid::TimeGrid& tg) {
        return {tg, std::vector<double>(tg.samples(), 0.0)};
    }
};

namespace detail {

inline double adjoint_xfactor(int flat, double x) {
    if (flat == 0) return x;
    int m = (flat + 1) / 2;
    if (flat % 2 == 0) return std::sin(2.0 * M_PI * m * x);
    return x * std::cos(2.0 * M_PI * m * x);
}

inline void check_resolution(const quad::ProductRule& rule, const Truncation& trunc) {
    std::size_t need = 8u * static_cast<std::size_t>(std::max(2 * trunc.M, trunc.K));
    if (rule.nx() < need || rule.ny() < need) {
        throw UnderResolvedError("expand: rule supplies " + std::to_string(rule.nx()) + "x" +
                                 std::to_string(rule.ny()) + " nodes but truncation M=" +
                                 std::to_string(trunc.M) + ", K=" + std::to_string(trunc.K) +
                                 " needs at least " + std::to_string(need) + " per axis");
    }
}

/// Coefficients of a static field against the adjoint system, by tensor
/// contraction (y first, then x). Requires separable 1D weights, which all
/// three product rules have.
template <typename Field>
std::vector<double> contract(const Field& field, const Truncation& trunc,
                             const quad::ProductRule& rule) {
    const std::size_t nx = rule.nx(), ny = rule.ny();
    const int K = trunc.K, F = trunc.flat_count();

    // wy_j * sqrt2 sin(pi k y_j), k = 1..K
    std::vector<double> ysin(static_cast<std::size_t>(K) * ny);
    for (int k = 1; k <= K; ++k) {
        for (std::size_t j = 0; j < ny; ++j) {
            ysin[(k - 1) * ny + j] =
                rule.y_weights[j] * kSqrt2 * std::sin(M_PI * k * rule.y_nodes[j]);
        }
    }

    // G(i, k) = sum_j wy_j field(x_i, y_j) ysin_k(y_j)
    std::vector<double> G(nx * K, 0.0);
    std::vector<double> row(ny);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            row[j] = field(rule.x_nodes[i], rule.y_nodes[j]);
        }
        for (int k = 0; k < K; ++k) {
            double acc = 0.0;
            const double* ys = ysin.data() + static_cast<std::size_t>(k) * ny;
            for (std::size_t j = 0; j < ny; ++j) {
                acc += row[j] * ys[j];
            }
            G[i * K + k] = acc;
        }
    }

    std::vector<double> out(static_cast<std::size_t>(F) * K, 0.0);
    for (int flat = 0; flat < F; ++flat) {
        for (int k = 0; k < K; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < nx; ++i) {
                acc += rule.x_weights[i] * adjoint_xfactor(flat, rule.x_nodes[i]) * G[i * K + k];
            }
            out[static_cast<std::size_t>(flat) * K + k] = acc;
        }
    }
    return out;
}

}  // namespace detail

/// Coefficients of a static field phi(x,y) against the adjoint system,
/// row-major over (flat, k).
template <typename Field>
std::vector<double> expand_static(const Field& field, const Truncation& trunc,
                                  const quad::ProductRule& rule) {
    detail::check_resolution(rule, trunc);
    return detail::contract(field, trunc, rule);
}

/// Full coefficient table of a problem: phi once, f at every time node.
template <typename Phi, typename F3>
CoefficientTable expand(const Phi& phi, const F3& f, const Truncation& trunc,
                        const quad::ProductRule& rule, const grid::TimeGrid& tg) {
    detail::check_resolution(rule, trunc);
    CoefficientTable table(trunc, tg);

    auto cphi = detail::contract(phi, trunc, rule);
    for (int flat = 0; flat < trunc.flat_count(); ++flat) {
        for (int k = 1; k <= trunc.K; ++k) {
            table.phi(flat, k) = cphi[static_cast<std::size_t>(flat) * trunc.K + (k - 1)];
        }
    }
    for (long n = 0; n < tg.samples(); ++n) {
        double t = tg.t(n);
        auto cf = detail::contract([&](double x, double y) { return f(x, y, t); }, trunc, rule);
        for (int flat = 0; flat < trunc.flat_count(); ++flat) {
            for (int k = 1; k <= trunc.K; ++k) {
                table.f(flat, k)[n] = cf[static_cast<std::size_t>(flat) * trunc.K + (k - 1)];
            }
        }
    }
    return table;
}

inline CoefficientTable expand(const problems::ProblemData& prob, const Truncation& trunc,
                               const quad::ProductRule& rule, const grid::TimeGrid& tg) {
    return expand(prob.phi, prob.f, trunc, rule, tg);
}

// ---------------------------------------------------------------------------
// alpha coefficients
// ---------------------------------------------------------------------------

namespace detail {

/// Cumulative composite trapezoid of the samples: I[n] = int_0^{t_n}.
inline std::vector<double> cumulative_trapezoid(const std::vector<double>& v, double ht) {
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t n = 1; n < v.size(); ++n) {
        out[n] = out[n - 1] + 0.5 * ht * (v[n - 1] + v[n]);
    }
    return out;
}

/// One uncoupled alpha trace:
///   alpha(t) = phi e^{-mu t - I(t)} + int_0^t f(tau) e^{-mu(t-tau) - (I(t)-I(tau))} dtau
/// with all time integrals as composite trapezoid on the grid. The update
///   R_n = g_n R_{n-1} + ht/2 (g_n f_{n-1} + f_n),  g_n = e^{-(mu ht + I_n - I_{n-1})}
/// reproduces the composite rule exactly while staying stable for stiff mu.
struct AlphaRecurrence {
    double mu;
    double ht;
    const std::vector<double>& I;

    void run(double phi0, const double* f, std::vector<double>& alpha) const {
        alpha[0] = phi0;
        double D = 1.0, R = 0.0;
        for (std::size_t n = 1; n < alpha.size(); ++n) {
            double g = std::exp(-(mu * ht + (I[n] - I[n - 1])));
            D *= g;
            R = g * R + 0.5 * ht * (g * f[n - 1] + f[n]);
            alpha[n] = phi0 * D + R;
        }
    }
};

}  // namespace detail

/// alpha traces for every mode of the table, under the given p(t).
/// Layout mirrors CoefficientTable: trace(flat, k) is a pointer to Nt+1
/// samples. The cosine branch carries the secular coupling to the
/// associated branch:
///   alpha_{2m-1,k}(t) = [phi_{2m-1,k} - 4 pi m phi_{2m,k} t] e^{-mu t - I(t)}
///     + int_0^t [f_{2m-1,k} - 4 pi m f_{2m,k} (t - tau)] e^{-mu(t-tau)-(I(t)-I(tau))} dtau.
class AlphaTraces {
public:
    AlphaTraces(const CoefficientTable& table, const CoefficientFunction& p) {
        const auto& tg = table.time_grid();
        if (p.samples.size() != static_cast<std::size_t>(tg.samples()) ||
            std::abs(p.tg.horizon - tg.horizon) > 1e-12 * std::max(1.0, tg.horizon) ||
            p.tg.step_count != tg.step_count) {
            throw InvalidArgumentError("alpha: p and table must share the time grid");
        }
        trunc_ = table.truncation();
        nt_ = static_cast<std::size_t>(tg.samples());
        data_.assign(static_cast<std::size_t>(trunc_.flat_count()) * trunc_.K * nt_, 0.0);

        const double ht = tg.dt();
        auto I = detail::cumulative_trapezoid(p.samples, ht);
        std::vector<double> buf(nt_);

        for (int k = 1; k <= trunc_.K; ++k) {
            detail::AlphaRecurrence rec0{eigenvalue(0, k), ht, I};
            rec0.run(table.phi(0, k), table.f(0, k), buf);
            store(0, k, buf);

            for (int m = 1; m <= trunc_.M; ++m) {
                const double mu = eigenvalue(m, k);
                detail::AlphaRecurrence rec{mu, ht, I};

                // associated branch (flat 2m)
                rec.run(table.phi(2 * m, k), table.f(2 * m, k), buf);
                store(2 * m, k, buf);

                // cosine branch (flat 2m-1) with secular terms; R and Q are
                // the plain and (t - tau)-weighted trapezoid integrals of
                // f_{2m,k}, advanced jointly:
                //   Q_n = g_n (Q_{n-1} + ht R_{n-1} + ht^2/2 f_{n-1})
                const double* f1 = table.f(2 * m - 1, k);
                const double* f2 = table.f(2 * m, k);
                const double phi1 = table.phi(2 * m - 1, k);
                const double phi2 = table.phi(2 * m, k);
                const double c = 4.0 * M_PI * m;
                double D = 1.0, R1 = 0.0, R2 = 0.0, Q = 0.0;
                buf[0] = phi1;
                for (std::size_t n = 1; n < nt_; ++n) {
                    double g = std::exp(-(mu * ht + (I[n] - I[n - 1])));
                    D *= g;
                    Q = g * (Q + ht * R2 + 0.5 * ht * ht * f2[n - 1]);
                    R1 = g * R1 + 0.5 * ht * (g * f1[n - 1] + f1[n]);
                    R2 = g * R2 + 0.5 * ht * (g * f2[n - 1] + f2[n]);
                    double t = ht * static_cast<double>(n);
                    buf[n] = (phi1 - c * phi2 * t) * D + R1 - c * Q;
                }
                store(2 * m - 1, k, buf);
            }
        }
    }

    const double* trace(int flat, int k) const { return data_.data() + pos(flat, k) * nt_; }
    double at(int flat, int k, long n) const { return trace(flat, k)[n]; }
    const Truncation& truncation() const { return trunc_; }

private:
    std::size_t pos(int flat, int k) const {
        return (static_cast<std::size_t>(flat) * trunc_.K + (k - 1));
    }
    void store(int flat, int k, const std::vector<double>& buf) {
        std::copy(buf.begin(), buf.end(), data_.begin() + pos(flat, k) * nt_);
    }

    Truncation trunc_;
    std::size_t nt_ = 0;
    std::vector<double> data_;
};

/// alpha values for every mode at one time index, row-major over (flat, k).
inline std::vector<double> alpha_coefficients(const CoefficientFunction& p,
                                              const CoefficientTable& table, long n) {
    if (n < 0 || n >= table.time_grid().samples()) {
        throw InvalidArgumentError("alpha_coefficients: time index out of range");
    }
    AlphaTraces traces(table, p);
    const Truncation& tr = table.truncation();
    std::vector<double> out(static_cast<std::size_t>(tr.flat_count()) * tr.K);
    for (int flat = 0; flat < tr.flat_count(); ++flat) {
        for (int k = 1; k <= tr.K; ++k) {
            out[static_cast<std::size_t>(flat) * tr.K + (k - 1)] = traces.at(flat, k, n);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Series solution of the direct problem
// ---------------------------------------------------------------------------

namespace detail {

inline double series_point(const AlphaTraces& traces, long n, double x, double y) {
    const Truncation& tr = traces.truncation();
    double acc = 0.0;
    for (int k = 1; k <= tr.K; ++k) {
        double vy = kSqrt2 * std::sin(M_PI * k * y);
        acc += traces.at(0, k, n) * 2.0 * vy;
        for (int m = 1; m <= tr.M; ++m) {
            acc += traces.at(2 * m - 1, k, n) * 4.0 * std::cos(2.0 * M_PI * m * x) * vy;
            acc += traces.at(2 * m, k, n) * 4.0 * (1.0 - x) * std::sin(2.0 * M_PI * m * x) * vy;
        }
    }
    return acc;
}

}  // namespace detail

/// Truncated series solution u(x, y, t_n) of the direct problem for the
/// given coefficient p(t).
inline double series_solution(const CoefficientFunction& p, const CoefficientTable& table,
                              double x, double y, long n) {
    AlphaTraces traces(table, p);
    return detail::series_point(traces, n, x, y);
}

/// Series solution on a lattice of sample points (alpha computed once).
inline Array2D series_solution_grid(const CoefficientFunction& p, const CoefficientTable& table,
                                    const std::vector<double>& xs, const std::vector<double>& ys,
                                    long n) {
    AlphaTraces traces(table, p);
    Array2D out(xs.size(), ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < ys.size(); ++j) {
            out(i, j) = detail::series_point(traces, n, xs[i], ys[j]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fixed-point map, inverse solve, contraction estimate
// ---------------------------------------------------------------------------

/// E(t) and E'(t) sampled on a time grid.
struct EData {
    std::vector<double> E;
    std::vector<double> E_prime;
};

/// Sample E and E' from problem data; E' falls back to second-order central
/// differences of E (one-sided at the endpoints) when no analytic form is given.
inline EData sample_E(const problems::ProblemData& prob, const grid::TimeGrid& tg) {
    EData out;
    long n = tg.samples();
    out.E.resize(n);
    out.E_prime.resize(n);
    for (long i = 0; i < n; ++i) {
        out.E[i] = prob.E(tg.t(i));
    }
    if (prob.E_prime) {
        for (long i = 0; i < n; ++i) {
            out.E_prime[i] = prob.E_prime(tg.t(i));
        }
    } else {
        double ht = tg.dt();
        for (long i = 1; i + 1 < n; ++i) {
            out.E_prime[i] = (out.E[i + 1] - out.E[i - 1]) / (2.0 * ht);
        }
        out.E_prime[0] = (-3.0 * out.E[0] + 4.0 * out.E[1] - out.E[2]) / (2.0 * ht);
        out.E_prime[n - 1] =
            (3.0 * out.E[n - 1] - 4.0 * out.E[n - 2] + out.E[n - 3]) / (2.0 * ht);
    }
    return out;
}

/// One application of the fixed-point map:
///   P(p)(t) = (1/E)[ -E' + sum_{k odd} (4 sqrt2/(pi k)) f_{0,k}
///                    - 4 sqrt2 pi k alpha_{0,k}[p]
///                    + sum_{k odd} sum_m (4 sqrt2/(pi^2 k m)) f_{2m,k}
///                    - (16 sqrt2 m / k + 4 sqrt2 k / m) alpha_{2m,k}[p] ]
/// with the sums truncated by the table and accumulated in increasing k
/// then increasing m.
inline CoefficientFunction fixed_point_map(const CoefficientFunction& p,
                                           const CoefficientTable& table, const EData& e) {
    const auto& tg = table.time_grid();
    const Truncation& tr = table.truncation();
    const std::size_t n = static_cast<std::size_t>(tg.samples());
    if (e.E.size() != n || e.E_prime.size() != n) {
        throw InvalidArgumentError("fixed_point_map: E data does not match the time grid");
    }
    if (tr.K < 1) {
        throw InvalidArgumentError("fixed_point_map: table lacks odd-k modes");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (e.E[i] == 0.0) {
            throw NumericError("fixed_point_map: E vanishes at sample " + std::to_string(i));
        }
    }

    AlphaTraces traces(table, p);
    std::vector<double> acc(n);
    for (std::size_t i = 0; i < n; ++i) {
        acc[i] = -e.E_prime[i];
    }
    for (int k = 1; k <= tr.K; k += 2) {
        const double ck_f = 4.0 * kSqrt2 / (M_PI * k);
        const double ck_a = 4.0 * kSqrt2 * M_PI * k;
        const double* f0 = table.f(0, k);
        const double* a0 = traces.trace(0, k);
        for (std::size_t i = 0; i < n; ++i) {
            acc[i] += ck_f * f0[i] - ck_a * a0[i];
        }
        for (int m = 1; m <= tr.M; ++m) {
            const double cm_f = 4.0 * kSqrt2 / (M_PI * M_PI * k * m);
            const double cm_a = 16.0 * kSqrt2 * m / k + 4.0 * kSqrt2 * k / m;
            const double* f2 = table.f(2 * m, k);
            const double* a2 = traces.trace(2 * m, k);
            for (std::size_t i = 0; i < n; ++i) {
                acc[i] += cm_f * f2[i] - cm_a * a2[i];
            }
        }
    }
    CoefficientFunction out{tg, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        out.samples[i] = acc[i] / e.E[i];
    }
    return out;
}

struct InverseResult {
    CoefficientFunction p;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
    std::vector<double> residual_history;
    long clamped_samples = 0;  // negative iterate values clamped to zero
};

/// Successive approximation p_{j+1} = P(p_j) from p_0 = 0. Negative
/// intermediate values are clamped to zero to stay in the map's domain;
/// the count is reported. Non-convergence is reported, not thrown.
inline InverseResult solve_inverse(const CoefficientTable& table, const EData& e, double tol,
                                   int max_iter) {
    if (!(tol > 0.0)) {
        throw InvalidArgumentError("solve_inverse: tolerance must be positive");
    }
    InverseResult res;
    res.p = CoefficientFunction::zero(table.time_grid());
    for (int it = 0; it < max_iter; ++it) {
        CoefficientFunction next = fixed_point_map(res.p, table, e);
        double r = 0.0;
        for (std::size_t i = 0; i < next.samples.size(); ++i) {
            r = std::max(r, std::abs(next.samples[i] - res.p.samples[i]));
        }
        for (double& v : next.samples) {
            if (v < 0.0) {
                v = 0.0;
                ++res.clamped_samples;
            }
        }
        res.p = std::move(next);
        res.iterations = it + 1;
        res.residual = r;
        res.residual_history.push_back(r);
        if (r < tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

/// Truncated evaluation of the contraction constant
///   beta = T / min|E| * ( sum_{k odd} 4 sqrt2 pi k (|phi_{0,k}| + int_0^T |f_{0,k}|)
///        + sum_{k odd} sum_m (16 sqrt2 m/k + 4 sqrt2 k/m)(|phi_{2m,k}| + int_0^T |f_{2m,k}|) ).
inline double contraction_estimate(const CoefficientTable& table, const EData& e, double T) {
    const auto& tg = table.time_grid();
    const Truncation& tr = table.truncation();
    const std::size_t n = static_cast<std::size_t>(tg.samples());
    if (e.E.size() != n) {
        throw InvalidArgumentError("contraction_estimate: E data does not match the time grid");
    }
    double min_abs_e = std::abs(e.E[0]);
    for (double v : e.E) {
        min_abs_e = std::min(min_abs_e, std::abs(v));
    }
    if (min_abs_e == 0.0) {
        throw NumericError("contraction_estimate: E vanishes on the grid");
    }
    const double ht = tg.dt();
    auto trapz_abs = [&](const double* f) {
        double acc = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            acc += 0.5 * ht * (std::abs(f[i - 1]) + std::abs(f[i]));
        }
        return acc;
    };
    double sum = 0.0;
    for (int k = 1; k <= tr.K; k += 2) {
        double ck = 4.0 * kSqrt2 * M_PI * k;
        sum += ck * (std::abs(table.phi(0, k)) + trapz_abs(table.f(0, k)));
        for (int m = 1; m <= tr.M; ++m) {
            double cm = 16.0 * kSqrt2 * m / k + 4.0 * kSqrt2 * k / m;
            sum += cm * (std::abs(table.phi(2 * m, k)) + trapz_abs(table.f(2 * m, k)));
        }
    }
    return T / min_abs_e * sum;
}

// ---------------------------------------------------------------------------
// Assumption audit
// ---------------------------------------------------------------------------

struct CompatibilityCheck {
    std::string name;
    bool passed = true;
    double value = 0.0;  // worst offending value
    std::string detail;
};

struct CompatibilityReport {
    std::vector<CompatibilityCheck> checks;

    bool all_passed() const {
        for (const auto& c : checks) {
            if (!c.passed) return false;
        }
        return true;
    }
    int violations() const {
        int v = 0;
        for (const auto& c : checks) {
            if (!c.passed) ++v;
        }
        return v;
    }
};

/// Audit of the existence theorem's testable assumptions on sampled data.
/// Violations are reported, never thrown; the solvers run regardless.
inline CompatibilityReport check_compatibility(const problems::ProblemData& prob,
                                               const Truncation& trunc,
                                               const quad::ProductRule& rule,
                                               const grid::TimeGrid& tg) {
    constexpr double tol = 1e-10;
    CompatibilityReport report;

    // E(0) = integral of phi
    double qphi = quad::integrate_fn(rule, prob.phi);
    double e0 = prob.E(0.0);
    report.checks.push_back({"E0-compatibility", std::abs(qphi - e0) <= 1e-8, qphi - e0,
                             "E(0) - integral(phi) = " + std::to_string(e0 - qphi)});

    // E > 0 and E' <= 0 on samples
    EData e = sample_E(prob, tg);
    double min_e = e.E[0], max_ep = e.E_prime[0];
    for (std::size_t i = 0; i < e.E.size(); ++i) {
        min_e = std::min(min_e, e.E[i]);
        max_ep = std::max(max_ep, e.E_prime[i]);
    }
    report.checks.push_back({"E-positive", min_e > 0.0, min_e, "min E(t_n)"});
    report.checks.push_back({"E-prime-nonpositive", max_ep <= tol, max_ep, "max E'(t_n)"});

    // sign conditions on phi_{0,2k-1}, phi_{2m,2k-1} and f_{2m,2k-1}
    CoefficientTable table = expand(prob, trunc, rule, tg);
    double worst_phi0 = 0.0, worst_phi2m = 0.0, worst_f = 0.0, worst_minmax = 0.0;
    std::string where_phi0, where_phi2m;
    for (int k = 1; k <= trunc.K; k += 2) {
        double v = table.phi(0, k);
        if (v > worst_phi0) {
            worst_phi0 = v;
            where_phi0 = "phi_{0," + std::to_string(k) + "}";
        }
        for (int m = 1; m <= trunc.M; ++m) {
            double w = table.phi(2 * m, k);
            if (w > worst_phi2m) {
                worst_phi2m = w;
                where_phi2m = "phi_{" + std::to_string(2 * m) + "," + std::to_string(k) + "}";
            }
        }
        for (int m = 0; m <= trunc.M; ++m) {
            const double* f = table.f(2 * m, k);
            double fmin = f[0], fmax = f[0];
            for (long i = 0; i < tg.samples(); ++i) {
                fmin = std::min(fmin, f[i]);
                fmax = std::max(fmax, f[i]);
            }
            worst_f = std::min(worst_f, fmin);
            double rate = eigenvalue(m, k);
            double bound = fmax * (1.0 - std::exp(-rate * tg.horizon));
            worst_minmax = std::max(worst_minmax, bound - fmin);
        }
    }
    report.checks.push_back({"phi0-sign", worst_phi0 <= tol, worst_phi0,
                             worst_phi0 <= tol ? "all phi_{0,2k-1} <= 0" : where_phi0 + " > 0"});
    report.checks.push_back(
        {"phi2m-sign", worst_phi2m <= tol, worst_phi2m,
         worst_phi2m <= tol ? "all phi_{2m,2k-1} <= 0" : where_phi2m + " > 0"});
    report.checks.push_back({"f-nonnegative", worst_f >= -tol, worst_f, "min f_{2m,2k-1}(t_n)"});
    report.checks.push_back({"f-minmax", worst_minmax <= tol, worst_minmax,
                             "max over modes of bound - min f (sampled necessary condition)"});
    return report;
}

}  // namespace heatinv::spectral
