#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "heatinv/errors.hpp"

namespace heatinv::grid {

enum class AxisKind { Uniform, Lobatto };

/// 1D node set on [0,1]. Lobatto axes also carry quadrature weights,
/// already mapped so that they sum to 1.
struct Axis {
    std::vector<double> nodes;
    AxisKind kind = AxisKind::Uniform;
    std::vector<double> weights;  // empty for Uniform

    std::size_t size() const { return nodes.size(); }
    /// Interval count (nodes.size() - 1).
    std::size_t intervals() const { return nodes.size() - 1; }
};

/// Uniform partition of [0,T] into nt steps.
struct TimeGrid {
    double horizon = 0.0;
    long step_count = 0;

    double dt() const { return horizon / static_cast<double>(step_count); }
    double t(long n) const { return static_cast<double>(n) * dt(); }
    long samples() const { return step_count + 1; }
};

struct Grid2D {
    Axis x;
    Axis y;
};

/// n+1 equally spaced nodes from 0 to 1.
inline Axis uniform_axis(int n) {
    if (n < 2) {
        throw InvalidArgumentError("uniform_axis: resolution must be >= 2, got " +
                                   std::to_string(n));
    }
    Axis a;
    a.kind = AxisKind::Uniform;
    a.nodes.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        a.nodes[i] = static_cast<double>(i) / n;
    }
    a.nodes[0] = 0.0;
    a.nodes[n] = 1.0;
    return a;
}

namespace detail {

/// Legendre polynomial P_n and its first derivative at x, by the
/// three-term recurrence (derivative from the standard identity).
inline std::pair<double, double> legendre_pair(int n, double x) {
    double pm1 = 1.0, p = x;
    for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p - (k - 1.0) * pm1) / k;
        pm1 = p;
        p = pk;
    }
    double dp = n * (x * p - pm1) / (x * x - 1.0);
    return {p, dp};
}

}  // namespace detail

/// n+1 Legendre-Gauss-Lobatto nodes mapped from [-1,1] to [0,1], with
/// weights scaled by 1/2 so the rule integrates the constant 1 to 1.
///
/// Interior nodes are the roots of P_n', found by Newton iteration from
/// Chebyshev-Lobatto seeds cos(pi i / n); the second derivative comes
/// from the Legendre ODE. Weights use A_i = 2 / (n(n+1) P_n(x_i)^2).
inline Axis lobatto_axis(int n) {
    if (n < 2) {
        throw InvalidArgumentError("lobatto_axis: resolution must be >= 2, got " +
                                   std::to_string(n));
    }
    std::vector<double> ref(n + 1);  // nodes on [-1,1], ascending
    ref[0] = -1.0;
    ref[n] = 1.0;
    for (int i = 1; i < n; ++i) {
        double x = -std::cos(M_PI * i / n);
        bool converged = false;
        for (int it = 0; it < 100; ++it) {
            auto [p, dp] = detail::legendre_pair(n, x);
            // P_n'' from (1-x^2) P'' - 2x P' + n(n+1) P = 0
            double d2p = (2.0 * x * dp - n * (n + 1.0) * p) / (1.0 - x * x);
            double step = dp / d2p;
            x -= step;
            if (std::abs(step) < 1e-14) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw NumericError("lobatto_axis: Newton iteration failed at n=" +
                               std::to_string(n) + ", node " + std::to_string(i));
        }
        ref[i] = x;
    }
    // Symmetrize so nodes[i] + nodes[n-i] is exactly zero on [-1,1].
    for (int i = 1; i <= n / 2; ++i) {
        double v = 0.5 * (ref[i] - ref[n - i]);
        ref[i] = v;
        ref[n - i] = -v;
    }

    Axis a;
    a.kind = AxisKind::Lobatto;
    a.nodes.resize(n + 1);
    a.weights.resize(n + 1);
    double wend = 2.0 / (n * (n + 1.0));
    for (int i = 0; i <= n; ++i) {
        a.nodes[i] = 0.5 * (ref[i] + 1.0);
        if (i == 0 || i == n) {
            a.weights[i] = 0.5 * wend;
        } else {
            double p = detail::legendre_pair(n, ref[i]).first;
            a.weights[i] = 0.5 * 2.0 / (n * (n + 1.0) * p * p);
        }
    }
    a.nodes[0] = 0.0;
    a.nodes[n] = 1.0;
    return a;
}

/// Uniform time grid with ht = T/nt.
inline TimeGrid time_grid(double T, long nt) {
    if (!(T > 0.0)) {
        throw InvalidArgumentError("time_grid: horizon must be positive");
    }
    if (nt < 1) {
        throw InvalidArgumentError("time_grid: step count must be >= 1");
    }
    return TimeGrid{T, nt};
}

inline Grid2D make_grid(const Axis& x, const Axis& y) {
    if (x.kind != y.kind) {
        throw InvalidArgumentError("make_grid: axis kinds must match");
    }
    return Grid2D{x, y};
}

}  // namespace heatinv::grid
