#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "heatinv/array2d.hpp"
#include "heatinv/errors.hpp"
#include "heatinv/grid.hpp"

namespace heatinv::quad {

enum class RuleKind { Trapezoid, Simpson, LobattoProduct };

/// Tensor-product quadrature over the unit square, reified as an explicit
/// weight matrix so that every integral is one fixed-order weighted
/// reduction (row-major), bit-reproducible across runs.
struct ProductRule {
    std::vector<double> x_nodes;
    std::vector<double> y_nodes;
    Array2D weights;  // weights(i, j) for the node pair (x_i, y_j)
    // 1D factors with weights(i,j) = x_weights[i] * y_weights[j]; kept so
    // tensor contractions can integrate one direction at a time.
    std::vector<double> x_weights;
    std::vector<double> y_weights;
    RuleKind label = RuleKind::Trapezoid;

    std::size_t nx() const { return x_nodes.size(); }
    std::size_t ny() const { return y_nodes.size(); }
};

namespace detail {

inline std::vector<double> trapezoid_weights_1d(std::size_t intervals) {
    double h = 1.0 / static_cast<double>(intervals);
    std::vector<double> w(intervals + 1, h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
}

inline std::vector<double> simpson_weights_1d(std::size_t intervals) {
    double h = 1.0 / static_cast<double>(intervals);
    std::vector<double> w(intervals + 1, 0.0);
    for (std::size_t i = 0; i + 2 <= intervals; i += 2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    return w;
}

inline ProductRule tensor_rule(const grid::Grid2D& g,
                               const std::vector<double>& wx,
                               const std::vector<double>& wy, RuleKind label) {
    ProductRule r;
    r.x_nodes = g.x.nodes;
    r.y_nodes = g.y.nodes;
    r.x_weights = wx;
    r.y_weights = wy;
    r.label = label;
    r.weights = Array2D(wx.size(), wy.size());
    for (std::size_t i = 0; i < wx.size(); ++i) {
        for (std::size_t j = 0; j < wy.size(); ++j) {
            r.weights(i, j) = wx[i] * wy[j];
        }
    }
    return r;
}

inline void require_uniform(const grid::Grid2D& g, const char* who) {
    if (g.x.kind != grid::AxisKind::Uniform || g.y.kind != grid::AxisKind::Uniform) {
        throw InvalidArgumentError(std::string(who) + ": grid axes must be uniform");
    }
}

}  // namespace detail

/// Product trapezoidal rule on a uniform grid.
inline ProductRule trapezoid_rule(const grid::Grid2D& g) {
    detail::require_uniform(g, "trapezoid_rule");
    return detail::tensor_rule(g, detail::trapezoid_weights_1d(g.x.intervals()),
                               detail::trapezoid_weights_1d(g.y.intervals()),
                               RuleKind::Trapezoid);
}

/// Product Simpson's rule on a uniform grid; interval counts must be even.
inline ProductRule simpson_rule(const grid::Grid2D& g) {
    detail::require_uniform(g, "simpson_rule");
    if (g.x.intervals() % 2 != 0 || g.y.intervals() % 2 != 0) {
        throw InvalidArgumentError("simpson_rule: interval counts must be even, got " +
                                   std::to_string(g.x.intervals()) + "x" +
                                   std::to_string(g.y.intervals()));
    }
    return detail::tensor_rule(g, detail::simpson_weights_1d(g.x.intervals()),
                               detail::simpson_weights_1d(g.y.intervals()),
                               RuleKind::Simpson);
}

/// Product Gauss-Lobatto rule: weights(i,j) = A_i * A_j with the
/// [0,1]-mapped axis weights.
inline ProductRule lobatto_rule(const grid::Grid2D& g) {
    if (g.x.kind != grid::AxisKind::Lobatto || g.y.kind != grid::AxisKind::Lobatto ||
        g.x.weights.empty() || g.y.weights.empty()) {
        throw InvalidArgumentError("lobatto_rule: grid axes must be Lobatto with weights");
    }
    return detail::tensor_rule(g, g.x.weights, g.y.weights, RuleKind::LobattoProduct);
}

/// Weighted reduction of a sample array matching the rule's nodes.
inline double integrate(const ProductRule& rule, const Array2D& samples) {
    if (samples.nx() != rule.nx() || samples.ny() != rule.ny()) {
        throw InvalidArgumentError("integrate: sample shape " + std::to_string(samples.nx()) +
                                   "x" + std::to_string(samples.ny()) + " does not match rule " +
                                   std::to_string(rule.nx()) + "x" + std::to_string(rule.ny()));
    }
    const double* w = rule.weights.data();
    const double* s = samples.data();
    const std::size_t n = samples.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += w[i] * s[i];
    }
    return acc;
}

/// Sample a callable f(x,y) on the rule's nodes and integrate.
template <typename F>
double integrate_fn(const ProductRule& rule, F&& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nx(); ++i) {
        for (std::size_t j = 0; j < rule.ny(); ++j) {
            acc += rule.weights(i, j) * f(rule.x_nodes[i], rule.y_nodes[j]);
        }
    }
    return acc;
}

}  // namespace heatinv::quad
