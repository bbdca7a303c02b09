#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <utility>

#include "heatinv/errors.hpp"

namespace heatinv::problems {

/// A complete inverse-problem instance: data (phi, f, E) plus, for
/// manufactured cases, the exact solution fields used to measure errors.
struct ProblemData {
    std::function<double(double, double)> phi;
    std::function<double(double, double, double)> f;  // f(x, y, t)
    std::function<double(double)> E;
    std::function<double(double)> E_prime;  // may be empty
    double T = 0.0;
    std::string label;

    std::function<double(double, double, double)> exact_u;  // may be empty
    std::function<double(double)> exact_p;                   // may be empty
    std::function<double(double)> exact_r;                   // may be empty

    bool has_exact() const { return static_cast<bool>(exact_u) && static_cast<bool>(exact_p); }
};

namespace detail {

// 15-point Gauss-Legendre nodes/weights on [-1,1] (positive half; mirrored).
inline constexpr std::array<double, 8> kGaussNodes = {
    0.0,
    0.2011940939974345,
    0.3941513470775634,
    0.5709721726085388,
    0.7244177313601701,
    0.8482065834104272,
    0.9372733924007060,
    0.9879925180204854,
};
inline constexpr std::array<double, 8> kGaussWeights = {
    0.2025782419255613,
    0.1984314853271116,
    0.1861610000155622,
    0.1662692058169939,
    0.1395706779261543,
    0.1071592204671719,
    0.0703660474881081,
    0.0307532419961173,
};

template <typename F>
double gauss15_panels(F&& f, int panels) {
    double h = 1.0 / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        double c = (p + 0.5) * h;
        double acc_p = kGaussWeights[0] * f(c);
        for (int q = 1; q < 8; ++q) {
            double d = 0.5 * h * kGaussNodes[q];
            acc_p += kGaussWeights[q] * (f(c - d) + f(c + d));
        }
        acc += 0.5 * h * acc_p;
    }
    return acc;
}

/// Adaptive composite 15-point Gauss on [0,1]: doubles the panel count
/// until two consecutive estimates agree to the absolute tolerance.
template <typename F>
double adaptive_gauss01(F&& f, double tol) {
    double prev = gauss15_panels(f, 1);
    for (int panels = 2; panels <= 4096; panels *= 2) {
        double cur = gauss15_panels(f, panels);
        if (std::abs(cur - prev) < tol) {
            return cur;
        }
        prev = cur;
    }
    return prev;
}

struct MemoCache {
    std::map<double, double> values;
    std::mutex mutex;
};

}  // namespace detail

/// E(t) = (1/6) * integral_0^1 exp(t x^3 - 2 t x^2 + t x) dx, evaluated by
/// adaptive composite Gauss to the given absolute tolerance.
inline double evaluate_E1(double t, double tol = 1e-12) {
    return detail::adaptive_gauss01(
               [t](double x) { return std::exp(t * x * (x - 1.0) * (x - 1.0)); }, 6.0 * tol) /
           6.0;
}

/// d/dt of E1, differentiating under the integral sign.
inline double evaluate_E1_prime(double t, double tol = 1e-12) {
    return detail::adaptive_gauss01(
               [t](double x) {
                   double q = x * (x - 1.0) * (x - 1.0);
                   return q * std::exp(t * q);
               },
               6.0 * tol) /
           6.0;
}

/// Max |u_t - u_xx - u_yy + p u - f| over `samples` random interior
/// space-time points, derivatives of exact_u by 4th-order central
/// differences. Returns NaN when exact fields are absent.
inline double residual_check(const ProblemData& prob, int samples) {
    if (!prob.has_exact()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double h = 2e-3;
    const double ht = std::min(2e-3, prob.T / 16.0);
    std::mt19937 rng(20240811u);
    std::uniform_real_distribution<double> sp(0.1, 0.9);
    std::uniform_real_distribution<double> tp(4.0 * ht, prob.T - 4.0 * ht);

    auto d1 = [](const std::array<double, 5>& v, double step) {
        return (-v[4] + 8.0 * v[3] - 8.0 * v[1] + v[0]) / (12.0 * step);
    };
    auto d2 = [](const std::array<double, 5>& v, double step) {
        return (-v[4] + 16.0 * v[3] - 30.0 * v[2] + 16.0 * v[1] - v[0]) / (12.0 * step * step);
    };

    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        double x = sp(rng), y = sp(rng), t = tp(rng);
        std::array<double, 5> ut, ux, uy;
        for (int q = -2; q <= 2; ++q) {
            ut[q + 2] = prob.exact_u(x, y, t + q * ht);
            ux[q + 2] = prob.exact_u(x + q * h, y, t);
            uy[q + 2] = prob.exact_u(x, y + q * h, t);
        }
        double res = d1(ut, ht) - d2(ux, h) - d2(uy, h) +
                     prob.exact_p(t) * prob.exact_u(x, y, t) - prob.f(x, y, t);
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

namespace detail {

inline void validate(const ProblemData& prob) {
    if (prob.exact_r) {
        if (std::abs(prob.exact_r(0.0) - 1.0) > 1e-12) {
            throw InvalidArgumentError(prob.label + ": exact_r(0) must be 1");
        }
    }
    if (prob.has_exact()) {
        double res = residual_check(prob, 20);
        if (!(res < 1e-6)) {
            throw InvalidArgumentError(prob.label + ": exact fields do not satisfy the PDE, residual " +
                                       std::to_string(res));
        }
    }
}

}  // namespace detail

/// Manufactured problem with p(t) = t^2 - 4t, u = y(1-y) e^{t x (x-1)^2}, T = 1.
/// E has no closed form; it is integrated adaptively and memoized per t.
inline ProblemData example1() {
    ProblemData p;
    p.label = "example1";
    p.T = 1.0;
    p.phi = [](double, double y) { return y * (1.0 - y); };
    p.f = [](double x, double y, double t) {
        double x2 = x * x, x3 = x2 * x, x4 = x3 * x;
        double y2 = y * y, t2 = t * t;
        double poly = 9.0 * y2 * t2 * x4 - 24.0 * y2 * t2 * x3 + 22.0 * y2 * t2 * x2 -
                      8.0 * y2 * t2 * x - 6.0 * y * t * x + 6.0 * y2 * t * x - 9.0 * y * t2 * x4 +
                      24.0 * y * t2 * x3 - 22.0 * y * t2 * x2 + 8.0 * y * t2 * x + y * x3 -
                      2.0 * y * x2 - y2 * x3 + 2.0 * y2 * x2 - y2 * x + 2.0 + y * x;
        return std::exp(t * x * (x - 1.0) * (x - 1.0)) * poly;
    };
    auto cacheE = std::make_shared<detail::MemoCache>();
    p.E = [cacheE](double t) {
        {
            std::lock_guard<std::mutex> lock(cacheE->mutex);
            auto it = cacheE->values.find(t);
            if (it != cacheE->values.end()) return it->second;
        }
        double v = evaluate_E1(t);
        std::lock_guard<std::mutex> lock(cacheE->mutex);
        cacheE->values.emplace(t, v);
        return v;
    };
    auto cacheEp = std::make_shared<detail::MemoCache>();
    p.E_prime = [cacheEp](double t) {
        {
            std::lock_guard<std::mutex> lock(cacheEp->mutex);
            auto it = cacheEp->values.find(t);
            if (it != cacheEp->values.end()) return it->second;
        }
        double v = evaluate_E1_prime(t);
        std::lock_guard<std::mutex> lock(cacheEp->mutex);
        cacheEp->values.emplace(t, v);
        return v;
    };
    p.exact_u = [](double x, double y, double t) {
        return y * (1.0 - y) * std::exp(t * x * (x - 1.0) * (x - 1.0));
    };
    p.exact_p = [](double t) { return t * t - 4.0 * t; };
    p.exact_r = [](double t) { return std::exp(t * t * t / 3.0 - 2.0 * t * t); };
    detail::validate(p);
    return p;
}

/// Manufactured problem with p(t) = e^{pi^2 t}, u = sin(pi y) e^{-pi^2 t} sin^3(pi x),
/// T = 1/3. Satisfies the theorem's assumptions except the sign of phi_{0,1}.
inline ProblemData example2() {
    ProblemData p;
    p.label = "example2";
    p.T = 1.0 / 3.0;
    const double pi = M_PI, pi2 = pi * pi;
    p.phi = [pi](double x, double y) {
        double sx = std::sin(pi * x);
        return std::sin(pi * y) * sx * sx * sx;
    };
    p.f = [pi, pi2](double x, double y, double t) {
        double c = std::cos(pi * x);
        double ept = std::exp(pi2 * t);
        return -std::sin(pi * y) * std::exp(-pi2 * t) * std::sin(pi * x) *
               (9.0 * pi2 * c * c - 3.0 * pi2 - ept + ept * c * c);
    };
    p.E = [pi2](double t) { return 8.0 / (3.0 * pi2) * std::exp(-pi2 * t); };
    p.E_prime = [pi2](double t) { return -8.0 / 3.0 * std::exp(-pi2 * t); };
    p.exact_u = [pi, pi2](double x, double y, double t) {
        double sx = std::sin(pi * x);
        return std::sin(pi * y) * std::exp(-pi2 * t) * sx * sx * sx;
    };
    p.exact_p = [pi2](double t) { return std::exp(pi2 * t); };
    p.exact_r = [pi2](double t) { return std::exp((std::exp(pi2 * t) - 1.0) / pi2); };
    detail::validate(p);
    return p;
}

}  // namespace heatinv::problems
