#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace smwave {

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t order() const { return nodes.size(); }
};

namespace detail {

// Returns (P_n(x), P_n'(x)) by the three-term recurrence.
inline std::pair<double, double> legendre_with_derivative(int n, double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

} // namespace detail

// Newton iteration on P_n from the guess cos(pi (i + 3/4) / (n + 1/2)).
inline GaussLegendreRule gauss_legendre(int n) {
    if (n < 1) throw ParameterError("gauss_legendre: order must be >= 1");
    GaussLegendreRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = detail::legendre_with_derivative(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = detail::legendre_with_derivative(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

// Single-panel rule mapped to [lo, hi].
template <class F>
double integrate_gl(const GaussLegendreRule& rule, F&& f, double lo, double hi) {
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.order(); ++q) {
        acc += rule.weights[q] * f(mid + half * rule.nodes[q]);
    }
    return acc * half;
}

// Composite rule with `panels` equal panels on [lo, hi].
template <class F>
double integrate_gl_composite(const GaussLegendreRule& rule, F&& f, double lo, double hi,
                              int panels) {
    if (panels < 1) throw ParameterError("integrate_gl_composite: panels must be >= 1");
    const double h = (hi - lo) / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        acc += integrate_gl(rule, f, lo + p * h, lo + (p + 1) * h);
    }
    return acc;
}

} // namespace smwave
