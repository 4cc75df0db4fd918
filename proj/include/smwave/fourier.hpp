#pragma once

// Fourier coefficients of a stochastic-measure path, the symmetric partial
// sums S_j and the Fejer (Cesaro) sums, plus Fourier sums of deterministic
// functions on [0,1].

#include <cassert>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "sm_core.hpp"

namespace smwave {

using Complex = std::complex<double>;

class FourierExpansion {
public:
    FourierExpansion(int max_order, std::vector<Complex> coefficients, Partition source,
                     Seed seed = 0, GeneratorTag tag = GeneratorTag::custom)
        : max_order_(max_order), coefficients_(std::move(coefficients)), source_(source),
          seed_(seed), tag_(tag) {
        if (max_order < 0) throw OrderError("expansion: max order must be >= 0");
        if (coefficients_.size() != static_cast<std::size_t>(2 * max_order + 1)) {
            throw ShapeError("expansion: expected 2K+1 coefficients");
        }
    }

    int max_order() const noexcept { return max_order_; }
    // xi_k for -K <= k <= K
    const Complex& coefficient(int k) const {
        if (k < -max_order_ || k > max_order_) {
            throw OrderError("expansion: order " + std::to_string(k) + " outside [-K, K], K=" +
                             std::to_string(max_order_));
        }
        return coefficients_[static_cast<std::size_t>(k + max_order_)];
    }
    const std::vector<Complex>& coefficients() const noexcept { return coefficients_; }
    const Partition& source_partition() const noexcept { return source_; }
    Seed seed() const noexcept { return seed_; }
    GeneratorTag generator_tag() const noexcept { return tag_; }
    // K >= n_cells/2: orders beyond the grid Nyquist index alias lower ones.
    bool aliased() const noexcept { return 2 * static_cast<std::int64_t>(max_order_) >= source_.n_cells(); }

    void require_order(int j) const {
        if (j < 0 || j > max_order_) {
            throw OrderError("order j=" + std::to_string(j) + " exceeds expansion order K=" +
                             std::to_string(max_order_));
        }
    }

private:
    int max_order_;
    std::vector<Complex> coefficients_;
    Partition source_;
    Seed seed_;
    GeneratorTag tag_;
};

namespace detail {

// exp(-2 pi i m / n) with m reduced mod n first.
inline Complex grid_phase(std::int64_t m, std::int64_t n) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(m % n) / static_cast<double>(n);
    return {std::cos(angle), std::sin(angle)};
}

inline Complex unit_phase(double angle) { return {std::cos(angle), std::sin(angle)}; }

} // namespace detail

// xi_k = sum_i exp(-2 pi i k t_i) * increments[i], t_i the left endpoint of
// cell i. Orders k >= 0 are summed directly; negative orders are conjugates.
inline FourierExpansion expand(const StochasticMeasurePath& path, int max_order) {
    if (max_order < 0) throw OrderError("expand: K must be >= 0");
    const auto n = path.partition().n_cells();
    const auto& inc = path.increments();
    std::vector<Complex> coeffs(static_cast<std::size_t>(2 * max_order + 1));
    for (int k = 0; k <= max_order; ++k) {
        Complex acc{0.0, 0.0};
        if (k == 0) {
            double re = 0.0;
            for (double v : inc) re += v;
            acc = {re, 0.0};
        } else {
            for (std::int64_t i = 0; i < n; ++i) {
                acc += detail::grid_phase(static_cast<std::int64_t>(k) * i, n) *
                       inc[static_cast<std::size_t>(i)];
            }
        }
        coeffs[static_cast<std::size_t>(max_order + k)] = acc;
        coeffs[static_cast<std::size_t>(max_order - k)] = std::conj(acc);
    }
    return {max_order, std::move(coeffs), path.partition(), path.seed(), path.generator_tag()};
}

// S_j(t) = sum_{|k|<=j} xi_k exp(2 pi i k t); the imaginary part is checked
// to vanish relative to sum |xi_k|.
inline double partial_sum(const FourierExpansion& exp, int j, double t) {
    exp.require_order(j);
    Complex acc{0.0, 0.0};
    double mass = 0.0;
    for (int k = -j; k <= j; ++k) {
        const auto& xi = exp.coefficient(k);
        acc += xi * detail::unit_phase(2.0 * std::numbers::pi * k * t);
        mass += std::abs(xi);
    }
    if (std::abs(acc.imag()) > 1e-12 * std::max(mass, 1e-300) && mass > 0.0) {
        throw ContractError("partial_sum: imaginary part does not vanish; coefficients are not "
                            "conjugate symmetric");
    }
    return acc.real();
}

// Cesaro average (1/(j+1)) sum_{m=0}^{j} S_m(t).
inline double fejer_sum_averaged(const FourierExpansion& exp, int j, double t) {
    exp.require_order(j);
    double running = exp.coefficient(0).real();
    double total = running;
    for (int m = 1; m <= j; ++m) {
        running += 2.0 * (exp.coefficient(m) * detail::unit_phase(2.0 * std::numbers::pi * m * t)).real();
        total += running;
    }
    return total / (j + 1);
}

// Kernel form sum_{|k|<=j} (1 - |k|/(j+1)) xi_k exp(2 pi i k t).
inline double fejer_sum_kernel(const FourierExpansion& exp, int j, double t) {
    exp.require_order(j);
    double acc = exp.coefficient(0).real();
    for (int k = 1; k <= j; ++k) {
        const double w = 1.0 - static_cast<double>(k) / (j + 1);
        acc += 2.0 * w * (exp.coefficient(k) * detail::unit_phase(2.0 * std::numbers::pi * k * t)).real();
    }
    return acc;
}

// Scale used for relative comparisons of Fejer evaluations: the larger of the
// two values, floored at 1e-6 of the weighted coefficient mass so that
// evaluations near a zero crossing are compared on the sum's natural scale.
inline double fejer_relative_difference(const FourierExpansion& exp, int j, double a, double b) {
    double mass = std::abs(exp.coefficient(0));
    for (int k = 1; k <= j; ++k) mass += 2.0 * (1.0 - static_cast<double>(k) / (j + 1)) * std::abs(exp.coefficient(k));
    const double scale = std::max({std::abs(a), std::abs(b), 1e-6 * mass, 1e-300});
    return std::abs(a - b) / scale;
}

inline double fejer_sum(const FourierExpansion& exp, int j, double t) {
    const double kernel = fejer_sum_kernel(exp, j, t);
#ifndef NDEBUG
    const double averaged = fejer_sum_averaged(exp, j, t);
    assert(fejer_relative_difference(exp, j, kernel, averaged) <= 1e-12);
#endif
    return kernel;
}

// Real cosine/sine form of S_j or the Fejer sum at many points; used by the
// wave solver where the same expansion is evaluated at thousands of nodes.
inline std::vector<double> evaluate_sums(const FourierExpansion& exp, int j, bool fejer,
                                         const std::vector<double>& ts) {
    exp.require_order(j);
    std::vector<double> out(ts.size());
    for (std::size_t q = 0; q < ts.size(); ++q) {
        double acc = exp.coefficient(0).real();
        for (int k = 1; k <= j; ++k) {
            const double w = fejer ? 1.0 - static_cast<double>(k) / (j + 1) : 1.0;
            const auto& xi = exp.coefficient(k);
            const double angle = 2.0 * std::numbers::pi * k * ts[q];
            acc += 2.0 * w * (xi.real() * std::cos(angle) - xi.imag() * std::sin(angle));
        }
        out[q] = acc;
    }
    return out;
}

// Fourier series of a deterministic function on [0,1] with coefficients from
// composite midpoint quadrature on `quadrature_cells` cells.
class DeterministicFourierSeries {
public:
    DeterministicFourierSeries(const std::function<double(double)>& f, int max_order,
                               int quadrature_cells)
        : max_order_(max_order), coeffs_(static_cast<std::size_t>(max_order + 1)) {
        if (max_order < 0) throw OrderError("fourier: order must be >= 0");
        if (quadrature_cells < 1 || quadrature_cells < 4 * max_order) {
            throw ResolutionError("fourier: quadrature_cells=" + std::to_string(quadrature_cells) +
                                  " must be at least 4j=" + std::to_string(4 * max_order));
        }
        const int m = quadrature_cells;
        std::vector<double> samples(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) samples[static_cast<std::size_t>(i)] = f((i + 0.5) / m);
        for (int k = 0; k <= max_order; ++k) {
            Complex acc{0.0, 0.0};
            for (int i = 0; i < m; ++i) {
                // exp(-2 pi i k (i + 1/2) / m), argument reduced mod 2m
                const auto num = (static_cast<std::int64_t>(k) * (2 * i + 1)) % (2 * static_cast<std::int64_t>(m));
                const double angle = -std::numbers::pi * static_cast<double>(num) / m;
                acc += samples[static_cast<std::size_t>(i)] * detail::unit_phase(angle);
            }
            coeffs_[static_cast<std::size_t>(k)] = acc / static_cast<double>(m);
        }
    }

    int max_order() const noexcept { return max_order_; }
    const Complex& coefficient(int k) const { return coeffs_.at(static_cast<std::size_t>(k)); }

    double partial_sum(int j, double t) const { return weighted(j, t, false); }
    double fejer_sum(int j, double t) const { return weighted(j, t, true); }

    // Partial sums S_0..S_jmax at t in one pass.
    std::vector<double> partial_sums_upto(int j_max, double t) const {
        check(j_max);
        std::vector<double> out(static_cast<std::size_t>(j_max + 1));
        double acc = coeffs_[0].real();
        out[0] = acc;
        for (int k = 1; k <= j_max; ++k) {
            acc += 2.0 * (coeffs_[static_cast<std::size_t>(k)] * detail::unit_phase(2.0 * std::numbers::pi * k * t)).real();
            out[static_cast<std::size_t>(k)] = acc;
        }
        return out;
    }

private:
    void check(int j) const {
        if (j < 0 || j > max_order_) {
            throw OrderError("fourier: order " + std::to_string(j) + " exceeds " + std::to_string(max_order_));
        }
    }

    double weighted(int j, double t, bool fejer) const {
        check(j);
        double acc = coeffs_[0].real();
        for (int k = 1; k <= j; ++k) {
            const double w = fejer ? 1.0 - static_cast<double>(k) / (j + 1) : 1.0;
            acc += 2.0 * w * (coeffs_[static_cast<std::size_t>(k)] * detail::unit_phase(2.0 * std::numbers::pi * k * t)).real();
        }
        return acc;
    }

    int max_order_;
    std::vector<Complex> coeffs_;
};

inline double deterministic_fourier_sum(const std::function<double(double)>& f, int j, double t,
                                        int quadrature_cells) {
    return DeterministicFourierSeries(f, j, quadrature_cells).partial_sum(j, t);
}

inline void write_expansion_csv(std::ostream& out, const FourierExpansion& exp) {
    out << "# generator=" << to_string(exp.generator_tag()) << " seed=" << exp.seed()
        << " n_cells=" << exp.source_partition().n_cells() << " max_order=" << exp.max_order()
        << "\n";
    out << "k,re,im\n";
    char buf[128];
    for (int k = -exp.max_order(); k <= exp.max_order(); ++k) {
        const auto& xi = exp.coefficient(k);
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", k, xi.real(), xi.imag());
        out << buf;
    }
}

inline void write_expansion_csv(const std::string& file, const FourierExpansion& exp) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file + " for writing");
    write_expansion_csv(out, exp);
    if (!out) throw IoError("write failed: " + file);
}

} // namespace smwave
