#pragma once

// Mild solution of the driven wave equation
//   u_tt = a^2 u_xx + f(t,x,u) + sigma(t,x) mu'(t),  u(0,.) = u0, u_t(0,.) = v0
// on [0, 1-delta] x [x_min, x_max] by Picard iteration on
//   u = D + F[u] + Sigma,
// where D is the d'Alembert part, F the forcing integral and Sigma the
// stochastic term. Sigma is driven either by the path itself, by the Fourier
// partial sum S_j of the path, or by its Fejer sum.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fourier.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "sm_core.hpp"

namespace smwave {

struct WaveProblem {
    double a = 1.0;
    std::function<double(double)> u0;
    std::function<double(double)> v0;
    // f(s, y, v); empty means f = 0
    std::function<double(double, double, double)> f;
    // sigma(s, y); empty means sigma = 0
    std::function<double(double, double)> sigma;
    double lipschitz_f = 0.0;
    double lipschitz_sigma = 0.0;
    double beta_sigma = 1.0;
    // Use 1/2 (u0(x+at) - u0(x-at)) as printed instead of the classical plus sign.
    bool strict_paper_sign = false;

    double initial_u(double x) const { return u0 ? u0(x) : 0.0; }
    double initial_v(double x) const { return v0 ? v0(x) : 0.0; }
};

struct SolverGrid {
    double delta = 1.0 / 16.0;
    // time steps covering [0, 1 - delta]; nodes t_i = i (1 - delta) / n_t
    int n_t = 15;
    double x_min = 0.0;
    double x_max = 1.0;
    int n_x = 17;
    // Gauss-Legendre order per path cell for ds integrals
    int time_order = 4;
    // Gauss-Legendre order for dy integrals of u0/v0/sigma
    int space_order = 8;

    double t_max() const { return 1.0 - delta; }
    double dt() const { return t_max() / n_t; }
    double dx() const { return (x_max - x_min) / (n_x - 1); }
    double t(int i) const { return i == n_t ? t_max() : static_cast<double>(i) * dt(); }
    double x(int k) const { return k == n_x - 1 ? x_max : x_min + static_cast<double>(k) * dx(); }
    std::size_t node_count() const { return static_cast<std::size_t>(n_t + 1) * static_cast<std::size_t>(n_x); }

    bool operator==(const SolverGrid&) const = default;
};

// Columns whose domain of dependence [x - a t_max, x + a t_max] lies inside the window.
struct ReportedWindow {
    int first_column = 0;
    int last_column = -1;
    double margin = 0.0;
};

inline ReportedWindow reported_window(const SolverGrid& grid, double a) {
    ReportedWindow w;
    w.margin = a * grid.t_max();
    for (int k = 0; k < grid.n_x; ++k) {
        const double x = grid.x(k);
        if (x - w.margin >= grid.x_min - 1e-12 && x + w.margin <= grid.x_max + 1e-12) {
            if (w.last_column < w.first_column) w.first_column = k;
            w.last_column = k;
        }
    }
    return w;
}

// Time rows aligned to the path grid: row i sits at boundary index
// i * cells_per_step.
inline std::int64_t cells_per_step(const SolverGrid& grid, const Partition& part) {
    if (!(grid.delta > 0.0 && grid.delta < 1.0)) throw ConfigError("grid: delta must lie in (0, 1)");
    if (grid.delta < part.cell_width() - 1e-15) {
        throw ConfigError("grid: delta must be at least one path cell (1/" + std::to_string(part.n_cells()) + ")");
    }
    if (grid.n_t < 1) throw ConfigError("grid: n_t must be >= 1");
    const double cells = grid.dt() * static_cast<double>(part.n_cells());
    const double rounded = std::round(cells);
    if (rounded < 1.0 || std::abs(cells - rounded) > 1e-9) {
        throw AlignmentError("grid: time step (1-delta)/n_t is not a multiple of the path cell width");
    }
    return static_cast<std::int64_t>(rounded);
}

inline void validate(const SolverGrid& grid) {
    if (!(grid.delta > 0.0 && grid.delta < 1.0)) throw ConfigError("grid: delta must lie in (0, 1)");
    if (grid.n_t < 1) throw ConfigError("grid: n_t must be >= 1");
    if (grid.n_x < 2) throw ConfigError("grid: n_x must be >= 2");
    if (!(grid.x_max > grid.x_min)) throw ConfigError("grid: x_max must exceed x_min");
    if (grid.time_order < 1 || grid.space_order < 1) throw ConfigError("grid: quadrature orders must be >= 1");
}

// ---------------------------------------------------------------------------
// Problem validation on a lattice

struct ValidationLattice {
    int s_points = 9;
    int y_points = 33;
    int v_points = 9;
    double v_range = 10.0;
};

struct ProblemWitness {
    double sup_u0 = 0.0;
    double sup_v0 = 0.0;
    double sup_f = 0.0;
    double sup_sigma = 0.0;
};

inline ProblemWitness validate(const WaveProblem& problem, const SolverGrid& grid,
                               const ValidationLattice& lattice = {}) {
    if (!(problem.a > 0.0) || !std::isfinite(problem.a)) throw ConfigError("problem: wave speed a must be > 0");
    if (problem.sigma && !(problem.beta_sigma > 0.5 && problem.beta_sigma <= 1.0)) {
        throw ContractError("problem: sigma Hoelder exponent must lie in (1/2, 1]");
    }
    ProblemWitness w;
    const double margin = problem.a * grid.t_max();
    const double y_lo = grid.x_min - margin;
    const double y_hi = grid.x_max + margin;
    auto lin = [](double lo, double hi, int n, int i) { return n < 2 ? lo : lo + (hi - lo) * i / (n - 1); };
    const int ny = std::max(2, lattice.y_points);
    const int ns = std::max(2, lattice.s_points);
    const int nv = std::max(2, lattice.v_points);
    auto finite_or_throw = [](double v, const char* what) {
        if (!std::isfinite(v)) throw ContractError(std::string("problem: ") + what + " is not finite on the lattice");
        return std::abs(v);
    };
    for (int i = 0; i < ny; ++i) {
        const double y = lin(y_lo, y_hi, ny, i);
        w.sup_u0 = std::max(w.sup_u0, finite_or_throw(problem.initial_u(y), "u0"));
        w.sup_v0 = std::max(w.sup_v0, finite_or_throw(problem.initial_v(y), "v0"));
    }
    if (problem.sigma) {
        std::vector<double> ss, ys;
        for (int i = 0; i < ns; ++i) ss.push_back(lin(0.0, 1.0, ns, i));
        for (int i = 0; i < ny; ++i) ys.push_back(lin(y_lo, y_hi, ny, i));
        for (double s1 : ss)
            for (double y1 : ys) {
                const double v1 = problem.sigma(s1, y1);
                w.sup_sigma = std::max(w.sup_sigma, finite_or_throw(v1, "sigma"));
                for (double s2 : ss)
                    for (double y2 : ys) {
                        const double lhs = std::abs(v1 - problem.sigma(s2, y2));
                        const double rhs = problem.lipschitz_sigma * (std::pow(std::abs(s1 - s2), problem.beta_sigma) +
                                                                      std::pow(std::abs(y1 - y2), problem.beta_sigma));
                        if (lhs > rhs * (1.0 + 1e-9) + 1e-12) {
                            std::ostringstream msg;
                            msg << "problem: sigma violates the Hoelder bound (L=" << problem.lipschitz_sigma
                                << ", beta=" << problem.beta_sigma << ") at (" << s1 << "," << y1 << ") vs (" << s2
                                << "," << y2 << ")";
                            throw ContractError(msg.str());
                        }
                    }
            }
    }
    if (problem.f) {
        for (int is = 0; is < ns; ++is) {
            const double s = lin(0.0, 1.0, ns, is);
            for (int iy = 0; iy < ny; ++iy) {
                const double y1 = lin(y_lo, y_hi, ny, iy);
                for (int iv = 0; iv < nv; ++iv) {
                    const double v1 = lin(-lattice.v_range, lattice.v_range, nv, iv);
                    const double f1 = problem.f(s, y1, v1);
                    w.sup_f = std::max(w.sup_f, finite_or_throw(f1, "f"));
                    for (int jy = 0; jy < ny; jy += 4) {
                        const double y2 = lin(y_lo, y_hi, ny, jy);
                        for (int jv = 0; jv < nv; ++jv) {
                            const double v2 = lin(-lattice.v_range, lattice.v_range, nv, jv);
                            const double lhs = std::abs(f1 - problem.f(s, y2, v2));
                            const double rhs = problem.lipschitz_f * (std::abs(y1 - y2) + std::abs(v1 - v2));
                            if (lhs > rhs * (1.0 + 1e-9) + 1e-12) {
                                std::ostringstream msg;
                                msg << "problem: f is not Lipschitz with L_f=" << problem.lipschitz_f << " at s=" << s
                                    << ", (y,v)=(" << y1 << "," << v1 << ") vs (" << y2 << "," << v2 << ")";
                                throw ContractError(msg.str());
                            }
                        }
                    }
                }
            }
        }
    }
    return w;
}

// ---------------------------------------------------------------------------
// d'Alembert part

namespace detail {

inline double dalembert_unchecked(const WaveProblem& p, const GaussLegendreRule& rule, double t, double x) {
    const double up = p.initial_u(x + p.a * t);
    const double down = p.initial_u(x - p.a * t);
    const double wave = p.strict_paper_sign ? 0.5 * (up - down) : 0.5 * (up + down);
    if (t == 0.0 || !p.v0) return wave;
    const double lo = x - p.a * t;
    const double hi = x + p.a * t;
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / 0.25)));
    const double velocity = integrate_gl_composite(rule, p.v0, lo, hi, panels);
    return wave + velocity / (2.0 * p.a);
}

} // namespace detail

// 1/2 (u0(x+at) + u0(x-at)) + 1/(2a) int_{x-at}^{x+at} v0(y) dy
inline double dalembert_term(const WaveProblem& problem, const SolverGrid& grid, double t, double x) {
    if (x - problem.a * t < grid.x_min - 1e-12 || x + problem.a * t > grid.x_max + 1e-12) {
        std::ostringstream msg;
        msg << "dalembert_term: domain of dependence [" << x - problem.a * t << ", " << x + problem.a * t
            << "] leaves the window [" << grid.x_min << ", " << grid.x_max << "]";
        throw CoverageError(msg.str());
    }
    return detail::dalembert_unchecked(problem, gauss_legendre(grid.space_order), t, x);
}

// ---------------------------------------------------------------------------
// Forcing

struct ForcingMode {
    enum class Kind { sm_path, fourier_partial, fejer };
    Kind kind = Kind::sm_path;
    int j = 0;

    static ForcingMode sm_path() { return {Kind::sm_path, 0}; }
    static ForcingMode fourier(int j) { return {Kind::fourier_partial, j}; }
    static ForcingMode fejer(int j) { return {Kind::fejer, j}; }

    bool operator==(const ForcingMode&) const = default;
};

inline std::string to_string(const ForcingMode& mode) {
    switch (mode.kind) {
    case ForcingMode::Kind::sm_path: return "sm_path";
    case ForcingMode::Kind::fourier_partial: return "fourier(" + std::to_string(mode.j) + ")";
    case ForcingMode::Kind::fejer: return "fejer(" + std::to_string(mode.j) + ")";
    }
    return "sm_path";
}

// Composite Gauss-Legendre nodes, `order` per path cell, covering (0,1].
struct TimeQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 4;
    std::int64_t n_cells = 0;

    TimeQuadrature(const Partition& part, int order_) : order(order_), n_cells(part.n_cells()) {
        const auto rule = gauss_legendre(order_);
        const double h = part.cell_width();
        nodes.reserve(part.size() * rule.order());
        weights.reserve(part.size() * rule.order());
        for (std::int64_t i = 0; i < part.n_cells(); ++i) {
            const double lo = part.boundary(i);
            for (std::size_t q = 0; q < rule.order(); ++q) {
                nodes.push_back(lo + 0.5 * h * (rule.nodes[q] + 1.0));
                weights.push_back(0.5 * h * rule.weights[q]);
            }
        }
    }

    std::size_t size() const noexcept { return nodes.size(); }
    // number of nodes in the first `cells` path cells
    std::size_t nodes_before(std::int64_t cells) const noexcept {
        return static_cast<std::size_t>(cells) * static_cast<std::size_t>(order);
    }
};

// Driving density at the time quadrature nodes: increment / cell width for the
// path itself (piecewise constant), S_j or the Fejer sum otherwise.
inline std::vector<double> forcing_density(const StochasticMeasurePath& path, const FourierExpansion* expansion,
                                           const ForcingMode& mode, const TimeQuadrature& quad) {
    if (quad.n_cells != path.partition().n_cells()) throw ConfigError("forcing: quadrature built for another partition");
    if (mode.kind == ForcingMode::Kind::sm_path) {
        std::vector<double> rho(quad.size());
        const double n = static_cast<double>(path.partition().n_cells());
        for (std::size_t q = 0; q < rho.size(); ++q) {
            rho[q] = path.increments()[q / static_cast<std::size_t>(quad.order)] * n;
        }
        return rho;
    }
    if (expansion == nullptr) throw ConfigError("forcing: mode " + to_string(mode) + " needs a Fourier expansion");
    if (!(expansion->source_partition() == path.partition())) {
        throw ConfigError("forcing: expansion was computed on a different partition than the path");
    }
    if (mode.j < 0 || mode.j > expansion->max_order()) {
        throw ConfigError("forcing: mode " + to_string(mode) + " exceeds expansion order K=" +
                          std::to_string(expansion->max_order()));
    }
    return evaluate_sums(*expansion, mode.j, mode.kind == ForcingMode::Kind::fejer, quad.nodes);
}

namespace detail {

// Antiderivative Psi(y) = int_{y_lo}^{y} phi on an equispaced table with the
// derivative phi stored alongside; evaluated by cubic Hermite interpolation.
// Outside the table phi is continued by its end values.
class AntiderivativeTable {
public:
    AntiderivativeTable() = default;

    template <class Phi>
    AntiderivativeTable(Phi&& phi, double y_lo, double y_hi, double step, const GaussLegendreRule& rule)
        : y_lo_(y_lo) {
        const auto segments = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil((y_hi - y_lo) / step)));
        h_ = (y_hi - y_lo) / static_cast<double>(segments);
        psi_.resize(static_cast<std::size_t>(segments + 1));
        dpsi_.resize(psi_.size());
        psi_[0] = 0.0;
        dpsi_[0] = phi(y_lo);
        for (std::int64_t s = 0; s < segments; ++s) {
            const double lo = y_lo + static_cast<double>(s) * h_;
            psi_[static_cast<std::size_t>(s + 1)] = psi_[static_cast<std::size_t>(s)] + integrate_gl(rule, phi, lo, lo + h_);
            dpsi_[static_cast<std::size_t>(s + 1)] = phi(lo + h_);
        }
    }

    double operator()(double y) const {
        const double u = (y - y_lo_) / h_;
        const auto last = static_cast<std::int64_t>(psi_.size()) - 1;
        if (u <= 0.0) return (y - y_lo_) * dpsi_.front();
        if (u >= static_cast<double>(last)) {
            return psi_.back() + (y - (y_lo_ + static_cast<double>(last) * h_)) * dpsi_.back();
        }
        auto s = static_cast<std::int64_t>(u);
        if (s >= last) s = last - 1;
        const double th = u - static_cast<double>(s);
        const auto i = static_cast<std::size_t>(s);
        const double th2 = th * th;
        const double th3 = th2 * th;
        const double h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
        const double h10 = th3 - 2.0 * th2 + th;
        const double h01 = -2.0 * th3 + 3.0 * th2;
        const double h11 = th3 - th2;
        return h00 * psi_[i] + h10 * h_ * dpsi_[i] + h01 * psi_[i + 1] + h11 * h_ * dpsi_[i + 1];
    }

private:
    double y_lo_ = 0.0;
    double h_ = 1.0;
    std::vector<double> psi_;
    std::vector<double> dpsi_;
};

} // namespace detail

struct KernelOptions {
    // spacing of the sigma antiderivative tables
    double table_step = 1.0 / 128.0;
    // keep the full kernel in memory when it needs at most this many doubles
    std::size_t materialize_limit = 0;
    unsigned threads = 1;
};

// Linear map from a driving density rho (on the time quadrature nodes) to the
// stochastic term on the solver grid:
//   Sigma(t_i, x_k) = 1/(2a) sum_{s_q < t_i} w_q rho_q g(t_i, x_k, s_q),
//   g(t, x, s) = int_{x-a(t-s)}^{x+a(t-s)} sigma(s, y) dy.
class StochasticKernel {
public:
    StochasticKernel(const WaveProblem& problem, const SolverGrid& grid, const Partition& partition,
                     const KernelOptions& options = {})
        : grid_(grid), quad_(partition, grid.time_order), a_(problem.a), threads_(options.threads) {
        validate(grid);
        const auto step_cells = cells_per_step(grid, partition);
        row_nodes_.resize(static_cast<std::size_t>(grid.n_t + 1));
        for (int i = 0; i <= grid.n_t; ++i) row_nodes_[static_cast<std::size_t>(i)] = quad_.nodes_before(i * step_cells);
        if (!problem.sigma) return;
        active_ = true;

        const auto rule = gauss_legendre(grid.space_order);
        const double margin = problem.a * grid.t_max();
        const double y_lo = grid.x_min - margin;
        const double y_hi = grid.x_max + margin;
        const std::size_t used = row_nodes_.back();
        tables_.resize(used);
        parallel_for(used, threads_, [&](std::size_t q) {
            const double s = quad_.nodes[q];
            tables_[q] = detail::AntiderivativeTable([&](double y) { return problem.sigma(s, y); }, y_lo, y_hi,
                                                     options.table_step, rule);
        });

        std::size_t total = 0;
        for (int i = 0; i <= grid.n_t; ++i) total += row_nodes_[static_cast<std::size_t>(i)] * static_cast<std::size_t>(grid.n_x);
        if (total <= options.materialize_limit) {
            row_offsets_.resize(static_cast<std::size_t>(grid.n_t + 1));
            std::size_t offset = 0;
            for (int i = 0; i <= grid.n_t; ++i) {
                row_offsets_[static_cast<std::size_t>(i)] = offset;
                offset += row_nodes_[static_cast<std::size_t>(i)] * static_cast<std::size_t>(grid.n_x);
            }
            weights_.resize(total);
            parallel_for(static_cast<std::size_t>(grid.n_t + 1), threads_, [&](std::size_t i) {
                double* out = weights_.data() + row_offsets_[i];
                const auto nq = row_nodes_[i];
                for (int k = 0; k < grid.n_x; ++k) {
                    for (std::size_t q = 0; q < nq; ++q) *out++ = entry(static_cast<int>(i), k, q);
                }
            });
            materialized_ = true;
        }
    }

    const TimeQuadrature& quadrature() const noexcept { return quad_; }
    const SolverGrid& grid() const noexcept { return grid_; }
    bool active() const noexcept { return active_; }
    bool materialized() const noexcept { return materialized_; }

    // w_q g(t_i, x_k, s_q) / (2a)
    double entry(int i, int k, std::size_t q) const {
        const double r = a_ * (grid_.t(i) - quad_.nodes[q]);
        const double x = grid_.x(k);
        const auto& psi = tables_[q];
        return quad_.weights[q] * (psi(x + r) - psi(x - r)) / (2.0 * a_);
    }

    std::vector<double> apply(const std::vector<double>& rho) const {
        if (rho.size() != quad_.size()) throw ShapeError("kernel: density has the wrong length");
        std::vector<double> out(grid_.node_count(), 0.0);
        if (!active_) return out;
        const auto nx = static_cast<std::size_t>(grid_.n_x);
        parallel_for(static_cast<std::size_t>(grid_.n_t + 1), threads_, [&](std::size_t i) {
            const auto nq = row_nodes_[i];
            double* acc = out.data() + i * nx;
            if (materialized_) {
                for (std::size_t k = 0; k < nx; ++k) {
                    const double* w = weights_.data() + row_offsets_[i] + k * nq;
                    double sum = 0.0;
                    for (std::size_t q = 0; q < nq; ++q) sum += w[q] * rho[q];
                    acc[k] = sum;
                }
                return;
            }
            // q outermost so each table is reused across the row; the
            // per-node summation order (ascending q) matches the branch above
            for (std::size_t q = 0; q < nq; ++q) {
                for (std::size_t k = 0; k < nx; ++k) acc[k] += entry(static_cast<int>(i), static_cast<int>(k), q) * rho[q];
            }
        });
        return out;
    }

private:
    SolverGrid grid_;
    TimeQuadrature quad_;
    double a_;
    unsigned threads_;
    bool active_ = false;
    bool materialized_ = false;
    std::vector<std::size_t> row_nodes_;
    std::vector<detail::AntiderivativeTable> tables_;
    std::vector<std::size_t> row_offsets_;
    std::vector<double> weights_;
};

// Single-point stochastic term by direct nested quadrature (no tables). t must
// be on the path grid.
inline double stochastic_term(const WaveProblem& problem, const SolverGrid& grid, const StochasticMeasurePath& path,
                              const FourierExpansion* expansion, const ForcingMode& mode, double t, double x) {
    const auto& part = path.partition();
    const auto t_index = part.boundary_index(t);
    const TimeQuadrature quad(part, grid.time_order);
    const auto rho = forcing_density(path, expansion, mode, quad);
    if (!problem.sigma) return 0.0;
    const auto rule = gauss_legendre(grid.space_order);
    double acc = 0.0;
    for (std::size_t q = 0; q < quad.nodes_before(t_index); ++q) {
        const double s = quad.nodes[q];
        const double r = problem.a * (t - s);
        const int panels = std::max(1, static_cast<int>(std::ceil(2.0 * r / 0.25)));
        const double g = integrate_gl_composite(rule, [&](double y) { return problem.sigma(s, y); }, x - r, x + r, panels);
        acc += quad.weights[q] * rho[q] * g;
    }
    return acc / (2.0 * problem.a);
}

// ---------------------------------------------------------------------------
// Solution field

class SolutionField {
public:
    SolutionField() = default;
    SolutionField(SolverGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.node_count()) throw ShapeError("field: value count does not match the grid");
    }

    const SolverGrid& grid() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double at(int i, int k) const {
        return values_.at(static_cast<std::size_t>(i) * static_cast<std::size_t>(grid_.n_x) + static_cast<std::size_t>(k));
    }

    int iterations_used = 0;
    double residual = 0.0;
    std::vector<double> residual_history;
    ForcingMode mode;
    Seed seed = 0;
    double tolerance = 0.0;

private:
    SolverGrid grid_;
    std::vector<double> values_;
};

inline double sup_error(const SolutionField& a, const SolutionField& b) {
    if (!(a.grid() == b.grid())) throw ShapeError("sup_error: fields live on different grids");
    double best = 0.0;
    for (std::size_t n = 0; n < a.values().size(); ++n) best = std::max(best, std::abs(a.values()[n] - b.values()[n]));
    return best;
}

struct SolveOptions {
    double tolerance = 1e-10;
    int max_iter = 100;
    unsigned threads = 1;
    KernelOptions kernel;
    ValidationLattice lattice;
    bool validate_problem = true;
};

namespace detail {

inline std::vector<double> dalembert_field(const WaveProblem& problem, const SolverGrid& grid, unsigned threads) {
    const auto rule = gauss_legendre(grid.space_order);
    std::vector<double> out(grid.node_count());
    const auto nx = static_cast<std::size_t>(grid.n_x);
    parallel_for(static_cast<std::size_t>(grid.n_t + 1), threads, [&](std::size_t i) {
        for (std::size_t k = 0; k < nx; ++k) {
            out[i * nx + k] = dalembert_unchecked(problem, rule, grid.t(static_cast<int>(i)), grid.x(static_cast<int>(k)));
        }
    });
    return out;
}

// F[u](t_i, x_k) = 1/(2a) int_0^{t_i} ds int_{x_k - a(t_i - s)}^{x_k + a(t_i - s)} f(s, y, u(s, y)) dy.
// u(s, .) is interpolated linearly in time between grid rows; phi(y) =
// f(s, y, u(s, y)) is integrated exactly as a piecewise-linear function of y on
// the spatial grid and continued by its end values outside the window.
inline std::vector<double> forcing_field(const WaveProblem& problem, const SolverGrid& grid, const std::vector<double>& u,
                                         unsigned threads) {
    const auto nx = static_cast<std::size_t>(grid.n_x);
    const auto rows = static_cast<std::size_t>(grid.n_t + 1);
    std::vector<double> out(grid.node_count(), 0.0);
    if (!problem.f) return out;
    const auto rule = gauss_legendre(grid.time_order);
    const double dx = grid.dx();
    const double dt = grid.dt();

    // cumulative integrals for every quadrature node s in every step
    struct Slice {
        double s;
        double weight;
        int step;
        std::vector<double> phi;
        std::vector<double> cumulative;
    };
    std::vector<Slice> slices(static_cast<std::size_t>(grid.n_t) * rule.order());
    parallel_for(slices.size(), threads, [&](std::size_t idx) {
        const auto step = static_cast<int>(idx / rule.order()) + 1;
        const auto q = idx % rule.order();
        auto& sl = slices[idx];
        const double t_lo = grid.t(step - 1);
        sl.step = step;
        sl.s = t_lo + 0.5 * dt * (rule.nodes[q] + 1.0);
        sl.weight = 0.5 * dt * rule.weights[q];
        const double theta = (sl.s - t_lo) / dt;
        sl.phi.resize(nx);
        sl.cumulative.resize(nx);
        const double* lo_row = u.data() + static_cast<std::size_t>(step - 1) * nx;
        const double* hi_row = u.data() + static_cast<std::size_t>(step) * nx;
        for (std::size_t k = 0; k < nx; ++k) {
            const double us = (1.0 - theta) * lo_row[k] + theta * hi_row[k];
            sl.phi[k] = problem.f(sl.s, grid.x(static_cast<int>(k)), us);
        }
        sl.cumulative[0] = 0.0;
        for (std::size_t k = 1; k < nx; ++k) sl.cumulative[k] = sl.cumulative[k - 1] + 0.5 * dx * (sl.phi[k - 1] + sl.phi[k]);
    });

    auto primitive = [&](const Slice& sl, double y) {
        const double v = (y - grid.x_min) / dx;
        if (v <= 0.0) return (y - grid.x_min) * sl.phi.front();
        const double last = static_cast<double>(nx - 1);
        if (v >= last) return sl.cumulative.back() + (y - grid.x_max) * sl.phi.back();
        auto k = static_cast<std::size_t>(v);
        if (k >= nx - 1) k = nx - 2;
        const double th = v - static_cast<double>(k);
        return sl.cumulative[k] + dx * th * (sl.phi[k] + 0.5 * th * (sl.phi[k + 1] - sl.phi[k]));
    };

    parallel_for(rows, threads, [&](std::size_t i) {
        if (i == 0) return;
        const double t = grid.t(static_cast<int>(i));
        for (const auto& sl : slices) {
            if (sl.step > static_cast<int>(i)) break;
            const double r = problem.a * (t - sl.s);
            const double w = sl.weight / (2.0 * problem.a);
            for (std::size_t k = 0; k < nx; ++k) {
                const double x = grid.x(static_cast<int>(k));
                out[i * nx + k] += w * (primitive(sl, x + r) - primitive(sl, x - r));
            }
        }
    });
    return out;
}

} // namespace detail

// Picard iteration u^(m+1) = D + F[u^(m)] + Sigma from u^(0) = D. Sigma does
// not depend on u and is computed once. A prebuilt kernel for the same problem,
// grid and partition may be supplied to skip the sigma tables.
inline SolutionField solve(const WaveProblem& problem, const SolverGrid& grid, const StochasticMeasurePath& path,
                           const FourierExpansion* expansion, const ForcingMode& mode, const SolveOptions& options = {},
                           const StochasticKernel* kernel = nullptr) {
    validate(grid);
    cells_per_step(grid, path.partition());
    if (!(options.tolerance > 0.0)) throw ConfigError("solve: tolerance must be > 0");
    if (options.max_iter < 1) throw ConfigError("solve: max_iter must be >= 1");
    if (options.validate_problem) validate(problem, grid, options.lattice);
    if (kernel && !(kernel->grid() == grid)) throw ConfigError("solve: kernel was built for another grid");

    std::optional<StochasticKernel> own_kernel;
    if (!kernel) {
        own_kernel.emplace(problem, grid, path.partition(), options.kernel);
        kernel = &*own_kernel;
    }
    const auto rho = forcing_density(path, expansion, mode, kernel->quadrature());
    const auto sigma_term = kernel->apply(rho);
    const auto dalembert = detail::dalembert_field(problem, grid, options.threads);

    std::vector<double> u = dalembert;
    std::vector<double> history;
    double residual = std::numeric_limits<double>::infinity();
    int iter = 0;
    while (iter < options.max_iter) {
        ++iter;
        const auto forcing = detail::forcing_field(problem, grid, u, options.threads);
        residual = 0.0;
        for (std::size_t n = 0; n < u.size(); ++n) {
            const double next = dalembert[n] + forcing[n] + sigma_term[n];
            residual = std::max(residual, std::abs(next - u[n]));
            u[n] = next;
        }
        history.push_back(residual);
        if (residual <= options.tolerance) break;
    }
    if (residual > options.tolerance) {
        std::ostringstream msg;
        msg << "solve: Picard iteration did not reach tolerance " << options.tolerance << " in " << options.max_iter
            << " iterations (last residual " << residual << ")";
        throw NonconvergenceError(msg.str(), residual);
    }
    SolutionField field(grid, std::move(u));
    field.iterations_used = iter;
    field.residual = residual;
    field.residual_history = std::move(history);
    field.mode = mode;
    field.seed = path.seed();
    field.tolerance = options.tolerance;
    return field;
}

inline void write_field_csv(std::ostream& out, const SolutionField& field, const std::string& extra_meta = {}) {
    const auto& g = field.grid();
    out << "# mode=" << to_string(field.mode) << " j=" << field.mode.j << " seed=" << field.seed << "\n";
    out << "# grid delta=" << g.delta << " n_t=" << g.n_t << " x_min=" << g.x_min << " x_max=" << g.x_max
        << " n_x=" << g.n_x << " time_order=" << g.time_order << " space_order=" << g.space_order << "\n";
    out << "# tolerance=" << field.tolerance << " iterations=" << field.iterations_used << " residual=" << field.residual
        << "\n";
    if (!extra_meta.empty()) out << "# " << extra_meta << "\n";
    out << "t,x,u\n";
    char buf[128];
    for (int i = 0; i <= g.n_t; ++i) {
        for (int k = 0; k < g.n_x; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.t(i), g.x(k), field.at(i, k));
            out << buf;
        }
    }
}

inline void write_field_csv(const std::string& file, const SolutionField& field, const std::string& extra_meta = {}) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file + " for writing");
    write_field_csv(out, field, extra_meta);
    if (!out) throw IoError("write failed: " + file);
}

} // namespace smwave
