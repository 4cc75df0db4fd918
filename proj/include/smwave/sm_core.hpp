#pragma once

// Sample paths of stochastic measures on (0,1], stored as increment vectors
// over a uniform power-of-two grid, together with the generator families:
// Wiener, fractional and sub-fractional Brownian motion, random series of
// signed measures, and the kernel-smoothed measure built from a base SM.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "errors.hpp"
#include "quadrature.hpp"
#include "random.hpp"

namespace smwave {

// Uniform partition of (0,1] into n_cells cells ((i/n, (i+1)/n]).
class Partition {
public:
    explicit Partition(std::int64_t n_cells) : n_cells_(n_cells) {
        if (n_cells < 2 || (n_cells & (n_cells - 1)) != 0) {
            throw ParameterError("partition: n_cells must be a power of two >= 2, got " +
                                 std::to_string(n_cells));
        }
    }

    std::int64_t n_cells() const noexcept { return n_cells_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(n_cells_); }
    double cell_width() const noexcept { return 1.0 / static_cast<double>(n_cells_); }
    // Boundary i/n; index 0 is t = 0, index n is t = 1.
    double boundary(std::int64_t i) const noexcept {
        return static_cast<double>(i) / static_cast<double>(n_cells_);
    }
    int level() const noexcept {
        int n = 0;
        while ((std::int64_t{1} << n) < n_cells_) ++n;
        return n;
    }

    // Boundary index of a grid-aligned point, AlignmentError otherwise.
    std::int64_t boundary_index(double t) const {
        const double scaled = t * static_cast<double>(n_cells_);
        const double rounded = std::round(scaled);
        if (!(t >= 0.0 && t <= 1.0) || std::abs(scaled - rounded) > 1e-9) {
            std::ostringstream msg;
            msg << "point t=" << t << " is not on the grid of " << n_cells_ << " cells";
            throw AlignmentError(msg.str());
        }
        return static_cast<std::int64_t>(rounded);
    }

    bool operator==(const Partition&) const = default;

private:
    std::int64_t n_cells_;
};

enum class GeneratorTag { lebesgue, zero, wiener, fbm, subfbm, series, smoothed, coarsened, custom };

inline std::string to_string(GeneratorTag tag) {
    switch (tag) {
    case GeneratorTag::lebesgue: return "lebesgue";
    case GeneratorTag::zero: return "zero";
    case GeneratorTag::wiener: return "wiener";
    case GeneratorTag::fbm: return "fbm";
    case GeneratorTag::subfbm: return "subfbm";
    case GeneratorTag::series: return "series";
    case GeneratorTag::smoothed: return "smoothed";
    case GeneratorTag::coarsened: return "coarsened";
    case GeneratorTag::custom: return "custom";
    }
    return "custom";
}

inline GeneratorTag parse_generator_tag(const std::string& name) {
    for (auto tag : {GeneratorTag::lebesgue, GeneratorTag::zero, GeneratorTag::wiener,
                     GeneratorTag::fbm, GeneratorTag::subfbm, GeneratorTag::series,
                     GeneratorTag::smoothed, GeneratorTag::coarsened, GeneratorTag::custom}) {
        if (to_string(tag) == name) return tag;
    }
    throw ParameterError("unknown generator tag '" + name + "'");
}

// A realized stochastic measure: increments[i] = mu((i/n, (i+1)/n]).
// Immutable after construction.
class StochasticMeasurePath {
public:
    StochasticMeasurePath(Partition partition, std::vector<double> increments, Seed seed,
                          GeneratorTag tag)
        : partition_(partition), increments_(std::move(increments)), seed_(seed), tag_(tag) {
        if (increments_.size() != partition_.size()) {
            throw ShapeError("path: increment count does not match the partition");
        }
    }

    const Partition& partition() const noexcept { return partition_; }
    const std::vector<double>& increments() const noexcept { return increments_; }
    double increment(std::size_t i) const { return increments_.at(i); }
    std::size_t size() const noexcept { return increments_.size(); }
    Seed seed() const noexcept { return seed_; }
    GeneratorTag generator_tag() const noexcept { return tag_; }

    // Increment-level linear combination alpha*this + beta*other.
    StochasticMeasurePath combine(double alpha, const StochasticMeasurePath& other,
                                  double beta) const {
        if (!(other.partition_ == partition_)) throw ShapeError("combine: partitions differ");
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) {
            out[i] = alpha * increments_[i] + beta * other.increments_[i];
        }
        return {partition_, std::move(out), seed_, GeneratorTag::custom};
    }

    StochasticMeasurePath scaled(double alpha) const {
        std::vector<double> out(increments_);
        for (auto& v : out) v *= alpha;
        return {partition_, std::move(out), seed_, tag_};
    }

private:
    Partition partition_;
    std::vector<double> increments_;
    Seed seed_;
    GeneratorTag tag_;
};

// mu((s,t]) for grid-aligned s <= t, summed in ascending index order.
inline double measure_of(const StochasticMeasurePath& path, double s, double t) {
    const auto& part = path.partition();
    const auto lo = part.boundary_index(s);
    const auto hi = part.boundary_index(t);
    if (lo > hi) throw ParameterError("measure_of: interval (s,t] requires s <= t");
    double acc = 0.0;
    for (auto i = lo; i < hi; ++i) acc += path.increments()[static_cast<std::size_t>(i)];
    return acc;
}

// Same as measure_of but by boundary indices.
inline double measure_of_cells(const StochasticMeasurePath& path, std::int64_t lo, std::int64_t hi) {
    double acc = 0.0;
    for (auto i = lo; i < hi; ++i) acc += path.increments()[static_cast<std::size_t>(i)];
    return acc;
}

// max_t |mu((0,t])| over grid points: the random constant of the pathwise
// boundedness assumption, as witnessed on this path.
inline double sup_abs_primitive(const StochasticMeasurePath& path) {
    double acc = 0.0;
    double best = 0.0;
    for (double v : path.increments()) {
        acc += v;
        best = std::max(best, std::abs(acc));
    }
    return best;
}

inline StochasticMeasurePath coarsen(const StochasticMeasurePath& path, const Partition& target) {
    const auto fine = path.partition().n_cells();
    const auto coarse = target.n_cells();
    if (coarse > fine || fine % coarse != 0) {
        throw AlignmentError("coarsen: target cell count " + std::to_string(coarse) +
                             " does not divide " + std::to_string(fine));
    }
    if (coarse == fine) return path;
    const auto ratio = fine / coarse;
    std::vector<double> out(target.size(), 0.0);
    for (std::int64_t c = 0; c < coarse; ++c) {
        out[static_cast<std::size_t>(c)] = measure_of_cells(path, c * ratio, (c + 1) * ratio);
    }
    return {target, std::move(out), path.seed(), path.generator_tag()};
}

// ---------------------------------------------------------------------------
// Generator specifications

struct LebesgueSpec {};
struct ZeroSpec {};
struct WienerSpec {};

struct FbmSpec {
    double hurst = 0.75;
};

// Sub-fractional Brownian motion, 1/2 < H < 1.
struct SubFbmSpec {
    double hurst = 0.75;
};

struct CoefficientLaw {
    enum class Kind { constant, normal, rademacher, cauchy };
    Kind kind = Kind::normal;
    double scale = 1.0;
    // xi_n = scale * decay^n * Z_n for n >= 1 (Z_n = 1 for the constant law)
    double decay = 1.0;

    bool heavy_tailed() const noexcept { return kind == Kind::cauchy; }
    double scale_of(int n) const { return scale * std::pow(decay, n); }
};

inline std::string to_string(CoefficientLaw::Kind kind) {
    switch (kind) {
    case CoefficientLaw::Kind::constant: return "constant";
    case CoefficientLaw::Kind::normal: return "normal";
    case CoefficientLaw::Kind::rademacher: return "rademacher";
    case CoefficientLaw::Kind::cauchy: return "cauchy";
    }
    return "normal";
}

// Density of a signed measure on (0,1]; m(A) = integral of density over A.
struct SignedDensity {
    std::string name;
    std::function<double(double)> density;
};

struct SeriesSmSpec {
    CoefficientLaw coefficient_law;
    std::vector<SignedDensity> signed_measures;
    int truncation = 1;
};

struct GeneratorSpec;

// mu(A) = int_[a,b] dzeta(y) int_A dh(t,y)/dt dt, with zeta generated from
// `base` on (0,1] and transported affinely onto [y_lo, y_hi].
struct SmoothedSmSpec {
    std::function<double(double, double)> kernel;
    // Optional analytic dh/dt, used by the Fourier rate experiment.
    std::function<double(double, double)> kernel_dt;
    double y_lo = 0.0;
    double y_hi = 1.0;
    double hoelder_gamma = 1.0;
    double lipschitz_L = 1.0;
    std::shared_ptr<const GeneratorSpec> base;
    std::int64_t y_cells = 256;
    int validation_points = 9;
};

struct GeneratorSpec {
    std::variant<LebesgueSpec, ZeroSpec, WienerSpec, FbmSpec, SubFbmSpec, SeriesSmSpec,
                 SmoothedSmSpec>
        kind;
};

// ---------------------------------------------------------------------------
// Generators. All are pure functions of (spec, partition, seed).

inline StochasticMeasurePath generate_lebesgue(const Partition& partition) {
    return {partition, std::vector<double>(partition.size(), partition.cell_width()), 0,
            GeneratorTag::lebesgue};
}

inline StochasticMeasurePath generate_zero(const Partition& partition) {
    return {partition, std::vector<double>(partition.size(), 0.0), 0, GeneratorTag::zero};
}

namespace detail {

inline std::vector<double> standard_normals(std::size_t n, Seed seed) {
    auto engine = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(n);
    for (auto& v : z) v = normal(engine);
    return z;
}

enum class CovarianceKind { fbm, subfbm };

inline Eigen::MatrixXd increment_covariance(CovarianceKind kind, std::int64_t n, double hurst) {
    const double two_h = 2.0 * hurst;
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd cov(N, N);
    if (kind == CovarianceKind::fbm) {
        const double scale = std::pow(static_cast<double>(n), -two_h);
        for (Eigen::Index i = 0; i < N; ++i) {
            for (Eigen::Index j = 0; j < N; ++j) {
                const double d = std::abs(static_cast<double>(i - j));
                cov(i, j) = 0.5 * (std::pow(d + 1.0, two_h) + std::pow(std::abs(d - 1.0), two_h) -
                                   2.0 * std::pow(d, two_h)) *
                            scale;
            }
        }
        return cov;
    }
    // sub-fBm: C(s,t) = s^2H + t^2H - ((s+t)^2H + |s-t|^2H) / 2
    auto c = [two_h](double s, double t) {
        return std::pow(s, two_h) + std::pow(t, two_h) -
               0.5 * (std::pow(s + t, two_h) + std::pow(std::abs(s - t), two_h));
    };
    const double h = 1.0 / static_cast<double>(n);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j < N; ++j) {
            const double si = i * h, ti = (i + 1) * h, sj = j * h, tj = (j + 1) * h;
            cov(i, j) = c(ti, tj) - c(ti, sj) - c(si, tj) + c(si, sj);
        }
    }
    return cov;
}

// Cholesky factors are cached per (kind, n, H); setup is O(n^3).
inline std::shared_ptr<const Eigen::MatrixXd> cholesky_factor(CovarianceKind kind, std::int64_t n,
                                                              double hurst) {
    static std::mutex mutex;
    static std::map<std::tuple<int, std::int64_t, double>, std::shared_ptr<const Eigen::MatrixXd>>
        cache;
    const auto key = std::make_tuple(static_cast<int>(kind), n, hurst);
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    Eigen::MatrixXd cov = increment_covariance(kind, n, hurst);
    const double mean_diag = cov.diagonal().mean();
    std::shared_ptr<const Eigen::MatrixXd> factor;
    for (double jitter : {0.0, 1e-14, 1e-12, 1e-10, 1e-8}) {
        Eigen::MatrixXd trial = cov;
        trial.diagonal().array() += jitter * mean_diag;
        Eigen::LLT<Eigen::MatrixXd> llt(trial);
        if (llt.info() == Eigen::Success) {
            factor = std::make_shared<const Eigen::MatrixXd>(llt.matrixL());
            break;
        }
    }
    if (!factor) {
        throw GenerationError("increment covariance is not positive definite after jitter (n=" +
                              std::to_string(n) + ", H=" + std::to_string(hurst) + ")");
    }
    std::lock_guard lock(mutex);
    cache.emplace(key, factor);
    return factor;
}

inline std::vector<double> correlated_increments(CovarianceKind kind, const Partition& partition,
                                                 double hurst, Seed seed) {
    const auto factor = cholesky_factor(kind, partition.n_cells(), hurst);
    const auto z = standard_normals(partition.size(), seed);
    const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
    const Eigen::VectorXd x = factor->triangularView<Eigen::Lower>() * zv;
    return {x.data(), x.data() + x.size()};
}

// Integral of a density over (lo, hi] by 8-point Gauss-Legendre.
inline double density_mass(const std::function<double(double)>& density, double lo, double hi) {
    static const GaussLegendreRule rule = gauss_legendre(8);
    return integrate_gl(rule, density, lo, hi);
}

} // namespace detail

inline StochasticMeasurePath generate_wiener(const Partition& partition, Seed seed) {
    auto z = detail::standard_normals(partition.size(), seed);
    const double sd = std::sqrt(partition.cell_width());
    for (auto& v : z) v *= sd;
    return {partition, std::move(z), seed, GeneratorTag::wiener};
}

// Exact fBm increments by Cholesky of the increment covariance.
// H = 1/2 is admitted as the Brownian degenerate case.
inline StochasticMeasurePath generate_fbm(const Partition& partition, double hurst, Seed seed) {
    if (!(hurst >= 0.5 && hurst <= 1.0)) {
        throw ParameterError("fbm: Hurst index must lie in (1/2, 1] for a stochastic measure "
                             "(1/2 allowed as the Brownian case), got " + std::to_string(hurst));
    }
    return {partition,
            detail::correlated_increments(detail::CovarianceKind::fbm, partition, hurst, seed),
            seed, GeneratorTag::fbm};
}

inline StochasticMeasurePath generate_subfractional(const Partition& partition, double hurst,
                                                    Seed seed) {
    if (!(hurst > 0.5 && hurst < 1.0)) {
        throw ParameterError("subfbm: Hurst index must lie in (1/2, 1), got " +
                             std::to_string(hurst));
    }
    return {partition,
            detail::correlated_increments(detail::CovarianceKind::subfbm, partition, hurst, seed),
            seed, GeneratorTag::subfbm};
}

// Total-variation mass of each density must be <= 1 (|m_n(A)| <= 1).
inline void validate(const SeriesSmSpec& spec) {
    if (spec.truncation < 1) throw SpecError("series: truncation must be >= 1");
    if (spec.signed_measures.size() < static_cast<std::size_t>(spec.truncation)) {
        throw SpecError("series: " + std::to_string(spec.truncation) + " terms requested but only " +
                        std::to_string(spec.signed_measures.size()) + " signed measures given");
    }
    if (!(spec.coefficient_law.scale >= 0.0) || !std::isfinite(spec.coefficient_law.decay)) {
        throw SpecError("series: coefficient law needs scale >= 0 and finite decay");
    }
    const auto abs_rule = gauss_legendre(4);
    constexpr int panels = 4096;
    for (int n = 0; n < spec.truncation; ++n) {
        const auto& m = spec.signed_measures[static_cast<std::size_t>(n)];
        if (!m.density) throw SpecError("series: signed measure " + m.name + " has no density");
        const double mass = integrate_gl_composite(
            abs_rule, [&](double t) { return std::abs(m.density(t)); }, 0.0, 1.0, panels);
        if (mass > 1.0 + 1e-6) {
            throw SpecError("series: signed measure '" + m.name + "' has total variation " +
                            std::to_string(mass) + " > 1");
        }
    }
}

namespace detail {

// generate_series_sm without the total-variation validation.
inline StochasticMeasurePath series_path(const SeriesSmSpec& spec, const Partition& partition, Seed seed) {
    auto engine = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    std::cauchy_distribution<double> cauchy(0.0, 1.0);
    std::vector<double> out(partition.size(), 0.0);
    std::vector<double> cell_mass(partition.size());
    for (int n = 1; n <= spec.truncation; ++n) {
        const double s = spec.coefficient_law.scale_of(n);
        double xi = 0.0;
        switch (spec.coefficient_law.kind) {
        case CoefficientLaw::Kind::constant: xi = s; break;
        case CoefficientLaw::Kind::normal: xi = s * normal(engine); break;
        case CoefficientLaw::Kind::rademacher: xi = coin(engine) ? s : -s; break;
        case CoefficientLaw::Kind::cauchy: xi = s * cauchy(engine); break;
        }
        const auto& m = spec.signed_measures[static_cast<std::size_t>(n - 1)];
        for (std::int64_t i = 0; i < partition.n_cells(); ++i) {
            cell_mass[static_cast<std::size_t>(i)] =
                detail::density_mass(m.density, partition.boundary(i), partition.boundary(i + 1));
        }
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += xi * cell_mass[i];
    }
    return {partition, std::move(out), seed, GeneratorTag::series};
}

} // namespace detail

inline StochasticMeasurePath generate_series_sm(const SeriesSmSpec& spec, const Partition& partition,
                                                Seed seed) {
    validate(spec);
    return detail::series_path(spec, partition, seed);
}

inline StochasticMeasurePath generate(const GeneratorSpec& spec, const Partition& partition,
                                      Seed seed);

// Lattice check of |h(t,y) - h(s,x)| <= L(|t-s| + |y-x|^gamma) and h(0,y) = 0.
inline void validate(const SmoothedSmSpec& spec) {
    if (!spec.kernel) throw SpecError("smoothed: kernel is not set");
    if (!spec.base) throw SpecError("smoothed: base stochastic measure is not set");
    if (!(spec.hoelder_gamma > 0.5 && spec.hoelder_gamma <= 1.0)) {
        throw SpecError("smoothed: Hoelder exponent gamma must lie in (1/2, 1]");
    }
    if (!(spec.y_hi > spec.y_lo)) throw SpecError("smoothed: empty y-range");
    if (spec.y_cells < 2 || (spec.y_cells & (spec.y_cells - 1)) != 0) {
        throw SpecError("smoothed: y_cells must be a power of two >= 2");
    }
    const int m = std::max(2, spec.validation_points);
    std::vector<double> ts(static_cast<std::size_t>(m)), ys(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        ts[static_cast<std::size_t>(i)] = static_cast<double>(i) / (m - 1);
        ys[static_cast<std::size_t>(i)] = spec.y_lo + (spec.y_hi - spec.y_lo) * i / (m - 1);
    }
    for (double y : ys) {
        if (std::abs(spec.kernel(0.0, y)) > 1e-12) {
            throw SpecError("smoothed: kernel must vanish at t=0 (h(0," + std::to_string(y) + ") != 0)");
        }
    }
    for (double t1 : ts) {
        for (double y1 : ys) {
            const double h1 = spec.kernel(t1, y1);
            for (double t2 : ts) {
                for (double y2 : ys) {
                    const double lhs = std::abs(h1 - spec.kernel(t2, y2));
                    const double rhs = spec.lipschitz_L *
                                       (std::abs(t1 - t2) + std::pow(std::abs(y1 - y2), spec.hoelder_gamma));
                    if (lhs > rhs * (1.0 + 1e-9) + 1e-12) {
                        std::ostringstream msg;
                        msg << "smoothed: kernel violates the Hoelder bound with L=" << spec.lipschitz_L
                            << ", gamma=" << spec.hoelder_gamma << " at (" << t1 << "," << y1
                            << ") vs (" << t2 << "," << y2 << ")";
                        throw SpecError(msg.str());
                    }
                }
            }
        }
    }
}

// increments[i] = sum_l [h(t_{i+1}, y_l) - h(t_i, y_l)] dzeta_l, y_l the left
// endpoint of zeta cell l.
namespace detail {

// generate_smoothed_sm without the kernel validation, for callers that
// validated the spec once and sample it many times.
inline StochasticMeasurePath smoothed_path(const SmoothedSmSpec& spec, const Partition& partition, Seed seed) {
    const Partition y_partition(spec.y_cells);
    const auto zeta = generate(*spec.base, y_partition, derive_seed(seed, 1));
    const double y_step = (spec.y_hi - spec.y_lo) / static_cast<double>(spec.y_cells);
    std::vector<double> ys(y_partition.size());
    for (std::size_t l = 0; l < ys.size(); ++l) ys[l] = spec.y_lo + static_cast<double>(l) * y_step;

    std::vector<double> prev(ys.size());
    for (std::size_t l = 0; l < ys.size(); ++l) prev[l] = spec.kernel(0.0, ys[l]);
    std::vector<double> out(partition.size());
    for (std::int64_t i = 0; i < partition.n_cells(); ++i) {
        const double t_next = partition.boundary(i + 1);
        double acc = 0.0;
        for (std::size_t l = 0; l < ys.size(); ++l) {
            const double next = spec.kernel(t_next, ys[l]);
            acc += (next - prev[l]) * zeta.increments()[l];
            prev[l] = next;
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return {partition, std::move(out), seed, GeneratorTag::smoothed};
}

} // namespace detail

inline StochasticMeasurePath generate_smoothed_sm(const SmoothedSmSpec& spec,
                                                  const Partition& partition, Seed seed) {
    validate(spec);
    return detail::smoothed_path(spec, partition, seed);
}

inline StochasticMeasurePath generate(const GeneratorSpec& spec, const Partition& partition,
                                      Seed seed) {
    return std::visit(
        [&](const auto& s) -> StochasticMeasurePath {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, LebesgueSpec>) return generate_lebesgue(partition);
            else if constexpr (std::is_same_v<S, ZeroSpec>) return generate_zero(partition);
            else if constexpr (std::is_same_v<S, WienerSpec>) return generate_wiener(partition, seed);
            else if constexpr (std::is_same_v<S, FbmSpec>) return generate_fbm(partition, s.hurst, seed);
            else if constexpr (std::is_same_v<S, SubFbmSpec>)
                return generate_subfractional(partition, s.hurst, seed);
            else if constexpr (std::is_same_v<S, SeriesSmSpec>)
                return generate_series_sm(s, partition, seed);
            else return generate_smoothed_sm(s, partition, seed);
        },
        spec.kind);
}

// True when the spec draws randomness (Lebesgue, zero, constant series are
// deterministic).
inline bool is_random(const GeneratorSpec& spec) {
    return std::visit(
        [](const auto& s) -> bool {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, LebesgueSpec> || std::is_same_v<S, ZeroSpec>) return false;
            else if constexpr (std::is_same_v<S, SeriesSmSpec>)
                return s.coefficient_law.kind != CoefficientLaw::Kind::constant;
            else if constexpr (std::is_same_v<S, SmoothedSmSpec>) return s.base && is_random(*s.base);
            else return true;
        },
        spec.kind);
}

// ---------------------------------------------------------------------------
// CSV: "# generator=<tag> seed=<s> n_cells=<n>" then index,t_left,t_right,increment

inline void write_path_csv(std::ostream& out, const StochasticMeasurePath& path) {
    const auto& part = path.partition();
    out << "# generator=" << to_string(path.generator_tag()) << " seed=" << path.seed()
        << " n_cells=" << part.n_cells() << "\n";
    out << "index,t_left,t_right,increment\n";
    char buf[128];
    for (std::int64_t i = 0; i < part.n_cells(); ++i) {
        std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(i),
                      part.boundary(i), part.boundary(i + 1),
                      path.increments()[static_cast<std::size_t>(i)]);
        out << buf;
    }
}

inline void write_path_csv(const std::string& file, const StochasticMeasurePath& path) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file + " for writing");
    write_path_csv(out, path);
    if (!out) throw IoError("write failed: " + file);
}

inline StochasticMeasurePath read_path_csv(std::istream& in) {
    std::string line;
    GeneratorTag tag = GeneratorTag::custom;
    Seed seed = 0;
    std::int64_t n_cells = -1;
    std::vector<double> increments;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream fields(line.substr(1));
            std::string kv;
            while (fields >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) continue;
                const auto key = kv.substr(0, eq);
                const auto value = kv.substr(eq + 1);
                if (key == "generator") tag = parse_generator_tag(value);
                else if (key == "seed") seed = std::stoull(value);
                else if (key == "n_cells") n_cells = std::stoll(value);
            }
            continue;
        }
        if (!header_seen) {
            if (line != "index,t_left,t_right,increment") throw ConfigError("path csv: bad header");
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cols;
        while (std::getline(row, cell, ',')) cols.push_back(cell);
        if (cols.size() != 4) throw ConfigError("path csv: expected 4 columns in '" + line + "'");
        if (std::stoll(cols[0]) != static_cast<long long>(increments.size())) {
            throw ConfigError("path csv: rows out of order");
        }
        increments.push_back(std::stod(cols[3]));
    }
    if (n_cells >= 0 && n_cells != static_cast<std::int64_t>(increments.size())) {
        throw ConfigError("path csv: n_cells in metadata disagrees with row count");
    }
    return {Partition(static_cast<std::int64_t>(increments.size())), std::move(increments), seed, tag};
}

} // namespace smwave
