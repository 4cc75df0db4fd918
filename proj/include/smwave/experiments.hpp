#pragma once

// Monte Carlo convergence studies: for each replica a path is generated, the
// wave equation is solved once driven by the path and once per j driven by
// S_j (or the Fejer sum), and the sup-norm gap between the fields is recorded.
// Also the deterministic Fourier rate table for smoothed measures and the
// log-log rate fit.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fourier.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "sm_core.hpp"
#include "wave_solver.hpp"

namespace smwave {

enum class ModeFamily { fourier, fejer };

inline std::string to_string(ModeFamily family) { return family == ModeFamily::fourier ? "fourier" : "fejer"; }

inline ForcingMode mode_of(ModeFamily family, int j) {
    return family == ModeFamily::fourier ? ForcingMode::fourier(j) : ForcingMode::fejer(j);
}

// Linear-interpolation quantile (type 7) of unsorted data.
inline double quantile(std::vector<double> values, double p) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    // root-mean-square residual of the log-log regression
    double residual = 0.0;
    std::vector<std::size_t> used;
    std::vector<std::size_t> excluded;
};

// Ordinary least squares of log(error) on log(j). Non-positive errors are
// excluded and reported.
inline RateFit fit_rate(const std::vector<int>& j_list, const std::vector<double>& errors) {
    if (j_list.size() != errors.size()) throw ShapeError("fit_rate: j_list and errors differ in length");
    RateFit fit;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i] > 0.0 && std::isfinite(errors[i]) && j_list[i] > 0) {
            fit.used.push_back(i);
            xs.push_back(std::log(static_cast<double>(j_list[i])));
            ys.push_back(std::log(errors[i]));
        } else {
            fit.excluded.push_back(i);
        }
    }
    if (xs.size() < 2) throw FitError("fit_rate: fewer than two positive errors to fit");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw FitError("fit_rate: all j values coincide");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

struct ConvergenceReport {
    std::vector<int> j_list;
    ModeFamily family = ModeFamily::fourier;
    std::string generator;
    Seed root_seed = 0;
    std::size_t replicas = 0;
    std::size_t replicas_ok = 0;
    std::size_t replicas_failed = 0;
    // raw[r][i]: sup_error of replica r at j_list[i]; NaN for failed replicas
    std::vector<std::vector<double>> raw;
    std::vector<std::string> failures;
    std::vector<double> medians;
    std::vector<double> p90s;
    std::optional<RateFit> fit;
};

// Recomputes medians, p90s and the rate fit from the retained raw errors.
inline void summarize(ConvergenceReport& report) {
    report.medians.assign(report.j_list.size(), 0.0);
    report.p90s.assign(report.j_list.size(), 0.0);
    for (std::size_t i = 0; i < report.j_list.size(); ++i) {
        std::vector<double> column;
        for (const auto& row : report.raw) {
            if (std::isfinite(row[i])) column.push_back(row[i]);
        }
        report.medians[i] = quantile(column, 0.5);
        report.p90s[i] = quantile(column, 0.9);
    }
    report.fit.reset();
    if (report.j_list.size() >= 2) {
        try {
            report.fit = fit_rate(report.j_list, report.medians);
        } catch (const FitError&) {
            // all medians zero: nothing to fit
        }
    }
}

struct StudyOptions {
    unsigned threads = 1;
    SolveOptions solve;
    std::size_t kernel_materialize_limit = 64u << 20;
    double max_failed_fraction = 0.05;
};

inline std::string generator_label(const GeneratorSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::string {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, LebesgueSpec>) return "lebesgue";
            else if constexpr (std::is_same_v<S, ZeroSpec>) return "zero";
            else if constexpr (std::is_same_v<S, WienerSpec>) return "wiener";
            else if constexpr (std::is_same_v<S, FbmSpec>) return "fbm(H=" + std::to_string(s.hurst) + ")";
            else if constexpr (std::is_same_v<S, SubFbmSpec>) return "subfbm(H=" + std::to_string(s.hurst) + ")";
            else if constexpr (std::is_same_v<S, SeriesSmSpec>) return "series(N=" + std::to_string(s.truncation) + ")";
            else return "smoothed";
        },
        spec.kind);
}

// Replica r uses seed derive_seed(root_seed, r). The reference field is the
// path-driven solution on the same grid, so the recorded error isolates the
// substitution of the driving measure.
inline ConvergenceReport run_convergence_study(const WaveProblem& problem, const SolverGrid& grid,
                                               const Partition& partition, const GeneratorSpec& sm_spec,
                                               ModeFamily family, const std::vector<int>& j_list,
                                               std::size_t replicas, Seed root_seed,
                                               const StudyOptions& options = {}) {
    if (j_list.empty()) throw ConfigError("study: j_list is empty");
    for (std::size_t i = 1; i < j_list.size(); ++i) {
        if (j_list[i] <= j_list[i - 1]) throw ConfigError("study: j_list must be strictly increasing");
    }
    if (j_list.front() < 0) throw ConfigError("study: j must be >= 0");
    if (replicas < 1) throw ConfigError("study: replicas must be >= 1");
    validate(grid);
    cells_per_step(grid, partition);
    validate(problem, grid, options.solve.lattice);

    KernelOptions kopts = options.solve.kernel;
    kopts.materialize_limit = options.kernel_materialize_limit;
    kopts.threads = options.threads;
    const StochasticKernel kernel(problem, grid, partition, kopts);

    SolveOptions per_solve = options.solve;
    per_solve.validate_problem = false;
    per_solve.threads = 1;
    per_solve.kernel.threads = 1;

    ConvergenceReport report;
    report.j_list = j_list;
    report.family = family;
    report.generator = generator_label(sm_spec);
    report.root_seed = root_seed;
    report.replicas = replicas;
    report.raw.assign(replicas, std::vector<double>(j_list.size(), std::numeric_limits<double>::quiet_NaN()));
    std::vector<std::string> failure(replicas);
    const int max_order = j_list.back();

    parallel_for(replicas, options.threads, [&](std::size_t r) {
        try {
            const auto path = generate(sm_spec, partition, derive_seed(root_seed, r));
            const auto expansion = expand(path, max_order);
            const auto reference = solve(problem, grid, path, nullptr, ForcingMode::sm_path(), per_solve, &kernel);
            std::vector<double> row(j_list.size());
            for (std::size_t i = 0; i < j_list.size(); ++i) {
                const auto approx = solve(problem, grid, path, &expansion, mode_of(family, j_list[i]), per_solve, &kernel);
                row[i] = sup_error(approx, reference);
            }
            report.raw[r] = std::move(row);
        } catch (const Error& e) {
            failure[r] = e.what();
        }
    });

    for (std::size_t r = 0; r < replicas; ++r) {
        if (failure[r].empty()) {
            ++report.replicas_ok;
        } else {
            ++report.replicas_failed;
            report.failures.push_back("replica " + std::to_string(r) + ": " + failure[r]);
        }
    }
    summarize(report);
    if (static_cast<double>(report.replicas_failed) > options.max_failed_fraction * static_cast<double>(replicas)) {
        throw StudyError("study: " + std::to_string(report.replicas_failed) + " of " + std::to_string(replicas) +
                         " replicas failed (first: " + report.failures.front() + ")");
    }
    return report;
}

struct ConvergenceVerdict {
    double median_ratio = 0.0;
    double p90_ratio = 0.0;
    int inversions = 0;
    bool pass = false;
};

// Convergence in probability, desk-scale surrogate: median and p90 at the
// largest j each below `ratio` times their value at the smallest j, and at
// most `max_inversions` increases along the median sequence.
inline ConvergenceVerdict assess_convergence(const ConvergenceReport& report, double ratio = 0.25,
                                             int max_inversions = 1) {
    ConvergenceVerdict v;
    if (report.medians.size() < 2) return v;
    auto safe_ratio = [](double last, double first) {
        if (first == 0.0) return last == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return last / first;
    };
    v.median_ratio = safe_ratio(report.medians.back(), report.medians.front());
    v.p90_ratio = safe_ratio(report.p90s.back(), report.p90s.front());
    for (std::size_t i = 1; i < report.medians.size(); ++i) {
        if (report.medians[i] > report.medians[i - 1]) ++v.inversions;
    }
    v.pass = v.median_ratio < ratio && v.p90_ratio < ratio && v.inversions <= max_inversions;
    return v;
}

// ---------------------------------------------------------------------------
// Fourier rate for smoothed measures

struct RateExampleSpec {
    SmoothedSmSpec measure;
    std::vector<int> j_list;
    int y_points = 5;
    int t_points = 2049;
    // 0 selects max(8 * max j, 4096)
    int quadrature_cells = 0;
};

struct RateRow {
    int j = 0;
    double sup_error = 0.0;
};

struct RateExampleResult {
    std::vector<RateRow> deterministic;
    std::optional<RateFit> fit;
    std::optional<ConvergenceReport> stochastic;
};

namespace detail {

inline std::function<double(double, double)> time_derivative(const SmoothedSmSpec& spec) {
    if (spec.kernel_dt) return spec.kernel_dt;
    const auto h = spec.kernel;
    return [h](double t, double y) {
        constexpr double step = 1e-5;
        if (t < step) return (-3.0 * h(t, y) + 4.0 * h(t + step, y) - h(t + 2 * step, y)) / (2 * step);
        if (t > 1.0 - step) return (3.0 * h(t, y) - 4.0 * h(t - step, y) + h(t - 2 * step, y)) / (2 * step);
        return (h(t + step, y) - h(t - step, y)) / (2 * step);
    };
}

// Second differences of h in t on a lattice must stay finite and settle as the
// step shrinks; at a kink they grow like 1/step.
inline void check_twice_differentiable(const SmoothedSmSpec& spec, int y_points) {
    constexpr int nt = 65;
    constexpr double coarse = 1e-3, fine = 1e-4;
    auto d2 = [&](double t, double y, double step) {
        return (spec.kernel(t + step, y) - 2.0 * spec.kernel(t, y) + spec.kernel(t - step, y)) / (step * step);
    };
    for (int iy = 0; iy < std::max(2, y_points); ++iy) {
        const double y = spec.y_lo + (spec.y_hi - spec.y_lo) * iy / (std::max(2, y_points) - 1);
        for (int it = 1; it < nt - 1; ++it) {
            const double t = static_cast<double>(it) / (nt - 1);
            const double a = d2(t, y, coarse), b = d2(t, y, fine);
            if (!std::isfinite(a) || !std::isfinite(b) || std::abs(b) > 4.0 * std::abs(a) + 10.0) {
                throw ContractError("rate example: kernel is not twice differentiable in t near t=" + std::to_string(t));
            }
        }
    }
}

} // namespace detail

// For each y on a lattice and each j: sup_t |dh/dt(t,y) - S_j^(h)(t,y)|; the
// row keeps the maximum over y.
inline std::vector<RateRow> deterministic_rate_table(const RateExampleSpec& spec) {
    if (spec.j_list.empty()) throw ConfigError("rate example: j_list is empty");
    detail::check_twice_differentiable(spec.measure, spec.y_points);
    const auto dh = detail::time_derivative(spec.measure);
    const int j_max = *std::max_element(spec.j_list.begin(), spec.j_list.end());
    const int cells = spec.quadrature_cells > 0 ? spec.quadrature_cells : std::max(8 * j_max, 4096);
    const int ny = std::max(1, spec.y_points);
    const int nt = std::max(2, spec.t_points);

    std::vector<RateRow> rows(spec.j_list.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].j = spec.j_list[i];
    for (int iy = 0; iy < ny; ++iy) {
        const double y = ny == 1 ? spec.measure.y_hi
                                 : spec.measure.y_lo + (spec.measure.y_hi - spec.measure.y_lo) * iy / (ny - 1);
        const auto f = [&](double t) { return dh(t, y); };
        const DeterministicFourierSeries series(f, j_max, cells);
        for (int it = 0; it < nt; ++it) {
            const double t = static_cast<double>(it) / (nt - 1);
            const auto sums = series.partial_sums_upto(j_max, t);
            const double exact = f(t);
            for (auto& row : rows) {
                row.sup_error = std::max(row.sup_error, std::abs(exact - sums[static_cast<std::size_t>(row.j)]));
            }
        }
    }
    return rows;
}

struct StochasticRatePart {
    WaveProblem problem;
    SolverGrid grid;
    Partition partition{256};
    ModeFamily family = ModeFamily::fourier;
    std::vector<int> j_list;
    std::size_t replicas = 30;
    Seed root_seed = 0;
};

inline RateExampleResult run_rate_example(const RateExampleSpec& spec,
                                          const std::optional<StochasticRatePart>& stochastic = std::nullopt,
                                          const StudyOptions& options = {}) {
    validate(spec.measure);
    RateExampleResult result;
    result.deterministic = deterministic_rate_table(spec);
    std::vector<double> errors;
    for (const auto& r : result.deterministic) errors.push_back(r.sup_error);
    try {
        result.fit = fit_rate(spec.j_list, errors);
    } catch (const FitError&) {
        // exact representation: errors vanish, no rate to report
    }
    if (stochastic) {
        const GeneratorSpec gen{spec.measure};
        result.stochastic = run_convergence_study(stochastic->problem, stochastic->grid, stochastic->partition, gen,
                                                  stochastic->family, stochastic->j_list, stochastic->replicas,
                                                  stochastic->root_seed, options);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Output

inline void write_report_csv(std::ostream& out, const ConvergenceReport& report) {
    out << "j,median,p90,replicas_ok,replicas_failed\n";
    char buf[160];
    for (std::size_t i = 0; i < report.j_list.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%zu,%zu\n", report.j_list[i], report.medians[i], report.p90s[i],
                      report.replicas_ok, report.replicas_failed);
        out << buf;
    }
}

inline void write_raw_csv(std::ostream& out, const ConvergenceReport& report) {
    out << "replica,j,sup_error\n";
    char buf[128];
    for (std::size_t r = 0; r < report.raw.size(); ++r) {
        for (std::size_t i = 0; i < report.j_list.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%d,%.17g\n", r, report.j_list[i], report.raw[r][i]);
            out << buf;
        }
    }
}

inline void write_rate_csv(std::ostream& out, const RateExampleResult& result) {
    if (result.fit) {
        char head[160];
        std::snprintf(head, sizeof head, "# slope=%.17g intercept=%.17g residual=%.17g\n", result.fit->slope,
                      result.fit->intercept, result.fit->residual);
        out << head;
    }
    out << "j,sup_error\n";
    char buf[96];
    for (const auto& r : result.deterministic) {
        std::snprintf(buf, sizeof buf, "%d,%.17g\n", r.j, r.sup_error);
        out << buf;
    }
}

// report.csv, raw.csv and meta.txt into an existing directory.
inline void write_report_files(const std::filesystem::path& dir, const ConvergenceReport& report,
                               const std::string& meta) {
    if (!std::filesystem::is_directory(dir)) throw IoError("output directory does not exist: " + dir.string());
    auto open = [&](const char* name) {
        std::ofstream out(dir / name);
        if (!out) throw IoError("cannot open " + (dir / name).string() + " for writing");
        return out;
    };
    {
        auto out = open("report.csv");
        write_report_csv(out, report);
    }
    {
        auto out = open("raw.csv");
        write_raw_csv(out, report);
    }
    {
        auto out = open("meta.txt");
        out << meta;
        if (!meta.empty() && meta.back() != '\n') out << "\n";
    }
}

} // namespace smwave
