#pragma once

// Integrals of deterministic functions against a stochastic-measure path:
// the left-endpoint partition sum, the dyadic version scheme built from
// nested cells ((k-1)2^-n, k2^-n], the majorant for that version, and two
// numerical harnesses (uniform convergence of integrals for a converging
// integrand family, and L2-continuity of the integral in probability).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "exact_sum.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "sm_core.hpp"

namespace smwave {

template <class G>
concept Integrand = std::invocable<const G&, double> &&
                    std::convertible_to<std::invoke_result_t<const G&, double>, double>;

// sum over cells in (0,t] of g(left endpoint) * increment, ascending order.
template <Integrand G>
double integrate(const G& g, const StochasticMeasurePath& path, double t) {
    const auto& part = path.partition();
    const auto hi = part.boundary_index(t);
    double acc = 0.0;
    for (std::int64_t i = 0; i < hi; ++i) {
        acc += g(part.boundary(i)) * path.increments()[static_cast<std::size_t>(i)];
    }
    return acc;
}

namespace detail {

inline void require_level(const Partition& part, int level) {
    if (level < 0) throw ResolutionError("dyadic level must be >= 0");
    if (level > part.level()) {
        throw ResolutionError("dyadic level " + std::to_string(level) + " is finer than the path grid (" +
                              std::to_string(part.n_cells()) + " cells)");
    }
}

} // namespace detail

// Integral of g^(n): sum_k g((k-1)2^-n ^ t) mu(D_kn n (0,t]). t must lie on the
// path grid; cells of level n are unions of path cells.
template <Integrand G>
double dyadic_integral(const G& g, const StochasticMeasurePath& path, double t, int level) {
    const auto& part = path.partition();
    detail::require_level(part, level);
    const auto t_index = part.boundary_index(t);
    const std::int64_t cells = std::int64_t{1} << level;
    const std::int64_t span = part.n_cells() / cells;
    double acc = 0.0;
    for (std::int64_t k = 0; k < cells; ++k) {
        const std::int64_t lo = k * span;
        if (lo >= t_index) break;
        const std::int64_t hi = std::min((k + 1) * span, t_index);
        const double left = std::min(part.boundary(lo), t);
        acc += g(left) * measure_of_cells(path, lo, hi);
    }
    return acc;
}

// The version eta~ truncated at n_max: level-0 integral plus the level
// differences, accumulated without rounding so that it equals the level-n_max
// integral bit for bit.
template <Integrand G>
double telescoped_integral(const G& g, const StochasticMeasurePath& path, double t, int n_max) {
    detail::require_level(path.partition(), n_max);
    ExactSum sum;
    double previous = dyadic_integral(g, path, t, 0);
    sum.add(previous);
    for (int n = 1; n <= n_max; ++n) {
        const double current = dyadic_integral(g, path, t, n);
        sum.add_difference(current, previous);
        previous = current;
    }
    return sum.value();
}

struct DyadicSchemeConfig {
    int max_level = 8;
    double epsilon = 0.1;
    // Only checked when set: theta in (1/(2 beta), 1) and eps < 2 theta beta - 1.
    std::optional<double> theta;
    int lattice_points = 65;
};

struct HolderData {
    double lipschitz = 1.0;
    double beta = 1.0;
};

struct IntegralBoundReport {
    double value = 0.0;
    double bound = 0.0;
    double g_zero_term = 0.0;
    double holder_series = 0.0;
    double measure_series = 0.0;
    int max_level = 0;
};

inline void validate(const DyadicSchemeConfig& config, const Partition& part, double beta) {
    if (config.max_level < 1) throw ContractError("dyadic scheme: max_level must be >= 1");
    if ((std::int64_t{1} << config.max_level) > part.n_cells()) {
        throw ContractError("dyadic scheme: 2^max_level exceeds the path cell count");
    }
    if (!(config.epsilon > 0.0)) throw ContractError("dyadic scheme: epsilon must be > 0");
    if (config.theta) {
        const double theta = *config.theta;
        if (!(theta > 1.0 / (2.0 * beta) && theta < 1.0)) {
            throw ContractError("dyadic scheme: theta must lie in (1/(2 beta), 1)");
        }
        if (!(config.epsilon < 2.0 * theta * beta - 1.0)) {
            throw ContractError("dyadic scheme: epsilon must be < 2 theta beta - 1");
        }
    }
}

// |g(t) - g(s)| <= L |t - s|^beta on an equispaced lattice of [0,1].
template <Integrand G>
void check_holder(const G& g, const HolderData& holder, int lattice_points, const std::string& what) {
    if (!(holder.beta > 0.0 && holder.beta <= 1.0)) {
        throw ContractError(what + ": Hoelder exponent must lie in (0, 1]");
    }
    const int m = std::max(2, lattice_points);
    std::vector<double> values(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) values[static_cast<std::size_t>(i)] = g(static_cast<double>(i) / (m - 1));
    for (int i = 0; i < m; ++i) {
        for (int k = i + 1; k < m; ++k) {
            const double lhs = std::abs(values[static_cast<std::size_t>(k)] - values[static_cast<std::size_t>(i)]);
            const double rhs = holder.lipschitz * std::pow(static_cast<double>(k - i) / (m - 1), holder.beta);
            if (lhs > rhs * (1.0 + 1e-9) + 1e-12) {
                std::ostringstream msg;
                msg << what << ": Hoelder condition (L=" << holder.lipschitz << ", beta=" << holder.beta
                    << ") fails between s=" << static_cast<double>(i) / (m - 1)
                    << " and s=" << static_cast<double>(k) / (m - 1);
                throw ContractError(msg.str());
            }
        }
    }
}

// Partial sums of sum_{n=1}^{n_max} 2^{-n eps} sum_k |mu(D_kn n (0,t])|^2;
// entry n-1 holds the sum truncated at level n.
inline std::vector<double> measure_series_table(const StochasticMeasurePath& path, double epsilon,
                                                double t, int n_max) {
    const auto& part = path.partition();
    detail::require_level(part, n_max);
    const auto t_index = part.boundary_index(t);
    std::vector<double> table;
    double total = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        const std::int64_t cells = std::int64_t{1} << n;
        const std::int64_t span = part.n_cells() / cells;
        double level = 0.0;
        for (std::int64_t k = 0; k < cells; ++k) {
            const std::int64_t lo = k * span;
            if (lo >= t_index) break;
            const double m = measure_of_cells(path, lo, std::min((k + 1) * span, t_index));
            level += m * m;
        }
        total += std::exp2(-n * epsilon) * level;
        table.push_back(total);
    }
    return table;
}

inline double measure_series(const StochasticMeasurePath& path, double epsilon, double t, int n_max) {
    return measure_series_table(path, epsilon, t, n_max).back();
}

// sum_{n=1}^{n_max} 2^{n eps} sum_k |g(k2^-n ^ t) - g((k-1)2^-n ^ t)|^2
template <Integrand G>
double holder_series(const G& g, double t, double epsilon, int n_max) {
    double total = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        const std::int64_t cells = std::int64_t{1} << n;
        const double h = std::ldexp(1.0, -n);
        double level = 0.0;
        for (std::int64_t k = 1; k <= cells; ++k) {
            const double right = std::min(static_cast<double>(k) * h, t);
            const double left = std::min(static_cast<double>(k - 1) * h, t);
            if (left >= t) break;
            const double d = g(right) - g(left);
            level += d * d;
        }
        total += std::exp2(n * epsilon) * level;
    }
    return total;
}

// Evaluates |eta~(t)| and the three-part majorant at the same truncation.
template <Integrand G>
IntegralBoundReport master_bound(const G& g, const StochasticMeasurePath& path, double t,
                                 const DyadicSchemeConfig& config, const HolderData& holder) {
    validate(config, path.partition(), holder.beta);
    check_holder(g, holder, config.lattice_points, "master_bound");
    IntegralBoundReport report;
    report.max_level = config.max_level;
    report.value = std::abs(telescoped_integral(g, path, t, config.max_level));
    report.g_zero_term = std::abs(g(0.0) * measure_of(path, 0.0, t));
    report.holder_series = holder_series(g, t, config.epsilon, config.max_level);
    report.measure_series = measure_series(path, config.epsilon, t, config.max_level);
    report.bound = report.g_zero_term + std::sqrt(report.holder_series) * std::sqrt(report.measure_series);
    return report;
}

// ---------------------------------------------------------------------------
// Uniform convergence harness

template <class Z>
struct IntegrandFamily {
    // g_j(z, s) for the family index j
    std::function<double(int, const Z&, double)> member;
    // g(z, s)
    std::function<double(const Z&, double)> limit;
    HolderData holder;
};

struct SupDifferenceRow {
    int j = 0;
    double sup_diff = 0.0;
    // sup over (z, s) lattice of |g_j - g|, hypothesis (i) witness
    double integrand_gap = 0.0;
};

struct HarnessOptions {
    int lattice_points = 33;
};

// For each j: sup over (z, t) samples of |int g_j dmu - int g dmu| on (0,t].
template <class Z>
std::vector<SupDifferenceRow> lemma1_harness(const IntegrandFamily<Z>& family,
                                             const StochasticMeasurePath& path,
                                             const std::vector<Z>& z_samples,
                                             const std::vector<double>& t_samples,
                                             const std::vector<int>& j_list,
                                             const HarnessOptions& options = {}) {
    if (j_list.empty() || z_samples.empty() || t_samples.empty()) {
        throw ContractError("lemma1_harness: empty j, z or t sample list");
    }
    for (std::size_t i = 1; i < j_list.size(); ++i) {
        if (j_list[i] <= j_list[i - 1]) throw ContractError("lemma1_harness: j_list must be increasing");
    }
    for (double t : t_samples) path.partition().boundary_index(t);

    const int m = std::max(2, options.lattice_points);
    std::vector<SupDifferenceRow> rows;
    for (int j : j_list) {
        SupDifferenceRow row;
        row.j = j;
        for (const auto& z : z_samples) {
            auto gj = [&](double s) { return family.member(j, z, s); };
            check_holder(gj, family.holder, options.lattice_points,
                         "lemma1_harness: hypothesis (ii) for j=" + std::to_string(j));
            for (int i = 0; i < m; ++i) {
                const double s = static_cast<double>(i) / (m - 1);
                row.integrand_gap = std::max(row.integrand_gap, std::abs(gj(s) - family.limit(z, s)));
            }
        }
        rows.push_back(row);
    }
    // hypothesis (i): sup |g_j - g| nonincreasing along j_list and shrinking
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].integrand_gap > rows[i - 1].integrand_gap * (1.0 + 1e-12) + 1e-15) {
            throw ContractError("lemma1_harness: hypothesis (i) fails, sup|g_j - g| increases from j=" +
                                std::to_string(rows[i - 1].j) + " to j=" + std::to_string(rows[i].j));
        }
    }
    if (rows.size() > 1 && rows.front().integrand_gap > 0.0 &&
        !(rows.back().integrand_gap < rows.front().integrand_gap)) {
        throw ContractError("lemma1_harness: hypothesis (i) fails, sup|g_j - g| does not decrease");
    }
    // hypothesis (iii): pathwise bound on mu((0,t])
    if (!std::isfinite(sup_abs_primitive(path))) {
        throw ContractError("lemma1_harness: hypothesis (iii) fails, mu((0,t]) is not bounded");
    }

    for (auto& row : rows) {
        for (const auto& z : z_samples) {
            auto gj = [&](double s) { return family.member(row.j, z, s); };
            auto g = [&](double s) { return family.limit(z, s); };
            for (double t : t_samples) {
                row.sup_diff = std::max(row.sup_diff, std::abs(integrate(gj, path, t) - integrate(g, path, t)));
            }
        }
    }
    return rows;
}

inline void write_harness_csv(std::ostream& out, const std::vector<SupDifferenceRow>& rows) {
    out << "j,sup_diff\n";
    char buf[96];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.17g\n", r.j, r.sup_diff);
        out << buf;
    }
}

inline void write_measure_series_csv(std::ostream& out, const std::vector<double>& table) {
    out << "n,partial_measure_series\n";
    char buf[96];
    for (std::size_t n = 0; n < table.size(); ++n) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", n + 1, table[n]);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// L2-continuity check

struct ContinuityRow {
    int j = 0;
    double l2_norm = 0.0;
    double prob_estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct ContinuityResult {
    bool pass = false;
    double tau = 0.0;
    std::vector<ContinuityRow> rows;
};

struct ContinuityOptions {
    double tau = 0.1;
    // final tail probability must fall below this level
    double significance = 0.05;
    // Wilson interval z-score
    double z_score = 3.29;
    int l2_cells = 4096;
    unsigned threads = 1;
};

namespace detail {

inline std::pair<double, double> wilson_interval(std::size_t hits, std::size_t n, double z) {
    if (n == 0) return {0.0, 1.0};
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    const double nn = static_cast<double>(n);
    const double denom = 1.0 + z * z / nn;
    const double centre = (p + z * z / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

} // namespace detail

// Monte Carlo estimate of P(|int h_j dmu| > tau) for each j. PASS when the
// estimates are nonincreasing along the family (an increase is tolerated
// only within the Wilson intervals) and the last one is below `significance`.
inline ContinuityResult l2_continuity_check(
    const std::function<StochasticMeasurePath(Seed)>& path_generator,
    const std::function<double(int, double)>& h_family, const std::vector<int>& j_list,
    std::size_t replicas, Seed root_seed, const ContinuityOptions& options = {}) {
    ContinuityResult result;
    result.tau = options.tau;
    const auto mid_rule = gauss_legendre(2);
    for (int j : j_list) {
        ContinuityRow row;
        row.j = j;
        row.l2_norm = std::sqrt(integrate_gl_composite(
            mid_rule, [&](double s) { const double v = h_family(j, s); return v * v; }, 0.0, 1.0,
            options.l2_cells));
        result.rows.push_back(row);
    }
    for (std::size_t i = 1; i < result.rows.size(); ++i) {
        if (result.rows[i].l2_norm > result.rows[i - 1].l2_norm * (1.0 + 1e-12) + 1e-15) {
            throw ContractError("l2_continuity_check: ||h_j||_L2 must be nonincreasing along the family");
        }
    }

    std::vector<std::vector<double>> integrals(replicas, std::vector<double>(j_list.size()));
    parallel_for(replicas, options.threads, [&](std::size_t r) {
        const auto path = path_generator(derive_seed(root_seed, r));
        for (std::size_t i = 0; i < j_list.size(); ++i) {
            const int j = j_list[i];
            integrals[r][i] = integrate([&](double s) { return h_family(j, s); }, path, 1.0);
        }
    });

    for (std::size_t i = 0; i < j_list.size(); ++i) {
        std::size_t hits = 0;
        for (std::size_t r = 0; r < replicas; ++r) {
            if (std::abs(integrals[r][i]) > options.tau) ++hits;
        }
        auto& row = result.rows[i];
        row.prob_estimate = replicas ? static_cast<double>(hits) / static_cast<double>(replicas) : 0.0;
        std::tie(row.ci_low, row.ci_high) = detail::wilson_interval(hits, replicas, options.z_score);
    }

    bool monotone = true;
    for (std::size_t i = 1; i < result.rows.size(); ++i) {
        const auto& prev = result.rows[i - 1];
        const auto& cur = result.rows[i];
        if (cur.prob_estimate > prev.prob_estimate && cur.ci_low > prev.ci_high) monotone = false;
    }
    result.pass = monotone && !result.rows.empty() &&
                  result.rows.back().prob_estimate <= options.significance;
    return result;
}

inline void write_continuity_csv(std::ostream& out, const ContinuityResult& result) {
    out << "tau,j,prob_estimate,ci_low,ci_high\n";
    char buf[160];
    for (const auto& r : result.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g,%.17g\n", result.tau, r.j, r.prob_estimate,
                      r.ci_low, r.ci_high);
        out << buf;
    }
}

} // namespace smwave
