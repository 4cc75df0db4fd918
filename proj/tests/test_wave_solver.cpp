#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "smwave/fourier.hpp"
#include "smwave/sm_core.hpp"
#include "smwave/wave_solver.hpp"

using namespace smwave;

namespace {

WaveProblem unit_sigma_problem() {
    WaveProblem p;
    p.sigma = [](double, double) { return 1.0; };
    return p;
}

WaveProblem sine_sigma_problem() {
    WaveProblem p;
    p.sigma = [](double, double y) { return 0.5 * (1.0 + std::sin(y)); };
    p.lipschitz_sigma = 0.5;
    return p;
}

// u'' = -u, u(0) = 0, u'(0) = 1, spatially constant: u = sin t
WaveProblem damped_problem() {
    WaveProblem p;
    p.v0 = [](double) { return 1.0; };
    p.f = [](double, double, double v) { return -v; };
    p.lipschitz_f = 1.0;
    return p;
}

SolverGrid grid_with(int n_t, int n_x, double x_min = 0.0, double x_max = 1.0) {
    SolverGrid g;
    g.n_t = n_t;
    g.n_x = n_x;
    g.x_min = x_min;
    g.x_max = x_max;
    return g;
}

} // namespace

// ---------------------------------------------------------------------------
// d'Alembert part

TEST(Dalembert, InitialConditionAtTimeZero) {
    WaveProblem p;
    p.u0 = [](double x) { return std::cos(3.0 * x) + x; };
    const auto g = grid_with(15, 17, -2.0, 3.0);
    for (double x : {0.0, 0.3, 1.0}) EXPECT_EQ(dalembert_term(p, g, 0.0, x), p.u0(x));
}

TEST(Dalembert, SineRecoversClassicalSolution) {
    WaveProblem p;
    p.u0 = [](double x) { return std::sin(x); };
    const auto g = grid_with(15, 17, -2.0, 3.0);
    for (double t : {0.1, 0.5, 0.9375}) {
        for (double x : {0.0, 0.4, 1.0}) EXPECT_NEAR(dalembert_term(p, g, t, x), std::sin(x) * std::cos(t), 1e-8);
    }
}

TEST(Dalembert, ConstantVelocityGivesTime) {
    WaveProblem p;
    p.v0 = [](double) { return 1.0; };
    const auto g = grid_with(15, 17, -2.0, 3.0);
    for (double t : {0.25, 0.5, 0.9}) EXPECT_NEAR(dalembert_term(p, g, t, 0.5), t, 1e-14);
}

TEST(Dalembert, PrintedSignVariant) {
    WaveProblem p;
    p.u0 = [](double x) { return x * x; };
    p.strict_paper_sign = true;
    const auto g = grid_with(15, 17, -2.0, 3.0);
    // (x+t)^2 - (x-t)^2 = 4xt
    EXPECT_NEAR(dalembert_term(p, g, 0.5, 0.5), 0.5 * 4.0 * 0.5 * 0.5, 1e-14);
    EXPECT_EQ(dalembert_term(p, g, 0.0, 0.5), 0.0);
}

TEST(Dalembert, CoverageErrorOutsideWindow) {
    WaveProblem p;
    const auto g = grid_with(15, 17);
    EXPECT_THROW(dalembert_term(p, g, 0.5, 0.2), CoverageError);
    const auto w = reported_window(grid_with(15, 33, -1.0, 2.0), 1.0);
    EXPECT_NEAR(w.margin, 0.9375, 1e-15);
    EXPECT_GT(w.last_column, w.first_column);
    const auto g2 = grid_with(15, 33, -1.0, 2.0);
    EXPECT_GE(g2.x(w.first_column) - w.margin, -1.0 - 1e-12);
    EXPECT_LE(g2.x(w.last_column) + w.margin, 2.0 + 1e-12);
}

// ---------------------------------------------------------------------------
// stochastic term

TEST(StochasticTerm, ZeroSigmaVanishesInEveryMode) {
    WaveProblem p;
    const auto path = generate_wiener(Partition(64), 1);
    const auto exp = expand(path, 8);
    const auto g = grid_with(15, 9);
    for (const auto& m : {ForcingMode::sm_path(), ForcingMode::fourier(8), ForcingMode::fejer(3)}) {
        EXPECT_EQ(stochastic_term(p, g, path, &exp, m, 0.5, 0.5), 0.0);
    }
}

TEST(StochasticTerm, UnitSigmaOnLebesgueIsHalfTSquared) {
    const auto p = unit_sigma_problem();
    const auto path = generate_lebesgue(Partition(64));
    const auto exp = expand(path, 20);
    const auto g = grid_with(15, 9);
    for (double t : {0.25, 0.5, 0.9375}) {
        for (const auto& m : {ForcingMode::sm_path(), ForcingMode::fourier(0), ForcingMode::fourier(20),
                              ForcingMode::fejer(7)}) {
            EXPECT_NEAR(stochastic_term(p, g, path, &exp, m, t, 0.3), 0.5 * t * t, 1e-12) << to_string(m);
        }
    }
}

TEST(StochasticTerm, ModeExpansionMismatch) {
    const auto p = unit_sigma_problem();
    const auto path = generate_wiener(Partition(64), 1);
    const auto g = grid_with(15, 9);
    EXPECT_THROW(stochastic_term(p, g, path, nullptr, ForcingMode::fourier(2), 0.5, 0.5), ConfigError);
    const auto exp = expand(path, 4);
    EXPECT_THROW(stochastic_term(p, g, path, &exp, ForcingMode::fejer(5), 0.5, 0.5), ConfigError);
    const auto other = expand(generate_wiener(Partition(32), 1), 4);
    EXPECT_THROW(stochastic_term(p, g, path, &other, ForcingMode::fourier(2), 0.5, 0.5), ConfigError);
}

TEST(StochasticKernel, TablesMatchDirectQuadrature) {
    const auto p = sine_sigma_problem();
    const auto path = generate_wiener(Partition(64), 3);
    const auto exp = expand(path, 12);
    const auto g = grid_with(15, 9, -1.0, 2.0);
    for (const auto& mode : {ForcingMode::sm_path(), ForcingMode::fourier(12), ForcingMode::fejer(12)}) {
        WaveProblem no_data = p;
        const auto field = solve(no_data, g, path, &exp, mode);
        for (int i : {0, 5, 15}) {
            for (int k : {0, 4, 8}) {
                const double direct = stochastic_term(p, g, path, &exp, mode, g.t(i), g.x(k));
                EXPECT_NEAR(field.at(i, k), direct, 1e-9) << to_string(mode) << " i=" << i << " k=" << k;
            }
        }
    }
}

TEST(StochasticKernel, MaterializedAndStreamingAreBitIdentical) {
    const auto p = sine_sigma_problem();
    const auto path = generate_fbm(Partition(128), 0.75, 8);
    const auto g = grid_with(30, 17, -1.0, 2.0);
    KernelOptions streaming, stored;
    stored.materialize_limit = std::size_t{1} << 26;
    const StochasticKernel a(p, g, path.partition(), streaming), b(p, g, path.partition(), stored);
    ASSERT_FALSE(a.materialized());
    ASSERT_TRUE(b.materialized());
    const auto rho = forcing_density(path, nullptr, ForcingMode::sm_path(), a.quadrature());
    EXPECT_EQ(a.apply(rho), b.apply(rho));
}

// ---------------------------------------------------------------------------
// solve

TEST(Solve, NoForcingConvergesInOneIterationToDalembert) {
    WaveProblem p;
    p.u0 = [](double x) { return std::sin(x); };
    p.v0 = [](double x) { return std::cos(2.0 * x); };
    const auto g = grid_with(15, 17, -1.0, 2.0);
    const auto field = solve(p, g, generate_wiener(Partition(64), 1), nullptr, ForcingMode::sm_path());
    EXPECT_EQ(field.iterations_used, 1);
    EXPECT_EQ(field.residual, 0.0);
    const auto rule = gauss_legendre(g.space_order);
    for (int i = 0; i <= g.n_t; ++i) {
        for (int k = 0; k < g.n_x; ++k) EXPECT_EQ(field.at(i, k), detail::dalembert_unchecked(p, rule, g.t(i), g.x(k)));
    }
}

TEST(Solve, InitialRowEqualsU0Exactly) {
    auto p = damped_problem();
    p.u0 = [](double x) { return 0.3 * x - x * x; };
    p.sigma = [](double, double) { return 1.0; };
    const auto g = grid_with(15, 17, -1.0, 2.0);
    const auto field = solve(p, g, generate_wiener(Partition(64), 2), nullptr, ForcingMode::sm_path());
    for (int k = 0; k < g.n_x; ++k) EXPECT_EQ(field.at(0, k), p.u0(g.x(k)));
}

TEST(Solve, UnitSigmaLebesgueIsHalfTSquared) {
    const auto p = unit_sigma_problem();
    const auto g = grid_with(60, 33, -1.0, 1.0);
    const auto field = solve(p, g, generate_lebesgue(Partition(128)), nullptr, ForcingMode::sm_path());
    EXPECT_EQ(field.iterations_used, 2);
    for (int i = 0; i <= g.n_t; ++i) {
        for (int k = 0; k < g.n_x; ++k) EXPECT_NEAR(field.at(i, k), 0.5 * g.t(i) * g.t(i), 1e-9);
    }
}

TEST(Solve, ModesAgreeOnLebesgue) {
    const auto p = sine_sigma_problem();
    const auto path = generate_lebesgue(Partition(128));
    const auto exp = expand(path, 32);
    const auto g = grid_with(30, 17, 0.0, 2.0);
    const auto ref = solve(p, g, path, nullptr, ForcingMode::sm_path());
    for (int j : {0, 4, 32}) {
        EXPECT_LE(sup_error(solve(p, g, path, &exp, ForcingMode::fourier(j)), ref), 1e-12);
        EXPECT_LE(sup_error(solve(p, g, path, &exp, ForcingMode::fejer(j)), ref), 1e-12);
    }
}

TEST(Solve, DampedOscillatorMatchesSine) {
    const auto p = damped_problem();
    const auto g = grid_with(60, 9);
    const auto field = solve(p, g, generate_zero(Partition(64)), nullptr, ForcingMode::sm_path());
    for (int i = 0; i <= g.n_t; ++i) {
        for (int k = 0; k < g.n_x; ++k) EXPECT_NEAR(field.at(i, k), std::sin(g.t(i)), 1e-4);
    }
}

TEST(Solve, SelfConvergenceAgainstFourTimesRefinedGrid) {
    const auto p = damped_problem();
    const auto path = generate_zero(Partition(256));
    const auto coarse = solve(p, grid_with(15, 9), path, nullptr, ForcingMode::sm_path());
    const auto fine = solve(p, grid_with(60, 33), path, nullptr, ForcingMode::sm_path());
    double diff = 0.0;
    for (int i = 0; i <= 15; ++i) {
        for (int k = 0; k < 9; ++k) diff = std::max(diff, std::abs(coarse.at(i, k) - fine.at(4 * i, 4 * k)));
    }
    EXPECT_LE(diff, 1e-4);
}

TEST(Solve, RefinementDifferencesDecrease) {
    auto p = damped_problem();
    p.u0 = [](double x) { return std::sin(2.0 * x); };
    p.sigma = [](double, double y) { return 0.5 * (1.0 + std::sin(y)); };
    p.lipschitz_sigma = 0.5;
    const auto path = generate_wiener(Partition(256), 4);
    std::vector<SolutionField> fields;
    for (int m = 0; m < 4; ++m) fields.push_back(solve(p, grid_with(15 << m, (8 << m) + 1), path, nullptr, ForcingMode::sm_path()));
    std::vector<double> diffs;
    for (int m = 0; m + 1 < 4; ++m) {
        double d = 0.0;
        for (int i = 0; i <= 15; ++i) {
            for (int k = 0; k < 9; ++k) {
                d = std::max(d, std::abs(fields[m].at(i << m, k << m) - fields[m + 1].at(i << (m + 1), k << (m + 1))));
            }
        }
        diffs.push_back(d);
    }
    EXPECT_LT(diffs[1], diffs[0]);
    EXPECT_LT(diffs[2], diffs[1]);
}

TEST(Solve, PicardResidualsDecreaseAfterSecondIteration) {
    auto p = damped_problem();
    p.f = [](double, double y, double v) { return std::sin(v) + 0.2 * y; };
    p.lipschitz_f = 1.0;
    p.sigma = [](double, double y) { return 0.5 * (1.0 + std::sin(y)); };
    p.lipschitz_sigma = 0.5;
    const auto field = solve(p, grid_with(30, 17, -1.0, 2.0), generate_wiener(Partition(64), 6), nullptr,
                             ForcingMode::sm_path());
    const auto& h = field.residual_history;
    ASSERT_GE(h.size(), 3u);
    for (std::size_t m = 2; m < h.size(); ++m) EXPECT_LE(h[m], h[m - 1] + 1e-12);
    EXPECT_LE(field.residual, 1e-10);
}

TEST(Solve, LinearInPathWithoutNonlinearForcing) {
    const auto p = sine_sigma_problem();
    const auto path = generate_wiener(Partition(64), 10);
    const auto g = grid_with(15, 9, -1.0, 2.0);
    const auto base = solve(p, g, path, nullptr, ForcingMode::sm_path());
    const auto scaled = solve(p, g, path.scaled(-2.5), nullptr, ForcingMode::sm_path());
    double scale = 0.0;
    for (double v : base.values()) scale = std::max(scale, std::abs(v));
    for (std::size_t n = 0; n < base.values().size(); ++n) {
        EXPECT_NEAR(scaled.values()[n], -2.5 * base.values()[n], 1e-12 * 2.5 * scale);
    }
}

TEST(Solve, NonconvergenceCarriesResidual) {
    const auto p = damped_problem();
    SolveOptions opts;
    opts.max_iter = 2;
    try {
        solve(p, grid_with(15, 9), generate_zero(Partition(64)), nullptr, ForcingMode::sm_path(), opts);
        FAIL() << "expected nonconvergence";
    } catch (const NonconvergenceError& e) {
        EXPECT_GT(e.residual(), 1e-10);
    }
}

TEST(Solve, ValidationFailures) {
    const auto path = generate_wiener(Partition(64), 1);
    auto p = sine_sigma_problem();
    p.lipschitz_sigma = 0.1;
    EXPECT_THROW(solve(p, grid_with(15, 9), path, nullptr, ForcingMode::sm_path()), ContractError);
    auto q = damped_problem();
    q.lipschitz_f = 0.5;
    EXPECT_THROW(solve(q, grid_with(15, 9), path, nullptr, ForcingMode::sm_path()), ContractError);
    auto grid = grid_with(15, 9);
    grid.delta = 1.0 / 128.0;
    EXPECT_THROW(solve(WaveProblem{}, grid, path, nullptr, ForcingMode::sm_path()), ConfigError);
    EXPECT_THROW(solve(WaveProblem{}, grid_with(7, 9), path, nullptr, ForcingMode::sm_path()), AlignmentError);
    SolveOptions bad;
    bad.tolerance = 0.0;
    EXPECT_THROW(solve(WaveProblem{}, grid_with(15, 9), path, nullptr, ForcingMode::sm_path(), bad), ConfigError);
}

TEST(SupError, Examples) {
    const auto g = grid_with(15, 9);
    std::vector<double> v(g.node_count());
    for (std::size_t n = 0; n < v.size(); ++n) v[n] = std::sin(static_cast<double>(n));
    const SolutionField a(g, v);
    EXPECT_EQ(sup_error(a, a), 0.0);
    auto w = v;
    for (auto& x : w) x += 0.25;
    EXPECT_NEAR(sup_error(a, SolutionField(g, w)), 0.25, 1e-15);
    const SolutionField other(grid_with(15, 17), std::vector<double>(grid_with(15, 17).node_count()));
    EXPECT_THROW(sup_error(a, other), ShapeError);
}

TEST(FieldCsv, HasMetadataAndAllNodes) {
    const auto p = unit_sigma_problem();
    const auto g = grid_with(15, 5);
    const auto field = solve(p, g, generate_wiener(Partition(16), 2), nullptr, ForcingMode::sm_path());
    std::stringstream buf;
    write_field_csv(buf, field);
    std::string line;
    int comments = 0, rows = 0;
    bool header = false;
    while (std::getline(buf, line)) {
        if (line.rfind("#", 0) == 0) ++comments;
        else if (line == "t,x,u") header = true;
        else ++rows;
    }
    EXPECT_GE(comments, 3);
    EXPECT_TRUE(header);
    EXPECT_EQ(rows, 16 * 5);
}
