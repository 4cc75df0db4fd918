// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "smwave/experiments.hpp"
#include "smwave/fourier.hpp"
#include "smwave/sm_core.hpp"
#include "smwave/stoch_integral.hpp"
#include "smwave/wave_solver.hpp"

using namespace smwave;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    if (!pass) ++failures;
    std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Runs `body`; an exception turns into a FAIL line carrying its message.
void criterion(int id, const std::string& what, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, what, std::string("exception: ") + e.what());
    }
}

unsigned thread_count() { return std::max(1u, std::thread::hardware_concurrency()); }

SolverGrid grid(double delta, int n_t, double x_min, double x_max, int n_x) {
    SolverGrid g;
    g.delta = delta;
    g.n_t = n_t;
    g.x_min = x_min;
    g.x_max = x_max;
    g.n_x = n_x;
    return g;
}

WaveProblem sine_sigma() {
    WaveProblem p;
    p.sigma = [](double, double y) { return 0.5 * (1.0 + std::sin(y)); };
    p.lipschitz_sigma = 0.5;
    return p;
}

// ---------------------------------------------------------------------------

void deterministic_oracle() {
    const std::string what = "unit sigma on Lebesgue gives t^2/2, n_cells=512, n_x=257, single thread < 10 s";
    criterion(1, what, [&] {
        WaveProblem p;
        p.sigma = [](double, double) { return 1.0; };
        const auto g = grid(1.0 / 16.0, 480, -1.0, 1.0, 257);
        const auto start = std::chrono::steady_clock::now();
        SolveOptions opts;
        opts.threads = 1;
        opts.kernel.threads = 1;
        const auto field = solve(p, g, generate_lebesgue(Partition(512)), nullptr, ForcingMode::sm_path(), opts);
        const double elapsed = seconds_since(start);
        double err = 0.0;
        for (int i = 0; i <= g.n_t; ++i) {
            for (int k = 0; k < g.n_x; ++k) err = std::max(err, std::abs(field.at(i, k) - 0.5 * g.t(i) * g.t(i)));
        }
        report(1, err <= 1e-6 && elapsed < 10.0, what, fmt("max error %.3e, %.2f s", err, elapsed));
    });
}

void dalembert_recovery() {
    const std::string what = "u0=sin recovers sin(x)cos(t) within 1e-6, order 4, 512 cells";
    criterion(2, what, [&] {
        WaveProblem p;
        p.u0 = [](double x) { return std::sin(x); };
        auto g = grid(1.0 / 16.0, 480, 0.0, 2.0 * pi, 257);
        g.time_order = 4;
        const auto field = solve(p, g, generate_wiener(Partition(512), 1), nullptr, ForcingMode::sm_path());
        double err = 0.0;
        for (int i = 0; i <= g.n_t; ++i) {
            for (int k = 0; k < g.n_x; ++k) {
                err = std::max(err, std::abs(field.at(i, k) - std::sin(g.x(k)) * std::cos(g.t(i))));
            }
        }
        report(2, err <= 1e-6, what, fmt("max error %.3e", err));
    });
}

void mode_consistency() {
    const std::string what = "SM path, Fourier and Fejer solutions agree within 1e-6 on Lebesgue, j in {0,4,64}";
    criterion(3, what, [&] {
        const auto p = sine_sigma();
        const auto path = generate_lebesgue(Partition(512));
        const auto exp = expand(path, 64);
        const auto g = grid(1.0 / 16.0, 30, 0.0, 2.0 * pi, 65);
        const StochasticKernel kernel(p, g, path.partition());
        const auto ref = solve(p, g, path, nullptr, ForcingMode::sm_path(), {}, &kernel);
        double worst = 0.0;
        for (int j : {0, 4, 64}) {
            worst = std::max(worst, sup_error(solve(p, g, path, &exp, ForcingMode::fourier(j), {}, &kernel), ref));
            worst = std::max(worst, sup_error(solve(p, g, path, &exp, ForcingMode::fejer(j), {}, &kernel), ref));
        }
        report(3, worst <= 1e-6, what, fmt("max disagreement %.3e", worst));
    });
}

void parseval_symmetry() {
    const std::string what = "Parseval to 1e-10 and exact conjugate symmetry on 200 Wiener paths, n_cells=256";
    criterion(4, what, [&] {
        double worst = 0.0;
        bool symmetric = true;
        for (Seed s = 0; s < 200; ++s) {
            const auto path = generate_wiener(Partition(256), derive_seed(4, s));
            const auto exp = expand(path, 255);
            long double lhs = 0.0L, rhs = 0.0L;
            for (int k = 0; k < 256; ++k) lhs += std::norm(exp.coefficient(k));
            for (double v : path.increments()) rhs += static_cast<long double>(v) * v;
            rhs *= 256.0L;
            worst = std::max(worst, static_cast<double>(std::abs(lhs / rhs - 1.0L)));
            for (int k = 1; k <= 255; ++k) symmetric = symmetric && exp.coefficient(-k) == std::conj(exp.coefficient(k));
        }
        report(4, worst <= 1e-10 && symmetric, what,
               fmt("max relative error %.3e, symmetry %s", worst, symmetric ? "exact" : "broken"));
    });
}

void fejer_identity() {
    const std::string what = "Fejer averaging and kernel forms agree to 1e-12 on 100 random (path, j, t)";
    criterion(5, what, [&] {
        std::mt19937_64 engine(5);
        std::uniform_int_distribution<int> order(0, 64);
        std::uniform_real_distribution<double> time(0.0, 1.0);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const auto path = generate_wiener(Partition(256), derive_seed(5, static_cast<Seed>(i)));
            const int j = order(engine);
            const double t = time(engine);
            const auto exp = expand(path, j);
            worst = std::max(worst, fejer_relative_difference(exp, j, fejer_sum_kernel(exp, j, t),
                                                              fejer_sum_averaged(exp, j, t)));
        }
        report(5, worst <= 1e-12, what, fmt("max relative difference %.3e", worst));
    });
}

void dyadic_machinery() {
    const std::string what = "exact telescope; master bound holds on 100 Hoelder cases; Lebesgue measure series to 1e-12";
    criterion(6, what, [&] {
        struct Entry {
            std::function<double(double)> g;
            HolderData holder;
        };
        const std::vector<Entry> catalog{
            {[](double s) { return s; }, {1.0, 1.0}},
            {[](double s) { return std::sqrt(s); }, {1.0, 0.5}},
            {[](double s) { return std::sin(2.0 * pi * s); }, {2.0 * pi, 1.0}},
            {[](double s) { return std::pow(std::abs(s - 0.5), 0.75); }, {1.0, 0.75}},
            {[](double s) { return 1.0 + std::cos(3.0 * s); }, {3.0, 1.0}},
            {[](double s) { return std::pow(s, 0.6) - 0.4; }, {1.0, 0.6}},
        };
        std::mt19937_64 engine(6);
        std::uniform_int_distribution<std::size_t> pick(0, catalog.size() - 1);
        std::uniform_int_distribution<int> boundary(1, 256);
        DyadicSchemeConfig cfg;
        bool telescope = true, bounded = true;
        double tightest = 0.0;
        for (int i = 0; i < 100; ++i) {
            const auto path = i % 2 == 0 ? generate_wiener(Partition(256), derive_seed(6, static_cast<Seed>(i)))
                                         : generate_fbm(Partition(256), 0.75, derive_seed(6, static_cast<Seed>(i)));
            const auto& e = catalog[pick(engine)];
            const double t = boundary(engine) / 256.0;
            telescope = telescope && telescoped_integral(e.g, path, t, 8) == dyadic_integral(e.g, path, t, 8);
            const auto r = master_bound(e.g, path, t, cfg, e.holder);
            bounded = bounded && r.value <= r.bound;
            if (r.bound > 0.0) tightest = std::max(tightest, r.value / r.bound);
        }
        double series_err = 0.0;
        const auto leb = generate_lebesgue(Partition(1024));
        for (double eps : {0.05, 0.2, 0.5}) {
            for (double t : {1.0, 0.5, 0.3125, 0.7490234375}) {
                long double want = 0.0L;
                for (int n = 1; n <= 10; ++n) {
                    const long double h = std::ldexp(1.0L, -n);
                    const long double full = std::floor(t / h);
                    const long double rest = t - full * h;
                    want += std::pow(2.0L, -n * eps) * (full * h * h + rest * rest);
                }
                series_err = std::max(series_err,
                                      std::abs(measure_series(leb, eps, t, 10) - static_cast<double>(want)));
            }
        }
        report(6, telescope && bounded && series_err <= 1e-12, what,
               fmt("telescope %s, bound %s (max value/bound %.3f), series error %.3e", telescope ? "exact" : "inexact",
                   bounded ? "holds" : "violated", tightest, series_err));
    });
}

void wiener_convergence_study() {
    const std::string what = "Wiener driver, 100 replicas, j=4..64: median and p90 at j=64 below 25% of j=4, "
                             "<= 1 inversion, Fourier and Fejer";
    criterion(7, what, [&] {
        const auto p = sine_sigma();
        const auto g = grid(1.0 / 16.0, 30, 0.0, 2.0 * pi, 33);
        StudyOptions opts;
        opts.threads = thread_count();
        const std::vector<int> js{4, 8, 16, 32, 64};
        std::string detail;
        bool pass = true;
        const auto start = std::chrono::steady_clock::now();
        for (auto family : {ModeFamily::fourier, ModeFamily::fejer}) {
            const auto r = run_convergence_study(p, g, Partition(512), GeneratorSpec{WienerSpec{}}, family, js, 100,
                                                 7, opts);
            const auto v = assess_convergence(r, 0.25, 1);
            pass = pass && v.pass;
            detail += fmt("%s: median ratio %.3f, p90 ratio %.3f, inversions %d; ", to_string(family).c_str(),
                          v.median_ratio, v.p90_ratio, v.inversions);
        }
        const double elapsed = seconds_since(start);
        pass = pass && elapsed < 15.0 * 60.0;
        detail += fmt("%.0f s on %u threads", elapsed, opts.threads);
        report(7, pass, what, detail);
    });
}

void fourier_rate() {
    const std::string what = "Fourier sup-error slope over j=8..512 lies in [-1.35, -0.75]";
    criterion(8, what, [&] {
        RateExampleSpec spec;
        spec.measure.kernel = [](double t, double y) { return y * (1.0 - std::cos(pi * t)) / pi; };
        spec.measure.kernel_dt = [](double t, double y) { return y * std::sin(pi * t); };
        spec.measure.base = std::make_shared<const GeneratorSpec>(GeneratorSpec{WienerSpec{}});
        for (int j = 8; j <= 512; ++j) spec.j_list.push_back(j);
        const auto result = run_rate_example(spec);
        const double slope = result.fit ? result.fit->slope : 0.0;
        report(8, result.fit && slope >= -1.35 && slope <= -0.75, what,
               fmt("slope %.3f, residual %.3f", slope, result.fit ? result.fit->residual : 0.0));
    });
}

void shift_family_halving() {
    const std::string what = "g + 1/j families: sup differences halve (within 20%) as j doubles, Wiener and fBm(0.75)";
    criterion(9, what, [&] {
        IntegrandFamily<double> fam;
        fam.member = [](int j, const double& z, double s) { return std::sin(2.0 * pi * z * s) + 1.0 / j; };
        fam.limit = [](const double& z, double s) { return std::sin(2.0 * pi * z * s); };
        fam.holder = {4.0 * pi, 1.0};
        std::vector<double> ts;
        for (int i = 1; i <= 64; ++i) ts.push_back(i / 64.0);
        const std::vector<int> js{1, 2, 4, 8, 16, 32, 64};
        double lo = 1.0, hi = 0.0;
        for (int which = 0; which < 2; ++which) {
            for (Seed s = 0; s < 5; ++s) {
                const auto path = which == 0 ? generate_wiener(Partition(256), derive_seed(9, s))
                                             : generate_fbm(Partition(256), 0.75, derive_seed(9, s));
                const auto rows = lemma1_harness(fam, path, {0.5, 1.0, 2.0}, ts, js);
                for (std::size_t i = 1; i < rows.size(); ++i) {
                    const double ratio = rows[i].sup_diff / rows[i - 1].sup_diff;
                    lo = std::min(lo, ratio);
                    hi = std::max(hi, ratio);
                }
            }
        }
        report(9, lo >= 0.4 && hi <= 0.6, what, fmt("ratios in [%.6f, %.6f]", lo, hi));
    });
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SMWAVE_CLI_PATH) + " " + args + " > /dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void reproducibility() {
    const std::string what = "identical converge runs give bit-identical raw.csv";
    criterion(10, what, [&] {
        const auto dir = fs::temp_directory_path() / "smwave_acceptance";
        fs::remove_all(dir);
        fs::create_directories(dir / "a");
        fs::create_directories(dir / "b");
        std::ofstream(dir / "config.json") << R"({
  "n_cells": 128, "root_seed": 10,
  "generator": {"type": "fbm", "hurst": 0.75},
  "problem": {"sigma": {"preset": "sin_offset"}, "f": {"preset": "sin_v", "amplitude": 0.5}},
  "grid": {"delta": 0.0625, "n_t": 15, "x_min": 0.0, "x_max": 6.283185307179586, "n_x": 17},
  "family": "fejer", "j_list": [2, 4, 8, 16], "replicas": 12, "threads": 2
})";
        const std::string base = "converge --config " + (dir / "config.json").string() + " --out ";
        const int rc_a = run_cli(base + (dir / "a").string());
        const int rc_b = run_cli(base + (dir / "b").string());
        const auto a = slurp(dir / "a" / "raw.csv"), b = slurp(dir / "b" / "raw.csv");
        const bool pass = rc_a == 0 && rc_b == 0 && !a.empty() && a == b;
        report(10, pass, what, fmt("exit codes %d/%d, %zu bytes, %s", rc_a, rc_b, a.size(), a == b ? "identical" : "different"));
        fs::remove_all(dir);
    });
}

} // namespace

int main() {
    deterministic_oracle();
    dalembert_recovery();
    mode_consistency();
    parseval_symmetry();
    fejer_identity();
    dyadic_machinery();
    wiener_convergence_study();
    fourier_rate();
    shift_family_halving();
    reproducibility();
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
