#pragma once

// Named, parameterized problem functions. Each preset declares the constants
// (Lipschitz / Hoelder data) the solver validates against.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <string>

#include "../errors.hpp"
#include "../sm_core.hpp"

namespace smwave::cli {

struct FunctionPreset {
    std::string name = "zero";
    std::map<std::string, double> params;

    bool operator==(const FunctionPreset&) const = default;
};

namespace detail {

inline double param(const FunctionPreset& p, const std::string& key, double fallback) {
    auto it = p.params.find(key);
    return it == p.params.end() ? fallback : it->second;
}

inline void allow_only(const FunctionPreset& p, const std::string& role, std::set<std::string> keys) {
    for (const auto& [k, v] : p.params) {
        if (!keys.count(k)) {
            throw ConfigError(role + ": preset '" + p.name + "' has no parameter '" + k + "'");
        }
        if (!std::isfinite(v)) throw ConfigError(role + ": parameter '" + k + "' must be finite");
    }
}

} // namespace detail

// u0 / v0 presets: zero, constant{value}, sin{amplitude,frequency,phase},
// cos{amplitude,frequency,phase}, polynomial{c0,c1,c2,c3}
inline std::function<double(double)> make_scalar(const FunctionPreset& p, const std::string& role) {
    using detail::param;
    if (p.name == "zero") {
        detail::allow_only(p, role, {});
        return [](double) { return 0.0; };
    }
    if (p.name == "constant") {
        detail::allow_only(p, role, {"value"});
        const double c = param(p, "value", 1.0);
        return [c](double) { return c; };
    }
    if (p.name == "sin" || p.name == "cos") {
        detail::allow_only(p, role, {"amplitude", "frequency", "phase"});
        const double amp = param(p, "amplitude", 1.0);
        const double freq = param(p, "frequency", 1.0);
        const double phase = param(p, "phase", 0.0);
        if (p.name == "sin") return [=](double x) { return amp * std::sin(freq * x + phase); };
        return [=](double x) { return amp * std::cos(freq * x + phase); };
    }
    if (p.name == "polynomial") {
        detail::allow_only(p, role, {"c0", "c1", "c2", "c3"});
        const double c0 = param(p, "c0", 0.0), c1 = param(p, "c1", 0.0), c2 = param(p, "c2", 0.0),
                     c3 = param(p, "c3", 0.0);
        return [=](double x) { return c0 + x * (c1 + x * (c2 + x * c3)); };
    }
    throw ConfigError(role + ": unknown preset '" + p.name + "' (zero, constant, sin, cos, polynomial)");
}

struct SigmaPreset {
    std::function<double(double, double)> fn;
    double lipschitz = 0.0;
    double beta = 1.0;
};

// sigma presets: zero, constant{value}, sin_offset{offset,amplitude,frequency}
// = offset + amplitude sin(frequency y), time_linear{c0,c1} = c0 + c1 s
inline SigmaPreset make_sigma(const FunctionPreset& p) {
    using detail::param;
    const std::string role = "problem.sigma";
    if (p.name == "zero") {
        detail::allow_only(p, role, {});
        return {};
    }
    if (p.name == "constant") {
        detail::allow_only(p, role, {"value"});
        const double c = param(p, "value", 1.0);
        return {[c](double, double) { return c; }, 0.0, 1.0};
    }
    if (p.name == "sin_offset") {
        detail::allow_only(p, role, {"offset", "amplitude", "frequency"});
        const double off = param(p, "offset", 0.5), amp = param(p, "amplitude", 0.5), freq = param(p, "frequency", 1.0);
        return {[=](double, double y) { return off + amp * std::sin(freq * y); }, std::abs(amp * freq), 1.0};
    }
    if (p.name == "time_linear") {
        detail::allow_only(p, role, {"c0", "c1"});
        const double c0 = param(p, "c0", 1.0), c1 = param(p, "c1", 0.0);
        return {[=](double s, double) { return c0 + c1 * s; }, std::abs(c1), 1.0};
    }
    throw ConfigError(role + ": unknown preset '" + p.name + "' (zero, constant, sin_offset, time_linear)");
}

struct ForcingPreset {
    std::function<double(double, double, double)> fn;
    double lipschitz = 0.0;
};

// f presets: zero, linear{c,cy,cv} = c + cy y + cv v, sin_v{amplitude} = A sin(v)
inline ForcingPreset make_forcing(const FunctionPreset& p) {
    using detail::param;
    const std::string role = "problem.f";
    if (p.name == "zero") {
        detail::allow_only(p, role, {});
        return {};
    }
    if (p.name == "linear") {
        detail::allow_only(p, role, {"c", "cy", "cv"});
        const double c = param(p, "c", 0.0), cy = param(p, "cy", 0.0), cv = param(p, "cv", -1.0);
        return {[=](double, double y, double v) { return c + cy * y + cv * v; }, std::max(std::abs(cy), std::abs(cv))};
    }
    if (p.name == "sin_v") {
        detail::allow_only(p, role, {"amplitude"});
        const double amp = param(p, "amplitude", 1.0);
        return {[=](double, double, double v) { return amp * std::sin(v); }, std::abs(amp)};
    }
    throw ConfigError(role + ": unknown preset '" + p.name + "' (zero, linear, sin_v)");
}

struct KernelPreset {
    std::function<double(double, double)> h;
    std::function<double(double, double)> dh_dt;
    double lipschitz = 1.0;
    double gamma = 1.0;
};

// Smoothing kernels h(t,y) with h(0,y) = 0:
//   zero, identity_t (h = t), t_times_y (h = t y),
//   cosine_mode (h = y (1 - cos 2 pi t) / 2 pi, dh/dt = y sin 2 pi t),
//   abs_sine (h = y (1 - cos pi t) / pi, dh/dt = y sin pi t whose periodic
//   extension |sin pi t| has kinks at the integers).
inline KernelPreset make_kernel(const FunctionPreset& p, double y_lo, double y_hi) {
    const std::string role = "generator.kernel";
    detail::allow_only(p, role, {"L"});
    const double y_abs = std::max(std::abs(y_lo), std::abs(y_hi));
    const double default_l = std::max(1.0, y_abs);
    const double lip = detail::param(p, "L", default_l);
    constexpr double pi = std::numbers::pi;
    if (p.name == "zero") return {[](double, double) { return 0.0; }, [](double, double) { return 0.0; }, lip, 1.0};
    if (p.name == "identity_t") return {[](double t, double) { return t; }, [](double, double) { return 1.0; }, lip, 1.0};
    if (p.name == "t_times_y") return {[](double t, double y) { return t * y; }, [](double, double y) { return y; }, lip, 1.0};
    if (p.name == "cosine_mode") {
        return {[](double t, double y) { return y * (1.0 - std::cos(2.0 * pi * t)) / (2.0 * pi); },
                [](double t, double y) { return y * std::sin(2.0 * pi * t); }, lip, 1.0};
    }
    if (p.name == "abs_sine") {
        return {[](double t, double y) { return y * (1.0 - std::cos(pi * t)) / pi; },
                [](double t, double y) { return y * std::sin(pi * t); }, lip, 1.0};
    }
    throw ConfigError(role + ": unknown preset '" + p.name +
                      "' (zero, identity_t, t_times_y, cosine_mode, abs_sine)");
}

// Signed measures for series stochastic measures; term index n >= 1.
//   lebesgue: density 1; sine / cosine: (pi/2) sin(2 pi n t), (pi/2) cos(2 pi n t)
//   (total variation exactly 1).
inline SignedDensity make_signed_measure(const std::string& name, int n) {
    constexpr double pi = std::numbers::pi;
    if (name == "lebesgue") return {name, [](double) { return 1.0; }};
    if (name == "sine") return {name, [n](double t) { return 0.5 * pi * std::sin(2.0 * pi * n * t); }};
    if (name == "cosine") return {name, [n](double t) { return 0.5 * pi * std::cos(2.0 * pi * n * t); }};
    throw ConfigError("generator.measures: unknown signed measure '" + name + "' (lebesgue, sine, cosine)");
}

} // namespace smwave::cli
