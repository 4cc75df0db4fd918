#pragma once

// RunConfig: the JSON document driving every subcommand. Parsing is strict
// (unknown keys are rejected) and all numeric constraints are checked before
// any computation starts.

#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "../errors.hpp"
#include "../experiments.hpp"
#include "../sm_core.hpp"
#include "../wave_solver.hpp"
#include "catalog.hpp"

namespace smwave::cli {

using Json = nlohmann::json;

struct GeneratorConfig {
    // lebesgue | zero | wiener | fbm | subfbm | series | smoothed
    std::string type = "wiener";
    double hurst = 0.75;
    // series
    std::string law = "normal";
    double scale = 1.0;
    double decay = 1.0;
    int truncation = 1;
    std::vector<std::string> measures;
    // smoothed
    FunctionPreset kernel{"t_times_y", {}};
    double y_lo = 0.0;
    double y_hi = 1.0;
    std::int64_t y_cells = 256;
    std::shared_ptr<GeneratorConfig> base;

    bool operator==(const GeneratorConfig& o) const {
        const bool bases_equal = (!base && !o.base) || (base && o.base && *base == *o.base);
        return type == o.type && hurst == o.hurst && law == o.law && scale == o.scale && decay == o.decay &&
               truncation == o.truncation && measures == o.measures && kernel == o.kernel && y_lo == o.y_lo &&
               y_hi == o.y_hi && y_cells == o.y_cells && bases_equal;
    }
};

struct RateConfig {
    std::vector<int> j_list;
    int y_points = 5;
    int t_points = 2049;
    int quadrature_cells = 0;
    // also run the Monte Carlo study driven by the smoothed measure
    bool stochastic = false;

    bool operator==(const RateConfig&) const = default;
};

struct RunConfig {
    std::int64_t n_cells = 512;
    std::uint64_t seed = 1;
    GeneratorConfig generator;
    int max_order = 16;

    double a = 1.0;
    FunctionPreset u0{"zero", {}};
    FunctionPreset v0{"zero", {}};
    FunctionPreset f{"zero", {}};
    FunctionPreset sigma{"constant", {{"value", 1.0}}};

    SolverGrid grid;
    // sm_path | fourier | fejer
    std::string mode = "sm_path";
    int mode_j = 0;
    // fourier | fejer
    std::string family = "fourier";
    std::vector<int> j_list{4, 8, 16, 32, 64};
    std::size_t replicas = 30;
    std::uint64_t root_seed = 1;
    double tolerance = 1e-10;
    int max_iter = 100;
    unsigned threads = 1;
    bool strict_paper_sign = false;
    RateConfig rate;

    bool operator==(const RunConfig&) const = default;
};

// ---------------------------------------------------------------------------
// JSON <-> RunConfig

namespace detail {

inline void reject_unknown(const Json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

inline FunctionPreset read_preset(const Json& j, const std::string& where) {
    if (j.is_string()) return {j.get<std::string>(), {}};
    if (!j.is_object() || !j.contains("preset")) throw ConfigError(where + ": expected {\"preset\": name, ...}");
    FunctionPreset p;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "preset") {
            if (!it->is_string()) throw ConfigError(where + ".preset must be a string");
            p.name = it->get<std::string>();
        } else {
            if (!it->is_number()) throw ConfigError(where + "." + it.key() + " must be a number");
            p.params[it.key()] = it->get<double>();
        }
    }
    return p;
}

inline Json write_preset(const FunctionPreset& p) {
    Json j = Json::object();
    j["preset"] = p.name;
    for (const auto& [k, v] : p.params) j[k] = v;
    return j;
}

inline GeneratorConfig read_generator(const Json& j, const std::string& where) {
    reject_unknown(j, where, {"type", "hurst", "law", "scale", "decay", "truncation", "measures", "kernel", "y_lo",
                              "y_hi", "y_cells", "base"});
    GeneratorConfig g;
    read(j, "type", g.type, where);
    read(j, "hurst", g.hurst, where);
    read(j, "law", g.law, where);
    read(j, "scale", g.scale, where);
    read(j, "decay", g.decay, where);
    read(j, "truncation", g.truncation, where);
    read(j, "measures", g.measures, where);
    if (j.contains("kernel")) g.kernel = read_preset(j.at("kernel"), where + ".kernel");
    read(j, "y_lo", g.y_lo, where);
    read(j, "y_hi", g.y_hi, where);
    read(j, "y_cells", g.y_cells, where);
    if (j.contains("base")) g.base = std::make_shared<GeneratorConfig>(read_generator(j.at("base"), where + ".base"));
    return g;
}

inline Json write_generator(const GeneratorConfig& g) {
    Json j;
    j["type"] = g.type;
    if (g.type == "fbm" || g.type == "subfbm") j["hurst"] = g.hurst;
    if (g.type == "series") {
        j["law"] = g.law;
        j["scale"] = g.scale;
        j["decay"] = g.decay;
        j["truncation"] = g.truncation;
        j["measures"] = g.measures;
    }
    if (g.type == "smoothed") {
        j["kernel"] = write_preset(g.kernel);
        j["y_lo"] = g.y_lo;
        j["y_hi"] = g.y_hi;
        j["y_cells"] = g.y_cells;
        if (g.base) j["base"] = write_generator(*g.base);
    }
    return j;
}

// Fields that write_generator omits are reset to defaults so that a parsed
// echo compares equal to the normalized original.
inline GeneratorConfig normalized(GeneratorConfig g) {
    const GeneratorConfig defaults;
    if (g.type != "fbm" && g.type != "subfbm") g.hurst = defaults.hurst;
    if (g.type != "series") {
        g.law = defaults.law;
        g.scale = defaults.scale;
        g.decay = defaults.decay;
        g.truncation = defaults.truncation;
        g.measures = defaults.measures;
    }
    if (g.type != "smoothed") {
        g.kernel = defaults.kernel;
        g.y_lo = defaults.y_lo;
        g.y_hi = defaults.y_hi;
        g.y_cells = defaults.y_cells;
        g.base.reset();
    } else if (g.base) {
        g.base = std::make_shared<GeneratorConfig>(normalized(*g.base));
    }
    return g;
}

} // namespace detail

inline RunConfig parse_config(const Json& j) {
    using detail::read;
    const std::string top = "config";
    detail::reject_unknown(j, top, {"n_cells", "seed", "generator", "max_order", "problem", "grid", "mode", "family",
                                    "j_list", "replicas", "root_seed", "tolerance", "max_iter", "threads",
                                    "strict_paper_sign", "rate"});
    RunConfig c;
    read(j, "n_cells", c.n_cells, top);
    read(j, "seed", c.seed, top);
    if (j.contains("generator")) c.generator = detail::read_generator(j.at("generator"), "generator");
    read(j, "max_order", c.max_order, top);
    if (j.contains("problem")) {
        const auto& p = j.at("problem");
        detail::reject_unknown(p, "problem", {"a", "u0", "v0", "f", "sigma"});
        read(p, "a", c.a, "problem");
        if (p.contains("u0")) c.u0 = detail::read_preset(p.at("u0"), "problem.u0");
        if (p.contains("v0")) c.v0 = detail::read_preset(p.at("v0"), "problem.v0");
        if (p.contains("f")) c.f = detail::read_preset(p.at("f"), "problem.f");
        if (p.contains("sigma")) c.sigma = detail::read_preset(p.at("sigma"), "problem.sigma");
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        detail::reject_unknown(g, "grid", {"delta", "n_t", "x_min", "x_max", "n_x", "time_order", "space_order"});
        read(g, "delta", c.grid.delta, "grid");
        read(g, "n_t", c.grid.n_t, "grid");
        read(g, "x_min", c.grid.x_min, "grid");
        read(g, "x_max", c.grid.x_max, "grid");
        read(g, "n_x", c.grid.n_x, "grid");
        read(g, "time_order", c.grid.time_order, "grid");
        read(g, "space_order", c.grid.space_order, "grid");
    }
    if (j.contains("mode")) {
        const auto& m = j.at("mode");
        detail::reject_unknown(m, "mode", {"kind", "j"});
        read(m, "kind", c.mode, "mode");
        read(m, "j", c.mode_j, "mode");
    }
    read(j, "family", c.family, top);
    read(j, "j_list", c.j_list, top);
    read(j, "replicas", c.replicas, top);
    read(j, "root_seed", c.root_seed, top);
    read(j, "tolerance", c.tolerance, top);
    read(j, "max_iter", c.max_iter, top);
    read(j, "threads", c.threads, top);
    read(j, "strict_paper_sign", c.strict_paper_sign, top);
    if (j.contains("rate")) {
        const auto& r = j.at("rate");
        detail::reject_unknown(r, "rate", {"j_list", "y_points", "t_points", "quadrature_cells", "stochastic"});
        read(r, "j_list", c.rate.j_list, "rate");
        read(r, "y_points", c.rate.y_points, "rate");
        read(r, "t_points", c.rate.t_points, "rate");
        read(r, "quadrature_cells", c.rate.quadrature_cells, "rate");
        read(r, "stochastic", c.rate.stochastic, "rate");
    }
    c.generator = detail::normalized(c.generator);
    return c;
}

inline RunConfig parse_config_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline RunConfig load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

inline Json to_json(const RunConfig& c) {
    Json j;
    j["n_cells"] = c.n_cells;
    j["seed"] = c.seed;
    j["generator"] = detail::write_generator(c.generator);
    j["max_order"] = c.max_order;
    j["problem"] = {{"a", c.a},
                    {"u0", detail::write_preset(c.u0)},
                    {"v0", detail::write_preset(c.v0)},
                    {"f", detail::write_preset(c.f)},
                    {"sigma", detail::write_preset(c.sigma)}};
    j["grid"] = {{"delta", c.grid.delta},     {"n_t", c.grid.n_t}, {"x_min", c.grid.x_min},
                 {"x_max", c.grid.x_max},     {"n_x", c.grid.n_x}, {"time_order", c.grid.time_order},
                 {"space_order", c.grid.space_order}};
    j["mode"] = {{"kind", c.mode}, {"j", c.mode_j}};
    j["family"] = c.family;
    j["j_list"] = c.j_list;
    j["replicas"] = c.replicas;
    j["root_seed"] = c.root_seed;
    j["tolerance"] = c.tolerance;
    j["max_iter"] = c.max_iter;
    j["threads"] = c.threads;
    j["strict_paper_sign"] = c.strict_paper_sign;
    j["rate"] = {{"j_list", c.rate.j_list},
                 {"y_points", c.rate.y_points},
                 {"t_points", c.rate.t_points},
                 {"quadrature_cells", c.rate.quadrature_cells},
                 {"stochastic", c.rate.stochastic}};
    return j;
}

// meta.txt body: a comment line and the normalized config as JSON. Lines
// starting with '#' are skipped when the echo is parsed back.
inline std::string meta_echo(const RunConfig& c, const std::string& command) {
    return "# smwave " + command + " configuration\n" + to_json(c).dump(2) + "\n";
}

inline RunConfig parse_meta_echo(const std::string& text) {
    std::istringstream in(text);
    std::string line, body;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        body += line + "\n";
    }
    return parse_config_text(body);
}

// ---------------------------------------------------------------------------
// Building library objects (all validation happens here)

inline GeneratorSpec build_generator(const GeneratorConfig& g) {
    if (g.type == "lebesgue") return {LebesgueSpec{}};
    if (g.type == "zero") return {ZeroSpec{}};
    if (g.type == "wiener") return {WienerSpec{}};
    if (g.type == "fbm") {
        if (!(g.hurst >= 0.5 && g.hurst <= 1.0)) {
            throw ConfigError("generator.hurst=" + std::to_string(g.hurst) +
                              " is out of range: fractional Brownian motion generates a stochastic measure only "
                              "for Hurst index H in (1/2, 1] (H = 1/2 is Brownian motion)");
        }
        return {FbmSpec{g.hurst}};
    }
    if (g.type == "subfbm") {
        if (!(g.hurst > 0.5 && g.hurst < 1.0)) {
            throw ConfigError("generator.hurst=" + std::to_string(g.hurst) +
                              " is out of range: sub-fractional Brownian motion requires 1/2 < H < 1");
        }
        return {SubFbmSpec{g.hurst}};
    }
    if (g.type == "series") {
        SeriesSmSpec s;
        if (g.law == "constant") s.coefficient_law.kind = CoefficientLaw::Kind::constant;
        else if (g.law == "normal") s.coefficient_law.kind = CoefficientLaw::Kind::normal;
        else if (g.law == "rademacher") s.coefficient_law.kind = CoefficientLaw::Kind::rademacher;
        else if (g.law == "cauchy") s.coefficient_law.kind = CoefficientLaw::Kind::cauchy;
        else throw ConfigError("generator.law: unknown law '" + g.law + "' (constant, normal, rademacher, cauchy)");
        s.coefficient_law.scale = g.scale;
        s.coefficient_law.decay = g.decay;
        s.truncation = g.truncation;
        if (g.truncation < 1) throw ConfigError("generator.truncation must be >= 1");
        for (int n = 1; n <= g.truncation; ++n) {
            const auto& name = g.measures.empty() ? std::string("lebesgue")
                                                  : g.measures[static_cast<std::size_t>(n - 1) % g.measures.size()];
            s.signed_measures.push_back(make_signed_measure(name, n));
        }
        validate(s);
        return {s};
    }
    if (g.type == "smoothed") {
        SmoothedSmSpec s;
        const auto k = make_kernel(g.kernel, g.y_lo, g.y_hi);
        s.kernel = k.h;
        s.kernel_dt = k.dh_dt;
        s.lipschitz_L = k.lipschitz;
        s.hoelder_gamma = k.gamma;
        s.y_lo = g.y_lo;
        s.y_hi = g.y_hi;
        s.y_cells = g.y_cells;
        s.base = std::make_shared<const GeneratorSpec>(build_generator(g.base ? *g.base : GeneratorConfig{}));
        validate(s);
        return {s};
    }
    throw ConfigError("generator.type: unknown generator '" + g.type +
                      "' (lebesgue, zero, wiener, fbm, subfbm, series, smoothed)");
}

inline WaveProblem build_problem(const RunConfig& c) {
    if (!(c.a > 0.0)) throw ConfigError("problem.a must be > 0");
    WaveProblem p;
    p.a = c.a;
    p.u0 = make_scalar(c.u0, "problem.u0");
    p.v0 = make_scalar(c.v0, "problem.v0");
    const auto f = make_forcing(c.f);
    p.f = f.fn;
    p.lipschitz_f = f.lipschitz;
    const auto s = make_sigma(c.sigma);
    p.sigma = s.fn;
    p.lipschitz_sigma = s.lipschitz;
    p.beta_sigma = s.beta;
    p.strict_paper_sign = c.strict_paper_sign;
    return p;
}

inline ForcingMode build_mode(const RunConfig& c) {
    if (c.mode == "sm_path") return ForcingMode::sm_path();
    if (c.mode_j < 0) throw ConfigError("mode.j must be >= 0");
    if (c.mode == "fourier" || c.mode == "fejer") {
        if (c.mode_j > c.max_order) {
            throw ConfigError("mode.j=" + std::to_string(c.mode_j) + " exceeds max_order=" + std::to_string(c.max_order));
        }
        return c.mode == "fourier" ? ForcingMode::fourier(c.mode_j) : ForcingMode::fejer(c.mode_j);
    }
    throw ConfigError("mode.kind: unknown mode '" + c.mode + "' (sm_path, fourier, fejer)");
}

inline ModeFamily build_family(const RunConfig& c) {
    if (c.family == "fourier") return ModeFamily::fourier;
    if (c.family == "fejer") return ModeFamily::fejer;
    throw ConfigError("family: unknown mode family '" + c.family + "' (fourier, fejer)");
}

inline Partition build_partition(const RunConfig& c) {
    try {
        return Partition(c.n_cells);
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("n_cells: ") + e.what());
    }
}

inline void validate_common(const RunConfig& c) {
    if (c.max_order < 0) throw ConfigError("max_order must be >= 0");
    if (c.threads < 1) throw ConfigError("threads must be >= 1");
    if (!(c.tolerance > 0.0)) throw ConfigError("tolerance must be > 0");
    if (c.max_iter < 1) throw ConfigError("max_iter must be >= 1");
}

inline void validate_study(const RunConfig& c) {
    if (c.j_list.size() < 2) throw ConfigError("j_list needs at least two entries");
    for (std::size_t i = 1; i < c.j_list.size(); ++i) {
        if (c.j_list[i] <= c.j_list[i - 1]) throw ConfigError("j_list must be strictly increasing");
    }
    if (c.j_list.front() < 0) throw ConfigError("j_list entries must be >= 0");
    if (c.replicas < 1) throw ConfigError("replicas must be >= 1");
}

} // namespace smwave::cli
