#pragma once

// Subcommands generate | expand | solve | converge | rate and the exit-code
// mapping. run() is what the smwave_cli binary calls; tests call it directly.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../errors.hpp"
#include "../experiments.hpp"
#include "../fourier.hpp"
#include "../sm_core.hpp"
#include "../wave_solver.hpp"
#include "config.hpp"

namespace smwave::cli {

enum ExitCode : int { ok = 0, other_failure = 1, config_failure = 2, numeric_failure = 3, io_failure = 4 };

struct Invocation {
    std::string command;
    RunConfig config;
    std::filesystem::path out_dir = ".";
};

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw IoError("cannot open " + (dir / name).string() + " for writing");
    return out;
}

inline void write_meta(const Invocation& inv) {
    auto out = open_output(inv.out_dir, "meta.txt");
    out << meta_echo(inv.config, inv.command);
}

inline SolveOptions solve_options(const RunConfig& c) {
    SolveOptions o;
    o.tolerance = c.tolerance;
    o.max_iter = c.max_iter;
    o.threads = c.threads;
    o.kernel.threads = c.threads;
    return o;
}

inline std::vector<int> rate_j_list(const RunConfig& c) {
    if (!c.rate.j_list.empty()) return c.rate.j_list;
    std::vector<int> js;
    for (int j = 8; j <= 512; ++j) js.push_back(j);
    return js;
}

} // namespace detail

inline void cmd_generate(const Invocation& inv) {
    const auto& c = inv.config;
    const auto spec = build_generator(c.generator);
    const auto part = build_partition(c);
    const auto path = generate(spec, part, c.seed);
    auto out = detail::open_output(inv.out_dir, "path.csv");
    write_path_csv(out, path);
    detail::write_meta(inv);
}

inline void cmd_expand(const Invocation& inv) {
    const auto& c = inv.config;
    const auto spec = build_generator(c.generator);
    const auto part = build_partition(c);
    const auto path = generate(spec, part, c.seed);
    const auto expansion = expand(path, c.max_order);
    {
        auto out = detail::open_output(inv.out_dir, "path.csv");
        write_path_csv(out, path);
    }
    {
        auto out = detail::open_output(inv.out_dir, "expansion.csv");
        write_expansion_csv(out, expansion);
    }
    detail::write_meta(inv);
}

inline void cmd_solve(const Invocation& inv) {
    const auto& c = inv.config;
    const auto spec = build_generator(c.generator);
    const auto part = build_partition(c);
    const auto problem = build_problem(c);
    const auto mode = build_mode(c);
    validate(c.grid);
    cells_per_step(c.grid, part);
    validate(problem, c.grid, ValidationLattice{});

    const auto path = generate(spec, part, c.seed);
    std::optional<FourierExpansion> expansion;
    if (mode.kind != ForcingMode::Kind::sm_path) expansion = expand(path, mode.j);
    const auto field = solve(problem, c.grid, path, expansion ? &*expansion : nullptr, mode, detail::solve_options(c));
    {
        auto out = detail::open_output(inv.out_dir, "field.csv");
        write_field_csv(out, field, "generator=" + c.generator.type);
    }
    detail::write_meta(inv);
}

inline void cmd_converge(const Invocation& inv) {
    const auto& c = inv.config;
    const auto spec = build_generator(c.generator);
    const auto part = build_partition(c);
    const auto problem = build_problem(c);
    const auto family = build_family(c);
    validate_study(c);
    StudyOptions opts;
    opts.threads = c.threads;
    opts.solve = detail::solve_options(c);
    const auto report = run_convergence_study(problem, c.grid, part, spec, family, c.j_list, c.replicas, c.root_seed, opts);
    write_report_files(inv.out_dir, report, meta_echo(c, inv.command));
}

inline void cmd_rate(const Invocation& inv) {
    const auto& c = inv.config;
    if (c.generator.type != "smoothed") throw ConfigError("rate: generator.type must be 'smoothed'");
    const auto gen = build_generator(c.generator);
    RateExampleSpec spec;
    spec.measure = std::get<SmoothedSmSpec>(gen.kind);
    spec.j_list = detail::rate_j_list(c);
    spec.y_points = c.rate.y_points;
    spec.t_points = c.rate.t_points;
    spec.quadrature_cells = c.rate.quadrature_cells;
    if (spec.y_points < 1 || spec.t_points < 2) throw ConfigError("rate: y_points >= 1 and t_points >= 2 required");

    std::optional<StochasticRatePart> stochastic;
    StudyOptions opts;
    opts.threads = c.threads;
    opts.solve = detail::solve_options(c);
    if (c.rate.stochastic) {
        validate_study(c);
        StochasticRatePart part;
        part.problem = build_problem(c);
        part.grid = c.grid;
        part.partition = build_partition(c);
        part.family = build_family(c);
        part.j_list = c.j_list;
        part.replicas = c.replicas;
        part.root_seed = c.root_seed;
        stochastic = part;
    }
    const auto result = run_rate_example(spec, stochastic, opts);
    {
        auto out = detail::open_output(inv.out_dir, "rate.csv");
        write_rate_csv(out, result);
    }
    if (result.stochastic) {
        write_report_files(inv.out_dir, *result.stochastic, meta_echo(c, inv.command));
    } else {
        detail::write_meta(inv);
    }
}

inline void dispatch(const Invocation& inv) {
    if (!std::filesystem::is_directory(inv.out_dir)) {
        throw IoError("output directory does not exist: " + inv.out_dir.string());
    }
    if (inv.command == "generate") cmd_generate(inv);
    else if (inv.command == "expand") cmd_expand(inv);
    else if (inv.command == "solve") cmd_solve(inv);
    else if (inv.command == "converge") cmd_converge(inv);
    else if (inv.command == "rate") cmd_rate(inv);
    else throw ConfigError("unknown command '" + inv.command + "'");
}

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return io_failure;
    if (dynamic_cast<const NonconvergenceError*>(&e) || dynamic_cast<const StudyError*>(&e) ||
        dynamic_cast<const GenerationError*>(&e) || dynamic_cast<const FitError*>(&e)) {
        return numeric_failure;
    }
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
        dynamic_cast<const SpecError*>(&e) || dynamic_cast<const AlignmentError*>(&e) ||
        dynamic_cast<const OrderError*>(&e) || dynamic_cast<const ResolutionError*>(&e) ||
        dynamic_cast<const ContractError*>(&e) || dynamic_cast<const CoverageError*>(&e)) {
        return config_failure;
    }
    return other_failure;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Stochastic measures, Fourier/Fejer expansions and the driven wave equation", "smwave_cli"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    bool strict = false;
    const char* commands[][2] = {{"generate", "sample a stochastic measure path (path.csv)"},
                                 {"expand", "sample a path and its Fourier coefficients (expansion.csv)"},
                                 {"solve", "solve the driven wave equation (field.csv)"},
                                 {"converge", "Monte Carlo convergence study (report.csv, raw.csv)"},
                                 {"rate", "Fourier rate table for a smoothed measure (rate.csv)"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--seed", seed, "override seed and root_seed");
        sub->add_option("--out", out_dir, "existing output directory");
        sub->add_flag("--strict-paper-sign", strict, "minus sign in the u0 part of the d'Alembert term");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "smwave_cli: " << e.what() << "\n";
        return config_failure;
    }

    try {
        Invocation inv;
        inv.command = app.get_subcommands().front()->get_name();
        inv.config = load_config(config_path);
        if (seed) {
            inv.config.seed = *seed;
            inv.config.root_seed = *seed;
        }
        if (strict) inv.config.strict_paper_sign = true;
        inv.out_dir = out_dir;
        validate_common(inv.config);
        dispatch(inv);
        out << "smwave_cli " << inv.command << ": wrote results to " << inv.out_dir.string() << "\n";
        return ok;
    } catch (const std::exception& e) {
        err << "smwave_cli: error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

} // namespace smwave::cli
