#include "zoro/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace
{
    struct CommonArgs
    {
        std::string config;
        std::string out = ".";
        std::vector<std::string> controllers;
        std::optional<std::uint64_t> seed;
        std::optional<int> runs;
        int threads = 0;
        bool no_logs = false;
    };

    void add_common(CLI::App *cmd, CommonArgs &args, bool needs_config = true)
    {
        auto *cfg = cmd->add_option("-c,--config", args.config, "scenario JSON file");
        if (needs_config)
            cfg->required()->check(CLI::ExistingFile);
        cmd->add_option("-o,--out", args.out, "output directory");
        cmd->add_option("--seed", args.seed, "override the scenario seed");
    }

    void add_run_options(CLI::App *cmd, CommonArgs &args)
    {
        cmd->add_option("--controller", args.controllers, "zoro, nominal, exact or scalar-tube (repeatable)");
        cmd->add_option("--runs", args.runs, "override the number of Monte Carlo runs");
        cmd->add_option("--threads", args.threads, "worker threads (ZORO_THREADS overrides)");
        cmd->add_flag("--no-logs", args.no_logs, "skip per-run CSV logs");
    }

    zoro::RunOptions to_options(const CommonArgs &args)
    {
        zoro::RunOptions opts;
        opts.out_dir = args.out;
        opts.seed = args.seed;
        opts.runs = args.runs;
        opts.threads = args.threads;
        opts.write_logs = !args.no_logs;
        for (const std::string &c : args.controllers)
            opts.controllers.push_back(zoro::parse_controller_kind(c));
        return opts;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Robust MPC with zero-order robust optimization for a differential-drive robot"};
    app.require_subcommand(1);

    CommonArgs args;
    int bench_samples = 100;
    std::string log_path;
    double log_dt = 0.05;

    auto *simulate = app.add_subcommand("simulate", "closed-loop rollouts of one or more controllers");
    add_common(simulate, args);
    add_run_options(simulate, args);

    auto *compare = app.add_subcommand("compare", "closed-loop rollouts of all four controllers");
    add_common(compare, args);
    add_run_options(compare, args);

    auto *solve = app.add_subcommand("solve", "solve the first OCP of a scenario to convergence");
    add_common(solve, args);
    solve->add_option("--controller", args.controllers, "zoro or exact");

    auto *theorem = app.add_subcommand("verify-theorem1", "compare converged zoRO against the exact robust solver");
    add_common(theorem, args);

    auto *estimate = app.add_subcommand("estimate-noise", "3-sigma process noise bounds from a state/input log");
    add_common(estimate, args, false);
    estimate->add_option("--log", log_path, "CSV log")->required()->check(CLI::ExistingFile);
    estimate->add_option("--dt", log_dt, "sampling interval when no config is given");

    auto *bench = app.add_subcommand("bench", "solve-time digest of zoro_step against the exact robust solver");
    add_common(bench, args);
    bench->add_option("--samples", bench_samples, "closed-loop samples per controller")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try
    {
        const zoro::RunOptions opts = to_options(args);
        if (estimate->parsed())
        {
            zoro::DiscretizationParams disc;
            disc.dt = log_dt;
            if (!args.config.empty())
                disc = zoro::load_scenario(args.config).spec.disc;
            disc.validate();
            return zoro::cmd_estimate_noise(log_path, disc, opts, std::cout);
        }
        const zoro::ScenarioConfig cfg = zoro::load_scenario(args.config);
        if (simulate->parsed())
            return zoro::cmd_simulate(cfg, opts, std::cout);
        if (compare->parsed())
            return zoro::cmd_compare(cfg, opts, std::cout);
        if (solve->parsed())
            return zoro::cmd_solve(cfg, opts, std::cout);
        if (theorem->parsed())
            return zoro::cmd_verify_theorem1(cfg, opts, std::cout);
        return zoro::cmd_bench(cfg, opts, bench_samples, std::cout);
    }
    catch (const zoro::ConfigError &e)
    {
        std::cerr << "validation error: " << e.what() << '\n';
        return zoro::kExitValidation;
    }
    catch (const zoro::SolverError &e)
    {
        std::cerr << "solver error: " << e.what() << '\n';
        return zoro::kExitNoConvergence;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
