#include "zoro/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace zoro
{
    using nlohmann::json;

    std::string format_double(double x)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }

    const std::vector<std::string> &log_columns()
    {
        static const std::vector<std::string> columns = {
            "step",    "t",         "x",     "y",     "theta",   "v",       "omega",
            "a_cmd",   "alpha_cmd", "w_x",   "w_y",   "w_theta", "w_v",     "w_omega",
            "err_pos", "err_theta", "clearance_min", "collision_active", "solve_ms"};
        return columns;
    }

    void write_log_csv(std::ostream &out, const SimLog &log)
    {
        const auto &cols = log_columns();
        for (std::size_t i = 0; i < cols.size(); ++i)
            out << (i ? "," : "") << cols[i];
        out << '\n';
        for (const SimRow &r : log.rows)
        {
            out << r.step << ',' << format_double(r.t);
            for (int i = 0; i < kNs; ++i)
                out << ',' << format_double(r.state[i]);
            for (int i = 0; i < kNu; ++i)
                out << ',' << format_double(r.command[i]);
            for (int i = 0; i < kNs; ++i)
                out << ',' << format_double(r.w[i]);
            out << ',' << format_double(r.err_pos) << ',' << format_double(r.err_theta) << ','
                << format_double(r.clearance_min) << ',' << (r.collision_active ? 1 : 0) << ','
                << format_double(r.solve_ms) << '\n';
        }
    }

    void write_log_csv(const std::string &path, const SimLog &log)
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot write " + path);
        write_log_csv(out, log);
    }

    LoggedTrajectory read_trajectory_csv(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("log", "cannot open " + path);
        std::string line;
        if (!std::getline(in, line))
            throw ConfigError("log", "empty file");
        std::map<std::string, int> index;
        {
            std::stringstream ss(line);
            std::string cell;
            for (int i = 0; std::getline(ss, cell, ','); ++i)
                index[cell] = i;
        }
        auto column = [&](std::initializer_list<const char *> names) {
            for (const char *n : names)
                if (auto it = index.find(n); it != index.end())
                    return it->second;
            throw ConfigError("log", std::string("missing column ") + *names.begin());
        };
        const std::array<int, kNs> sc = {column({"x"}), column({"y"}), column({"theta"}), column({"v"}),
                                         column({"omega"})};
        const std::array<int, kNu> uc = {column({"a_cmd", "a"}), column({"alpha_cmd", "alpha"})};

        LoggedTrajectory traj;
        int row = 1;
        while (std::getline(in, line))
        {
            ++row;
            if (line.empty())
                continue;
            std::vector<double> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
            {
                try
                {
                    cells.push_back(std::stod(cell));
                }
                catch (const std::exception &)
                {
                    throw ConfigError("log", "line " + std::to_string(row) + ": not a number");
                }
            }
            RobotState s;
            ControlInput u;
            for (int i = 0; i < kNs; ++i)
                s[i] = cells.at(static_cast<std::size_t>(sc[static_cast<std::size_t>(i)]));
            for (int i = 0; i < kNu; ++i)
                u[i] = cells.at(static_cast<std::size_t>(uc[static_cast<std::size_t>(i)]));
            traj.states.push_back(s);
            traj.inputs.push_back(u);
        }
        return traj;
    }

    json to_json(const Digest &d)
    {
        return {{"count", d.count}, {"min", d.min}, {"q1", d.q1}, {"median", d.median}, {"q3", d.q3}, {"max", d.max}};
    }

    json to_json(const SimMetrics &m)
    {
        return {{"max_tracking_error", m.max_tracking_error},
                {"final_position_error", m.final_position_error},
                {"tracking_bound", m.bound.bound},
                {"bound_entry_step", m.bound.entry_step},
                {"min_clearance", m.min_clearance},
                {"min_clearance_all", m.min_clearance_all},
                {"clearance", to_json(m.clearance)},
                {"clearance_active", to_json(m.clearance_active)},
                {"solve_ms", to_json(m.solve_ms)},
                {"failures", m.failures},
                {"unconverged", m.unconverged}};
    }

    json to_json(const NoiseEstimate &e)
    {
        json W = json::array();
        for (int i = 0; i < kNs; ++i)
            W.push_back(e.W(i, i));
        return {{"samples", e.samples},
                {"sigma", std::vector<double>(e.sigma.data(), e.sigma.data() + kNs)},
                {"W_diagonal", W}};
    }

    std::string log_file_name(ControllerKind controller, std::uint64_t seed)
    {
        return "log_" + to_string(controller) + "_" + std::to_string(seed) + ".csv";
    }

    ScenarioConfig apply_overrides(ScenarioConfig cfg, const RunOptions &opts)
    {
        if (opts.seed)
            cfg.seed = *opts.seed;
        if (opts.runs)
            cfg.runs = *opts.runs;
        cfg.validate();
        return cfg;
    }

    namespace
    {
        void write_json(const std::filesystem::path &path, const json &j)
        {
            std::ofstream out(path);
            if (!out)
                throw std::runtime_error("cannot write " + path.string());
            out << j.dump(2) << '\n';
        }

        std::filesystem::path prepare_out_dir(const RunOptions &opts)
        {
            std::filesystem::path dir(opts.out_dir);
            std::filesystem::create_directories(dir);
            return dir;
        }

        bool strict_mode(const ScenarioConfig &cfg, ControllerKind kind)
        {
            return cfg.solve_to_convergence || kind == ControllerKind::kExact;
        }

        struct ControllerSummary
        {
            json summary;
            bool converged = true;
        };

        ControllerSummary run_controller(const ScenarioConfig &cfg, const SimScenario &sc, ControllerKind kind,
                                         const RunOptions &opts, const std::filesystem::path &dir, std::ostream &out)
        {
            std::vector<SimLog> logs;
            if (cfg.runs == 1)
                logs.push_back(run_closed_loop(sc, kind, cfg.steps, cfg.seed));
            else
                logs = run_batch(sc, kind, cfg.runs, cfg.seed, opts.threads);

            ControllerSummary result;
            json per_run = json::array();
            int negative = 0, failures = 0, unconverged = 0;
            double worst_clearance = std::numeric_limits<double>::infinity();
            double worst_final = 0.0;
            std::vector<double> solve_all;
            for (const SimLog &log : logs)
            {
                if (opts.write_logs)
                    write_log_csv((dir / log_file_name(kind, log.seed)).string(), log);
                const SimMetrics m = compute_metrics(log);
                json entry = to_json(m);
                entry["seed"] = log.seed;
                entry["max_path_deviation"] = max_path_deviation(log, sc.reference);
                per_run.push_back(entry);
                negative += m.min_clearance_all < 0.0 ? 1 : 0;
                failures += m.failures;
                unconverged += m.unconverged;
                worst_clearance = std::min(worst_clearance, m.min_clearance_all);
                worst_final = std::max(worst_final, m.final_position_error);
                for (const SimRow &r : log.rows)
                    solve_all.push_back(r.solve_ms);
            }
            result.converged = !strict_mode(cfg, kind) || (failures == 0 && unconverged == 0);
            result.summary = {{"controller", to_string(kind)},
                              {"runs", logs.size()},
                              {"runs_with_negative_clearance", negative},
                              {"min_clearance", worst_clearance},
                              {"max_final_position_error", worst_final},
                              {"failures", failures},
                              {"unconverged", unconverged},
                              {"solve_ms", to_json(order_statistics(solve_all))},
                              {"per_run", per_run}};
            out << to_string(kind) << ": runs=" << logs.size() << " min_clearance=" << format_double(worst_clearance)
                << " negative_runs=" << negative << " max_final_error=" << format_double(worst_final)
                << " failures=" << failures << " unconverged=" << unconverged << '\n';
            return result;
        }

        int run_controllers(const ScenarioConfig &cfg_in, const RunOptions &opts, std::vector<ControllerKind> kinds,
                            std::ostream &out)
        {
            const ScenarioConfig cfg = apply_overrides(cfg_in, opts);
            const SimScenario sc = build_scenario(cfg);
            const auto dir = prepare_out_dir(opts);
            write_json(dir / "resolved_config.json", to_json(cfg));
            json summary = {{"scenario", cfg.name}, {"seed", cfg.seed}, {"steps", cfg.steps}, {"controllers", json::array()}};
            bool converged = true;
            for (ControllerKind kind : kinds)
            {
                ControllerSummary cs = run_controller(cfg, sc, kind, opts, dir, out);
                converged = converged && cs.converged;
                summary["controllers"].push_back(std::move(cs.summary));
            }
            write_json(dir / "summary.json", summary);
            return converged ? kExitOk : kExitNoConvergence;
        }

        double elapsed_ms(std::chrono::steady_clock::time_point start)
        {
            return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
    } // namespace

    int cmd_simulate(const ScenarioConfig &cfg, const RunOptions &opts, std::ostream &out)
    {
        std::vector<ControllerKind> kinds = opts.controllers;
        if (kinds.empty())
            kinds = {ControllerKind::kZoro};
        return run_controllers(cfg, opts, kinds, out);
    }

    int cmd_compare(const ScenarioConfig &cfg, const RunOptions &opts, std::ostream &out)
    {
        std::vector<ControllerKind> kinds = opts.controllers;
        if (kinds.empty())
            kinds = {ControllerKind::kZoro, ControllerKind::kNominal, ControllerKind::kExact, ControllerKind::kScalarTube};
        return run_controllers(cfg, opts, kinds, out);
    }

    int cmd_solve(const ScenarioConfig &cfg_in, const RunOptions &opts, std::ostream &out)
    {
        const ScenarioConfig cfg = apply_overrides(cfg_in, opts);
        const SimScenario sc = build_scenario(cfg);
        const ControllerKind kind = opts.controllers.empty() ? ControllerKind::kZoro : opts.controllers.front();
        const RobustModel model = controller_model(sc, kind);
        const ReferenceWindow window = reference_window(sc.reference, 0, sc.spec.N);
        const RobotState s0 = sc.initial_state.value_or(window.states.front());

        const auto start = std::chrono::steady_clock::now();
        const OcpSolution sol = kind == ControllerKind::kExact
                                    ? solve_exact_robust(s0, sc.spec, window, model, sc.settings, sc.oracle)
                                    : zoro_solve_to_convergence(s0, sc.settings, sc.spec, window, model);
        const double ms = elapsed_ms(start);

        json states = json::array(), inputs = json::array();
        for (const RobotState &s : sol.states)
            states.push_back(std::vector<double>(s.data(), s.data() + kNs));
        for (const ControlInput &u : sol.inputs)
            inputs.push_back(std::vector<double>(u.data(), u.data() + kNu));
        const json result = {{"controller", to_string(kind)},
                             {"converged", sol.converged},
                             {"iterations", sol.iterations},
                             {"outer_iterations", sol.outer_iterations},
                             {"kkt", {{"stationarity", sol.kkt.stationarity},
                                      {"feasibility", sol.kkt.feasibility},
                                      {"complementarity", sol.kkt.complementarity}}},
                             {"solve_ms", ms},
                             {"u0", inputs.front()},
                             {"states", states},
                             {"inputs", inputs}};
        const auto dir = prepare_out_dir(opts);
        write_json(dir / "resolved_config.json", to_json(cfg));
        write_json(dir / "solution.json", result);
        out << to_string(kind) << ": u0=(" << format_double(sol.command()[0]) << ", " << format_double(sol.command()[1])
            << ") iterations=" << sol.iterations << " stationarity=" << format_double(sol.kkt.stationarity)
            << " converged=" << (sol.converged ? "yes" : "no") << '\n';
        return sol.converged ? kExitOk : kExitNoConvergence;
    }

    Theorem1Report verify_theorem1(const SimScenario &sc)
    {
        const ReferenceWindow window = reference_window(sc.reference, 0, sc.spec.N);
        const RobotState s0 = sc.initial_state.value_or(window.states.front());
        const RobustModel model = controller_model(sc, ControllerKind::kZoro);

        Theorem1Report rep;
        auto start = std::chrono::steady_clock::now();
        const OcpSolution z = zoro_solve_to_convergence(s0, sc.settings, sc.spec, window, model);
        rep.zoro_ms = elapsed_ms(start);
        start = std::chrono::steady_clock::now();
        const OcpSolution e = solve_exact_robust(s0, sc.spec, window, model, sc.settings, sc.oracle);
        rep.exact_ms = elapsed_ms(start);

        rep.u_zoro = z.command();
        rep.u_exact = e.command();
        rep.input_deviation = (z.command() - e.command()).cwiseAbs().maxCoeff();
        rep.disregarded_gradient = disregarded_gradient(z, sc.spec, model, sc.oracle.fd_step).norm;
        rep.collision_active = e.collision_active(constraint_blocks(sc.spec));
        rep.converged = z.converged && e.converged;
        return rep;
    }

    int cmd_verify_theorem1(const ScenarioConfig &cfg_in, const RunOptions &opts, std::ostream &out)
    {
        const ScenarioConfig cfg = apply_overrides(cfg_in, opts);
        const Theorem1Report rep = verify_theorem1(build_scenario(cfg));
        const bool ok = rep.input_deviation <= kTheorem1InputTolerance &&
                        rep.disregarded_gradient <= kTheorem1GradientTolerance;
        out << "u0 zoro  = (" << format_double(rep.u_zoro[0]) << ", " << format_double(rep.u_zoro[1]) << ")\n"
            << "u0 exact = (" << format_double(rep.u_exact[0]) << ", " << format_double(rep.u_exact[1]) << ")\n"
            << "u0 deviation (inf-norm)           = " << format_double(rep.input_deviation) << " (tol "
            << kTheorem1InputTolerance << ")\n"
            << "disregarded gradient (inf-norm)   = " << format_double(rep.disregarded_gradient) << " (tol "
            << kTheorem1GradientTolerance << ")\n"
            << "collision rows active at oracle   = " << (rep.collision_active ? "yes" : "no") << '\n'
            << "solve time zoro / exact [ms]      = " << format_double(rep.zoro_ms) << " / "
            << format_double(rep.exact_ms) << '\n'
            << (ok ? "PASS" : "FAIL") << '\n';
        const auto dir = prepare_out_dir(opts);
        write_json(dir / "resolved_config.json", to_json(cfg));
        write_json(dir / "theorem1.json", {{"input_deviation", rep.input_deviation},
                                           {"disregarded_gradient", rep.disregarded_gradient},
                                           {"collision_active", rep.collision_active},
                                           {"converged", rep.converged},
                                           {"pass", ok}});
        if (!rep.converged)
            return kExitNoConvergence;
        return ok ? kExitOk : kExitCheckFailed;
    }

    int cmd_estimate_noise(const std::string &log_path, const DiscretizationParams &disc, const RunOptions &opts,
                           std::ostream &out)
    {
        const LoggedTrajectory traj = read_trajectory_csv(log_path);
        const NoiseEstimate est = estimate_noise_bounds(traj.states, traj.inputs, disc);
        static const char *names[kNs] = {"x", "y", "theta", "v", "omega"};
        out << "samples " << est.samples << '\n';
        for (int i = 0; i < kNs; ++i)
            out << "sigma_" << names[i] << " = " << format_double(est.sigma[i]) << "   W_" << names[i] << " = "
                << format_double(est.W(i, i)) << '\n';
        const auto dir = prepare_out_dir(opts);
        write_json(dir / "noise_estimate.json", to_json(est));
        return kExitOk;
    }

    int cmd_bench(const ScenarioConfig &cfg_in, const RunOptions &opts, int samples, std::ostream &out)
    {
        ScenarioConfig cfg = apply_overrides(cfg_in, opts);
        cfg.steps = samples;
        const SimScenario sc = build_scenario(cfg);
        json result = {{"scenario", cfg.name}, {"N", cfg.spec.N}, {"samples", samples}};
        std::map<ControllerKind, Digest> digests;
        for (ControllerKind kind : {ControllerKind::kZoro, ControllerKind::kExact})
        {
            const SimLog log = run_closed_loop(sc, kind, samples, cfg.seed);
            std::vector<double> ms;
            for (const SimRow &r : log.rows)
                ms.push_back(r.solve_ms);
            const Digest d = order_statistics(ms);
            digests[kind] = d;
            result[to_string(kind)] = to_json(d);
            out << to_string(kind) << " solve time [ms]: min " << format_double(d.min) << "  q1 "
                << format_double(d.q1) << "  median " << format_double(d.median) << "  q3 " << format_double(d.q3)
                << "  max " << format_double(d.max) << '\n';
        }
        const double ratio = digests[ControllerKind::kExact].median / digests[ControllerKind::kZoro].median;
        result["median_ratio_exact_over_zoro"] = ratio;
        out << "median ratio exact / zoro: " << format_double(ratio) << '\n';
        const auto dir = prepare_out_dir(opts);
        write_json(dir / "resolved_config.json", to_json(cfg));
        write_json(dir / "bench.json", result);
        return kExitOk;
    }

} // namespace zoro
