#include "zoro/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace zoro;
namespace fs = std::filesystem;

namespace
{
    fs::path fresh_dir(const std::string &name)
    {
        const fs::path dir = fs::temp_directory_path() / ("zoro_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
        return dir;
    }

    ScenarioConfig small_config()
    {
        return parse_scenario(R"({
            "name": "small", "steps": 30, "N": 10,
            "obstacles": [{"x": 1.0, "y": 0.95, "radius": 0.4}],
            "noise": {"W": [1e-5, 1e-5, 1e-5, 1e-3, 1e-3], "mode": "boundary"}
        })");
    }

    int run_cli(const std::string &args)
    {
        const int status = std::system((std::string(ZORO_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(status);
    }

    nlohmann::json read_json(const fs::path &p)
    {
        std::ifstream in(p);
        return nlohmann::json::parse(in);
    }
} // namespace

TEST(FormatDouble, RoundTrips)
{
    for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 123456.789, 6.02214076e23})
        EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(LogCsv, ColumnsAndRoundTrip)
{
    const SimScenario sc = build_scenario(small_config());
    const SimLog log = run_closed_loop(sc, ControllerKind::kZoro, 30, 4);
    const fs::path dir = fresh_dir("csv");
    const fs::path path = dir / "log.csv";
    write_log_csv(path.string(), log);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "step,t,x,y,theta,v,omega,a_cmd,alpha_cmd,w_x,w_y,w_theta,w_v,w_omega,err_pos,err_theta,"
                      "clearance_min,collision_active,solve_ms");
    const LoggedTrajectory traj = read_trajectory_csv(path.string());
    ASSERT_EQ(traj.states.size(), log.rows.size());
    for (std::size_t i = 0; i < log.rows.size(); ++i)
    {
        EXPECT_EQ(traj.states[i], log.rows[i].state);
        EXPECT_EQ(traj.inputs[i], log.rows[i].command);
    }
}

TEST(Experiment, SimulateWritesLogSummaryAndConfig)
{
    const fs::path dir = fresh_dir("simulate");
    RunOptions opts;
    opts.out_dir = dir.string();
    std::ostringstream out;
    EXPECT_EQ(cmd_simulate(small_config(), opts, out), kExitOk);
    EXPECT_TRUE(fs::exists(dir / "log_zoro_1.csv"));
    const nlohmann::json summary = read_json(dir / "summary.json");
    ASSERT_EQ(summary["controllers"].size(), 1u);
    EXPECT_EQ(summary["controllers"][0]["controller"], "zoro");
    EXPECT_TRUE(summary["controllers"][0]["per_run"][0].contains("clearance"));
    EXPECT_EQ(read_json(dir / "resolved_config.json"), to_json(small_config()));
}

TEST(Experiment, CompareHasOneRowPerController)
{
    const fs::path dir = fresh_dir("compare");
    RunOptions opts;
    opts.out_dir = dir.string();
    std::ostringstream out;
    ScenarioConfig cfg = small_config();
    cfg.steps = 5;
    EXPECT_EQ(cmd_compare(cfg, opts, out), kExitOk);
    const nlohmann::json summary = read_json(dir / "summary.json");
    std::vector<std::string> names;
    for (const auto &c : summary["controllers"])
        names.push_back(c["controller"]);
    EXPECT_EQ(names, (std::vector<std::string>{"zoro", "nominal", "exact", "scalar-tube"}));
}

TEST(Experiment, RerunFromEchoIsBitIdentical)
{
    const fs::path a = fresh_dir("echo_a"), b = fresh_dir("echo_b");
    RunOptions opts;
    opts.out_dir = a.string();
    opts.seed = 77;
    std::ostringstream out;
    cmd_simulate(small_config(), opts, out);
    const ScenarioConfig echoed = load_scenario((a / "resolved_config.json").string());
    RunOptions again;
    again.out_dir = b.string();
    cmd_simulate(echoed, again, out);
    auto slurp = [](const fs::path &p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        std::string text = ss.str();
        // solve times are wall-clock; drop the last column
        std::stringstream lines(text), kept;
        std::string line;
        while (std::getline(lines, line))
            kept << line.substr(0, line.rfind(',')) << '\n';
        return kept.str();
    };
    EXPECT_EQ(slurp(a / "log_zoro_77.csv"), slurp(b / "log_zoro_77.csv"));
}

TEST(Experiment, MonteCarloRunsUseDerivedSeeds)
{
    const fs::path dir = fresh_dir("mc");
    RunOptions opts;
    opts.out_dir = dir.string();
    opts.runs = 3;
    opts.threads = 2;
    std::ostringstream out;
    ScenarioConfig cfg = small_config();
    cfg.steps = 5;
    EXPECT_EQ(cmd_simulate(cfg, opts, out), kExitOk);
    for (std::uint64_t i = 0; i < 3; ++i)
        EXPECT_TRUE(fs::exists(dir / log_file_name(ControllerKind::kZoro, derive_seed(cfg.seed, i))));
}

TEST(Cli, ExitCodes)
{
    const fs::path dir = fresh_dir("cli");
    {
        std::ofstream bad(dir / "bad.json");
        bad << R"({"obstacles": [{"x": 1, "y": 2, "radius": -1}]})";
        std::ofstream ok(dir / "ok.json");
        ok << R"({"steps": 5, "N": 10})";
    }
    const std::string out = " -o " + (dir / "out").string();
    EXPECT_EQ(run_cli("simulate -c " + (dir / "ok.json").string() + out), 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
    EXPECT_EQ(run_cli("simulate -c " + (dir / "bad.json").string() + out), 2);
    EXPECT_EQ(run_cli("simulate -c " + (dir / "ok.json").string() + " --controller pid" + out), 2);
    EXPECT_EQ(run_cli("verify-theorem1 -c " + (dir / "ok.json").string() + out), 0);
    EXPECT_EQ(run_cli("estimate-noise --log " + (dir / "out" / "log_zoro_1.csv").string() + out), 2);
}

TEST(Cli, NoConvergenceExitCode)
{
    const fs::path dir = fresh_dir("cli_nc");
    {
        std::ofstream cfg(dir / "nc.json");
        cfg << R"({"steps": 3, "N": 10, "initial_state": [0.5, -0.5, 0.5, 0, 0],
                   "controller": {"solve_to_convergence": true, "max_outer_iterations": 1, "max_inner_iterations": 1}})";
    }
    EXPECT_EQ(run_cli("solve -c " + (dir / "nc.json").string() + " -o " + dir.string()), 3);
}
