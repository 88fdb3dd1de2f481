#pragma once

#include "zoro/noise_estimation.hpp"
#include "zoro/scenario.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace zoro
{
    enum ExitCode : int
    {
        kExitOk = 0,
        kExitCheckFailed = 1,
        kExitValidation = 2,
        kExitNoConvergence = 3,
    };

    // Shortest representation that round-trips a double.
    std::string format_double(double x);

    const std::vector<std::string> &log_columns();
    void write_log_csv(std::ostream &out, const SimLog &log);
    void write_log_csv(const std::string &path, const SimLog &log);

    struct LoggedTrajectory
    {
        std::vector<RobotState> states;
        std::vector<ControlInput> inputs;
    };

    /// Reads states and commands from a CSV with a header naming at least
    /// x, y, theta, v, omega and a/alpha (or a_cmd/alpha_cmd).
    LoggedTrajectory read_trajectory_csv(const std::string &path);

    nlohmann::json to_json(const Digest &d);
    nlohmann::json to_json(const SimMetrics &m);
    nlohmann::json to_json(const NoiseEstimate &e);

    std::string log_file_name(ControllerKind controller, std::uint64_t seed);

    struct RunOptions
    {
        std::string out_dir = ".";
        std::vector<ControllerKind> controllers;
        std::optional<std::uint64_t> seed;
        std::optional<int> runs;
        int threads = 0;
        bool write_logs = true;
    };

    /// Applies --seed / --runs overrides to the config.
    ScenarioConfig apply_overrides(ScenarioConfig cfg, const RunOptions &opts);

    int cmd_simulate(const ScenarioConfig &cfg, const RunOptions &opts, std::ostream &out);
    int cmd_compare(const ScenarioConfig &cfg, const RunOptions &opts, std::ostream &out);
    int cmd_solve(const ScenarioConfig &cfg, const RunOptions &opts, std::ostream &out);
    int cmd_verify_theorem1(const ScenarioConfig &cfg, const RunOptions &opts, std::ostream &out);
    int cmd_estimate_noise(const std::string &log_path, const DiscretizationParams &disc, const RunOptions &opts,
                           std::ostream &out);
    int cmd_bench(const ScenarioConfig &cfg, const RunOptions &opts, int samples, std::ostream &out);

    inline constexpr double kTheorem1InputTolerance = 1e-6;
    inline constexpr double kTheorem1GradientTolerance = 1e-8;

    struct Theorem1Report
    {
        ControlInput u_zoro = ControlInput::Zero();
        ControlInput u_exact = ControlInput::Zero();
        double input_deviation = 0.0;
        double disregarded_gradient = 0.0;
        bool collision_active = false;
        bool converged = false;
        double zoro_ms = 0.0;
        double exact_ms = 0.0;
    };

    Theorem1Report verify_theorem1(const SimScenario &sc);

} // namespace zoro
