#pragma once

#include "zoro/reference.hpp"
#include "zoro/simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace zoro
{
    struct ReferenceConfig
    {
        std::string kind = "line";   // generator name, ignored when file is set
        ReferenceParams params;
        std::string file;            // CSV with columns x,y,theta,v,omega,a,alpha
        bool loop = false;
    };

    /// Fully resolved scenario. Every field has a default; to_json echoes all of them.
    struct ScenarioConfig
    {
        std::string name = "scenario";
        std::uint64_t seed = 1;
        int steps = 200;
        int runs = 1;
        OcpSpec spec;
        DiffDriveParams dd;
        ShapeMatrix W = ShapeMatrix::Zero();
        ShapeMatrix sigma0 = ShapeMatrix::Zero();
        PlantMode plant_mode = PlantMode::kIdeal;
        NoiseMode noise_mode = NoiseMode::kOff;
        int noise_window = 0;
        ReferenceConfig reference;
        ZoroSettings settings;
        OracleSettings oracle;
        bool solve_to_convergence = false;
        double delay = 0.0;
        std::optional<double> scalar_rho;   // default exp(-dt / tau)
        std::optional<RobotState> initial_state;

        void validate() const;
    };

    ScenarioConfig scenario_from_json(const nlohmann::json &j);
    nlohmann::json to_json(const ScenarioConfig &cfg);

    /// Parses and validates a scenario file. Relative reference files resolve
    /// against the scenario's directory.
    ScenarioConfig load_scenario(const std::string &path);
    ScenarioConfig parse_scenario(const std::string &text, const std::string &base_dir = ".");

    ReferenceTrajectory load_reference_csv(const std::string &path, double dt, bool loop);

    /// Matched hypersphere tube: eps_step = sqrt(lmax(W)), eps0 = sqrt(lmax(Sigma0)).
    ScalarTube matched_scalar_tube(const ShapeMatrix &W, const ShapeMatrix &sigma0, double rho);

    SimScenario build_scenario(const ScenarioConfig &cfg);

} // namespace zoro
