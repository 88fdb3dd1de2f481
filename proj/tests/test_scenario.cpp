#include "zoro/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace zoro;

namespace
{
    std::string error_key(const std::string &text)
    {
        try
        {
            parse_scenario(text);
        }
        catch (const ConfigError &e)
        {
            return e.key();
        }
        return "";
    }
} // namespace

TEST(Scenario, MinimalConfigGetsDefaults)
{
    const ScenarioConfig cfg = parse_scenario(R"({"N": 15, "reference": {"kind": "circle"}})");
    EXPECT_EQ(cfg.spec.N, 15);
    EXPECT_EQ(cfg.reference.kind, "circle");
    EXPECT_EQ(cfg.spec.disc.dt, 0.05);
    EXPECT_EQ(cfg.runs, 1);
    const nlohmann::json echo = to_json(cfg);
    for (const char *key : {"name", "seed", "steps", "runs", "N", "dt", "substeps", "tau", "robot_radius", "weights",
                            "bounds", "obstacles", "noise", "sigma0", "plant", "reference", "controller", "oracle",
                            "scalar_tube"})
        EXPECT_TRUE(echo.contains(key)) << key;
}

TEST(Scenario, NegativeRadiusNamesTheKey)
{
    EXPECT_EQ(error_key(R"({"obstacles": [{"x": 1, "y": 2, "radius": -0.5}]})"), "obstacles[0].radius");
}

TEST(Scenario, UnknownKeysAreRejected)
{
    EXPECT_EQ(error_key(R"({"horizon": 20})"), "horizon");
    EXPECT_EQ(error_key(R"({"obstacles": [{"x": 1, "y": 2, "radius": 0.5, "z": 0}]})"), "obstacles[0].z");
    EXPECT_EQ(error_key(R"({"controller": {"gain": 1}})"), "controller.gain");
}

TEST(Scenario, WrongTypesAndRanges)
{
    EXPECT_EQ(error_key(R"({"N": "twenty"})"), "N");
    EXPECT_EQ(error_key(R"({"N": 0})"), "N");
    EXPECT_EQ(error_key(R"({"noise": {"W": [1, 1, 1, -1, 1]}})"), "noise.W");
    EXPECT_EQ(error_key(R"({"noise": {"mode": "loud"}})"), "noise.mode");
    EXPECT_EQ(error_key(R"({"plant": "tank"})"), "plant");
    EXPECT_EQ(error_key(R"({"reference": {"kind": "spiral"}})"), "reference.kind");
    EXPECT_EQ(error_key(R"({"initial_state": [1, 2]})"), "initial_state");
    EXPECT_EQ(error_key(R"({"controller": {"delay": 0.5}})"), "controller.delay");
}

TEST(Scenario, ParseErrorReportsLine)
{
    try
    {
        parse_scenario("{\n  \"N\": 20,\n  \"dt\": ,\n}");
        FAIL() << "expected ConfigError";
    }
    catch (const ConfigError &e)
    {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Scenario, RoundTripIsIdempotent)
{
    const ScenarioConfig cfg = parse_scenario(R"({
        "name": "rt", "seed": 17, "N": 12, "dt": 0.04,
        "obstacles": [{"x": 1.5, "y": -0.25, "radius": 0.3}],
        "noise": {"W": [[1e-4, 1e-6, 0, 0, 0], [1e-6, 1e-4, 0, 0, 0], [0, 0, 1e-4, 0, 0],
                        [0, 0, 0, 4e-3, 0], [0, 0, 0, 0, 4e-3]], "mode": "interior", "window": 1},
        "reference": {"kind": "waypoint-spline", "waypoints": [[0, 0], [2, 1], [4, 0]]},
        "initial_state": [0.1, 0.2, 0.3, 0.4, 0.5],
        "scalar_tube": {"rho": 0.3}
    })");
    const nlohmann::json once = to_json(cfg);
    const nlohmann::json twice = to_json(scenario_from_json(once));
    EXPECT_EQ(once, twice);
    EXPECT_EQ(once.dump(), twice.dump());
}

TEST(Scenario, BuildAppliesModel)
{
    ScenarioConfig cfg = parse_scenario(R"({"noise": {"W": [1e-4, 1e-4, 1e-4, 4e-3, 4e-3], "mode": "boundary"}})");
    const SimScenario sc = build_scenario(cfg);
    EXPECT_EQ(sc.robust.W.W, cfg.W);
    EXPECT_EQ(sc.plant.noise.W, cfg.W);
    EXPECT_NEAR(sc.scalar.eps_step, std::sqrt(4e-3), 1e-15);
    EXPECT_NEAR(sc.scalar.rho, std::exp(-1.0), 1e-15);
    EXPECT_GT(sc.robust.K.K(kAcc, kV), 0.0);
    EXPECT_LE(sc.reference.consistency_residual(sc.spec.disc), 1e-8);
}

TEST(Scenario, MatchedScalarTube)
{
    const ShapeMatrix W = RobotState(1e-4, 2e-4, 1e-4, 4e-3, 1e-3).asDiagonal();
    const ScalarTube st = matched_scalar_tube(W, ShapeMatrix::Identity() * 0.04, 0.5);
    EXPECT_NEAR(st.eps_step, std::sqrt(4e-3), 1e-15);
    EXPECT_NEAR(st.eps0, 0.2, 1e-15);
    EXPECT_EQ(st.rho, 0.5);
}

TEST(Scenario, ReferenceFileResolvesAgainstScenarioDirectory)
{
    const auto dir = std::filesystem::temp_directory_path() / "zoro_scenario_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / "ref.csv");
        csv << "x,y,theta,v,omega,a,alpha\n";
        RobotState s = make_state(0, 0, 0, 0.5, 0);
        for (int k = 0; k < 40; ++k)
        {
            csv << s[0] << ',' << s[1] << ',' << s[2] << ',' << s[3] << ',' << s[4] << ",0,0\n";
            s = integrate_step(s, ControlInput::Zero(), {});
        }
        std::ofstream json(dir / "s.json");
        json << R"({"reference": {"file": "ref.csv"}})";
    }
    const ScenarioConfig cfg = load_scenario((dir / "s.json").string());
    EXPECT_EQ(std::filesystem::path(cfg.reference.file), (dir / "ref.csv").lexically_normal());
    const SimScenario sc = build_scenario(cfg);
    EXPECT_EQ(sc.reference.states.size(), 40u);
    EXPECT_EQ(sc.reference.inputs.size(), 39u);
    std::filesystem::remove_all(dir);
}
