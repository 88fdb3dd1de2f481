#include "zoro/reference.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace zoro;

namespace
{
    const OcpSpec kSpec = zoro::testing::default_spec();
}

TEST(Reference, LineIsConsistent)
{
    ReferenceParams rp;
    rp.speed = 1.0;
    rp.duration = 10.0;
    const ReferenceTrajectory ref = generate_reference(ReferenceKind::kLine, rp, kSpec.disc, kSpec.bounds);
    EXPECT_EQ(ref.inputs.size(), 200u);
    EXPECT_EQ(ref.states.size(), 201u);
    EXPECT_LE(ref.consistency_residual(kSpec.disc), 1e-10);
    EXPECT_NEAR(ref.states.back()[kX], 10.0, 1e-9);
}

TEST(Reference, CircleHasConstantTurnRate)
{
    ReferenceParams rp;
    rp.speed = 0.5;
    rp.radius = 2.0;
    const ReferenceTrajectory ref = generate_reference(ReferenceKind::kCircle, rp, kSpec.disc, kSpec.bounds);
    EXPECT_LE(ref.consistency_residual(kSpec.disc), 1e-8);
    for (const RobotState &s : ref.states)
    {
        EXPECT_NEAR(s[kOmega], 0.25, 1e-12);
        EXPECT_NEAR(s[kV], 0.5, 1e-12);
    }
    // centre at (0, R) for a counter-clockwise start heading along +x
    for (const RobotState &s : ref.states)
        EXPECT_NEAR(std::hypot(s[kX], s[kY] - 2.0), 2.0, 1e-5);
}

TEST(Reference, FigureEightIsConsistent)
{
    ReferenceParams rp;
    rp.radius = 1.5;
    rp.duration = 30.0;
    const ReferenceTrajectory ref = generate_reference(ReferenceKind::kFigureEight, rp, kSpec.disc, kSpec.bounds);
    EXPECT_LE(ref.consistency_residual(kSpec.disc), 1e-8);
}

TEST(Reference, WaypointSplineIsConsistent)
{
    ReferenceParams rp;
    rp.waypoints = {{0, 0}, {2, 1}, {4, -1}, {6, 0}};
    rp.duration = 30.0;
    const ReferenceTrajectory ref = generate_reference(ReferenceKind::kWaypointSpline, rp, kSpec.disc, kSpec.bounds);
    EXPECT_LE(ref.consistency_residual(kSpec.disc), 1e-8);
    EXPECT_NEAR(ref.states.back()[kX], 6.0, 0.5);
    for (std::size_t k = 0; k < ref.inputs.size(); ++k)
    {
        EXPECT_LE(std::abs(ref.states[k][kOmega]), kSpec.bounds.omega_max + 1e-12);
        EXPECT_LE(std::abs(ref.inputs[k][kAlpha]), kSpec.bounds.alpha_max + 1e-12);
    }
}

TEST(Reference, RampStartsFromRest)
{
    ReferenceParams rp;
    rp.ramp_time = 1.0;
    const ReferenceTrajectory ref = generate_reference(ReferenceKind::kLine, rp, kSpec.disc, kSpec.bounds);
    EXPECT_EQ(ref.states.front()[kV], 0.0);
    EXPECT_NEAR(ref.states.back()[kV], 0.5, 1e-12);
    EXPECT_LE(ref.consistency_residual(kSpec.disc), 1e-10);
}

TEST(Reference, SpeedAboveBoundIsRejected)
{
    ReferenceParams rp;
    rp.speed = 1.5;
    try
    {
        generate_reference(ReferenceKind::kLine, rp, kSpec.disc, kSpec.bounds);
        FAIL() << "expected ConfigError";
    }
    catch (const ConfigError &e)
    {
        EXPECT_EQ(e.key(), "reference.speed");
    }
}

TEST(Reference, TurnRateAboveBoundIsRejected)
{
    ReferenceParams rp;
    rp.speed = 0.9;
    rp.radius = 0.5;
    EXPECT_THROW(generate_reference(ReferenceKind::kCircle, rp, kSpec.disc, kSpec.bounds), ConfigError);
}

TEST(Reference, KindNamesRoundTrip)
{
    for (ReferenceKind k : {ReferenceKind::kLine, ReferenceKind::kCircle, ReferenceKind::kFigureEight,
                            ReferenceKind::kWaypointSpline})
        EXPECT_EQ(parse_reference_kind(to_string(k)), k);
    EXPECT_THROW(parse_reference_kind("spiral"), ConfigError);
}
