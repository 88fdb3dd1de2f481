#include "zoro/oracle.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace zoro;

namespace
{
    const RobotState kW(1e-4, 1e-4, 1e-4, 4e-3, 4e-3);
}

TEST(ExactRobust, InactiveCollisionMatchesZoro)
{
    OcpSpec spec = zoro::testing::default_spec();
    spec.obstacles = {{0.0, -3.0, 0.5}};
    ReferenceParams rp;
    rp.radius = 2.0;
    const ReferenceTrajectory ref = generate_reference(ReferenceKind::kCircle, rp, spec.disc, spec.bounds);
    const ReferenceWindow window = reference_window(ref, 0, spec.N);
    const RobotState s0 = ref.states[0] + make_state(0.1, -0.1, 0.05, -0.1, 0.0);
    const RobustModel model = zoro::testing::ellipsoidal_model(spec, kW);
    const OcpSolution z = zoro_solve_to_convergence(s0, ZoroSettings{}, spec, window, model);
    const OcpSolution e = solve_exact_robust(s0, spec, window, model, ZoroSettings{});
    ASSERT_TRUE(z.converged);
    ASSERT_TRUE(e.converged);
    EXPECT_FALSE(e.collision_active(constraint_blocks(spec)));
    EXPECT_LE((z.command() - e.command()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ExactRobust, ActiveCollisionIsStationaryWithBackoffSensitivity)
{
    OcpSpec spec = zoro::testing::default_spec();
    spec.obstacles = {{1.0, 0.9, 0.5}};
    ReferenceParams rp;
    const ReferenceTrajectory ref = generate_reference(ReferenceKind::kLine, rp, spec.disc, spec.bounds);
    const ReferenceWindow window = reference_window(ref, 0, spec.N);
    const RobotState s0 = ref.states[0];
    const RobustModel model = zoro::testing::ellipsoidal_model(spec, kW);
    const OcpSolution e = solve_exact_robust(s0, spec, window, model, ZoroSettings{});
    const OcpSolution z = zoro_solve_to_convergence(s0, ZoroSettings{}, spec, window, model);
    ASSERT_TRUE(e.collision_active(constraint_blocks(spec)));

    const Eigen::MatrixXd je = backoff_jacobian(e.states, e.inputs, spec, model);
    EXPECT_LE(evaluate_kkt(e, s0, spec, window, &je).stationarity, 1e-6);
    EXPECT_LE(e.kkt.feasibility, 1e-8);

    const Eigen::MatrixXd jz = backoff_jacobian(z.states, z.inputs, spec, model);
    EXPECT_GT(evaluate_kkt(z, s0, spec, window, &jz).stationarity, 1e-6);
    EXPECT_LE(objective_value(e, window, spec), objective_value(z, window, spec) + 1e-9);
}

TEST(NominalSolver, MatchesZoroWithEmptyTube)
{
    OcpSpec spec = zoro::testing::default_spec();
    spec.obstacles = {{1.0, 0.9, 0.5}};
    ReferenceParams rp;
    const ReferenceTrajectory ref = generate_reference(ReferenceKind::kLine, rp, spec.disc, spec.bounds);
    const ReferenceWindow window = reference_window(ref, 0, spec.N);
    const OcpSolution n = solve_nominal(ref.states[0], spec, window, ZoroSettings{});
    const OcpSolution z =
        zoro_solve_to_convergence(ref.states[0], ZoroSettings{}, spec, window, RobustModel::nominal());
    EXPECT_LE((n.command() - z.command()).cwiseAbs().maxCoeff(), 1e-8);
    for (const Eigen::VectorXd &b : n.backoffs)
        EXPECT_EQ(b.cwiseAbs().maxCoeff(), 0.0);
}
