#include "zoro/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace zoro;

namespace
{
    // Exact solution for constant (v, omega) and zero input.
    RobotState analytic_arc(const RobotState &s, double t)
    {
        const double v = s[kV];
        const double w = s[kOmega];
        const double th = s[kTheta];
        RobotState out = s;
        out[kX] = s[kX] + v / w * (std::sin(th + w * t) - std::sin(th));
        out[kY] = s[kY] - v / w * (std::cos(th + w * t) - std::cos(th));
        out[kTheta] = th + w * t;
        return out;
    }

    Jacobians finite_difference_jacobians(const RobotState &s, const ControlInput &u, const DiscretizationParams &p,
                                          double h)
    {
        Jacobians fd;
        for (int j = 0; j < kNs; ++j)
        {
            RobotState sp = s, sm = s;
            sp[j] += h;
            sm[j] -= h;
            fd.A.col(j) = (integrate_step(sp, u, p) - integrate_step(sm, u, p)) / (2.0 * h);
        }
        for (int j = 0; j < kNu; ++j)
        {
            ControlInput up = u, um = u;
            up[j] += h;
            um[j] -= h;
            fd.B.col(j) = (integrate_step(s, up, p) - integrate_step(s, um, p)) / (2.0 * h);
        }
        return fd;
    }
} // namespace

TEST(ContinuousDynamics, AxisAlignedMotion)
{
    const RobotState ds = continuous_dynamics(make_state(0, 0, 0, 1, 0), make_input(0, 0));
    EXPECT_TRUE(ds.isApprox(make_state(1, 0, 0, 0, 0)));
}

TEST(ContinuousDynamics, HeadingPlusY)
{
    const RobotState ds = continuous_dynamics(make_state(0, 0, M_PI / 2, 2, 0), make_input(0, 0));
    EXPECT_NEAR(ds[kX], 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(ds[kY], 2.0);
    EXPECT_EQ(ds.tail<3>(), RobotState::Zero().tail<3>());
}

TEST(ContinuousDynamics, GeneralPoint)
{
    const RobotState ds = continuous_dynamics(make_state(1, 1, 0.3, 1.5, 0.2), make_input(0.1, -0.05));
    EXPECT_DOUBLE_EQ(ds[kX], 1.5 * std::cos(0.3));
    EXPECT_DOUBLE_EQ(ds[kY], 1.5 * std::sin(0.3));
    EXPECT_DOUBLE_EQ(ds[kTheta], 0.2);
    EXPECT_DOUBLE_EQ(ds[kV], 0.1);
    EXPECT_DOUBLE_EQ(ds[kOmega], -0.05);
}

TEST(IntegrateStep, StraightLineIsExact)
{
    const DiscretizationParams p{0.1, 1};
    const RobotState s = integrate_step(make_state(0, 0, 0, 1, 0), make_input(0, 0), p);
    EXPECT_NEAR((s - make_state(0.1, 0, 0, 1, 0)).norm(), 0.0, 1e-15);
}

TEST(IntegrateStep, PureRotation)
{
    const DiscretizationParams p{0.1, 1};
    const RobotState s = integrate_step(make_state(0, 0, 0, 0, 1), make_input(0, 0), p);
    EXPECT_NEAR((s - make_state(0, 0, 0.1, 0, 1)).norm(), 0.0, 1e-15);
}

TEST(IntegrateStep, MatchesAnalyticArc)
{
    const DiscretizationParams p{0.1, 1};
    const RobotState s0 = make_state(0, 0, 0, 1, 1);
    const RobotState s = integrate_step(s0, make_input(0, 0), p);
    EXPECT_LE((s - analytic_arc(s0, 0.1)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(IntegrateStep, ObservedOrderAgainstArc)
{
    const RobotState s0 = make_state(0.2, -0.1, 0.4, 1.0, 1.0);
    const double horizon = 2.0;
    std::vector<double> errors;
    for (double dt : {0.1, 0.05, 0.025})
    {
        const DiscretizationParams p{dt, 1};
        RobotState s = s0;
        const int steps = static_cast<int>(std::lround(horizon / dt));
        for (int i = 0; i < steps; ++i)
            s = integrate_step(s, make_input(0, 0), p);
        errors.push_back((s - analytic_arc(s0, horizon)).norm());
    }
    for (std::size_t i = 0; i + 1 < errors.size(); ++i)
        EXPECT_GE(std::log2(errors[i] / errors[i + 1]), 3.5);
}

TEST(IntegrateStep, SubstepsRefine)
{
    const RobotState s0 = make_state(0, 0, 0, 1, 2);
    const RobotState exact = analytic_arc(s0, 0.2);
    const double coarse = (integrate_step(s0, make_input(0, 0), {0.2, 1}) - exact).norm();
    const double fine = (integrate_step(s0, make_input(0, 0), {0.2, 4}) - exact).norm();
    EXPECT_LT(fine, coarse / 100.0);
}

TEST(DiscreteJacobians, ZeroStepIsIdentity)
{
    const Jacobians jac = discrete_jacobians(make_state(1, 2, 0.3, 0.7, -0.4), make_input(0.2, 0.1), {0.0, 1});
    EXPECT_EQ(jac.A, StateMatrix::Identity());
    EXPECT_EQ(jac.B, InputMatrix::Zero());
}

TEST(DiscreteJacobians, MatchFiniteDifferencesOnRandomPoints)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(-5.0, 5.0), ang(-M_PI, M_PI), vel(-2.0, 2.0), acc(-1.0, 1.0);
    const DiscretizationParams p{0.05, 1};
    double worst = 0.0;
    for (int i = 0; i < 100; ++i)
    {
        const RobotState s = make_state(pos(rng), pos(rng), ang(rng), vel(rng), vel(rng));
        const ControlInput u = make_input(acc(rng), acc(rng));
        const Jacobians jac = discrete_jacobians(s, u, p);
        const Jacobians fd = finite_difference_jacobians(s, u, p, 1e-6);
        worst = std::max({worst, (jac.A - fd.A).cwiseAbs().maxCoeff(), (jac.B - fd.B).cwiseAbs().maxCoeff()});
    }
    EXPECT_LE(worst, 1e-6);
}

TEST(DiscreteJacobians, SubstepsMatchFiniteDifferences)
{
    const DiscretizationParams p{0.1, 3};
    const RobotState s = make_state(0.5, -0.2, 1.1, 1.3, -0.8);
    const ControlInput u = make_input(0.4, -0.3);
    const Jacobians jac = discrete_jacobians(s, u, p);
    const Jacobians fd = finite_difference_jacobians(s, u, p, 1e-6);
    EXPECT_LE((jac.A - fd.A).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LE((jac.B - fd.B).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(DiscreteJacobians, LinearSubsystemRowsAreExact)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    const DiscretizationParams p{0.05, 1};
    const LinearSubsystem lin = linear_subsystem_matrices(p);
    for (int i = 0; i < 20; ++i)
    {
        const RobotState s = make_state(dist(rng), dist(rng), dist(rng), dist(rng), dist(rng));
        const Jacobians jac = discrete_jacobians(s, make_input(dist(rng), dist(rng)), p);
        EXPECT_EQ(jac.A(kV, kV), 1.0);
        EXPECT_EQ(jac.B(kV, kAcc), p.dt);
        // block upper-triangular: d s_lin' / d s_kin == 0
        EXPECT_EQ((jac.A.block<kNlin, kNkin>(kNkin, 0)), (Eigen::Matrix<double, kNlin, kNkin>::Zero()));
        EXPECT_EQ(Mat2(jac.A.bottomRightCorner<2, 2>()), lin.A_lin);
        EXPECT_EQ(Mat2(jac.B.bottomRows<2>()), lin.B_lin);
    }
}

TEST(LinearSubsystem, Matrices)
{
    const LinearSubsystem lin = linear_subsystem_matrices({0.05, 1});
    EXPECT_EQ(lin.A_lin, Mat2::Identity());
    EXPECT_EQ(lin.B_lin, 0.05 * Mat2::Identity());
    EXPECT_EQ(linear_subsystem_matrices({0.0, 1}).B_lin, Mat2::Zero());
}

TEST(DiffDriveResponse, FixedPoint)
{
    const Velocities out = diff_drive_response(1.0, 0.5, 1.0, 0.5, 0.05, {0.05});
    EXPECT_DOUBLE_EQ(out.v, 1.0);
    EXPECT_DOUBLE_EQ(out.omega, 0.5);
}

TEST(DiffDriveResponse, NoTrackingLimit)
{
    const Velocities out = diff_drive_response(0.3, -0.2, 1.0, 1.0, 0.05, {1e12});
    EXPECT_NEAR(out.v, 0.3, 1e-9);
    EXPECT_NEAR(out.omega, -0.2, 1e-9);
}

TEST(DiffDriveResponse, OneTimeConstant)
{
    const Velocities out = diff_drive_response(0.0, 0.0, 1.0, 1.0, 0.2, {0.2});
    EXPECT_NEAR(out.v, 1.0 - std::exp(-1.0), 1e-15);
    EXPECT_NEAR(out.v, 0.63212, 1e-5);
}

TEST(DiffDriveResponse, ContractsTowardCommand)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-3.0, 3.0), dts(0.0, 1.0);
    for (int i = 0; i < 200; ++i)
    {
        const double v_rob = dist(rng), v_cmd = dist(rng);
        const Velocities out = diff_drive_response(v_rob, 0.0, v_cmd, 0.0, dts(rng), {0.1});
        EXPECT_LE(std::abs(out.v - v_cmd), std::abs(v_rob - v_cmd) + 1e-15);
    }
}

TEST(DiscretizationParams, Validation)
{
    EXPECT_THROW((DiscretizationParams{0.0, 1}.validate()), ConfigError);
    EXPECT_THROW((DiscretizationParams{0.1, 0}.validate()), ConfigError);
    EXPECT_NO_THROW((DiscretizationParams{0.1, 2}.validate()));
}
