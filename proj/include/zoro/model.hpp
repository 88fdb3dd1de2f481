#pragma once

#include "zoro/types.hpp"

namespace zoro
{
    struct DiscretizationParams
    {
        double dt = 0.05;
        int substeps = 1;   // RK4 substeps per interval

        void validate() const;
    };

    struct DiffDriveParams
    {
        double tau = 0.05;  // velocity-controller time constant [s]

        void validate() const;
    };

    struct Jacobians
    {
        StateMatrix A = StateMatrix::Identity();
        InputMatrix B = InputMatrix::Zero();
    };

    struct LinearSubsystem
    {
        Mat2 A_lin;
        Mat2 B_lin;
    };

    // ds/dt = (v cos(theta), v sin(theta), omega, a, alpha)
    RobotState continuous_dynamics(const RobotState &s, const ControlInput &u);

    // One sampling interval of classical RK4 with `substeps` equal substeps and
    // piecewise-constant input.
    RobotState integrate_step(const RobotState &s, const ControlInput &u, const DiscretizationParams &p);

    // Integrates over an arbitrary duration (e.g. a computational delay) using
    // the same RK4 scheme. duration == p.dt gives integrate_step bit-for-bit.
    RobotState integrate_for(const RobotState &s, const ControlInput &u, double duration, int substeps);

    /// Exact sensitivities of integrate_step, obtained by forward differentiation
    /// through the RK4 stages. The (v, omega) rows are exactly [0 | I] in A and
    /// dt*I in B for substeps == 1.
    Jacobians discrete_jacobians(const RobotState &s, const ControlInput &u, const DiscretizationParams &p);

    LinearSubsystem linear_subsystem_matrices(const DiscretizationParams &p);

    struct Velocities
    {
        double v;
        double omega;
    };

    // First-order tracking of the inner differential-drive controller.
    Velocities diff_drive_response(double v_rob, double omega_rob, double v_cmd, double omega_cmd, double dt,
                                   const DiffDriveParams &dd);

} // namespace zoro
