#include "zoro/model.hpp"

#include <cmath>

namespace zoro
{
    namespace
    {
        StateMatrix dynamics_state_jacobian(const RobotState &s)
        {
            StateMatrix J = StateMatrix::Zero();
            const double c = std::cos(s[kTheta]);
            const double sn = std::sin(s[kTheta]);
            J(kX, kTheta) = -s[kV] * sn;
            J(kX, kV) = c;
            J(kY, kTheta) = s[kV] * c;
            J(kY, kV) = sn;
            J(kTheta, kOmega) = 1.0;
            return J;
        }

        InputMatrix dynamics_input_jacobian()
        {
            InputMatrix J = InputMatrix::Zero();
            J(kV, kAcc) = 1.0;
            J(kOmega, kAlpha) = 1.0;
            return J;
        }

        RobotState rk4_step(const RobotState &s, const ControlInput &u, double h)
        {
            const RobotState k1 = continuous_dynamics(s, u);
            const RobotState k2 = continuous_dynamics(s + 0.5 * h * k1, u);
            const RobotState k3 = continuous_dynamics(s + 0.5 * h * k2, u);
            const RobotState k4 = continuous_dynamics(s + h * k3, u);
            return s + h * ((k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0);
        }

        // RK4 step together with its forward sensitivities.
        RobotState rk4_step_sens(const RobotState &s, const ControlInput &u, double h, Jacobians &jac)
        {
            const InputMatrix fu = dynamics_input_jacobian();

            const RobotState k1 = continuous_dynamics(s, u);
            const StateMatrix fs1 = dynamics_state_jacobian(s);
            const StateMatrix dk1_ds = fs1;
            const InputMatrix dk1_du = fu;

            const RobotState s2 = s + 0.5 * h * k1;
            const RobotState k2 = continuous_dynamics(s2, u);
            const StateMatrix fs2 = dynamics_state_jacobian(s2);
            const StateMatrix dk2_ds = fs2 * (StateMatrix::Identity() + 0.5 * h * dk1_ds);
            const InputMatrix dk2_du = fs2 * (0.5 * h * dk1_du) + fu;

            const RobotState s3 = s + 0.5 * h * k2;
            const RobotState k3 = continuous_dynamics(s3, u);
            const StateMatrix fs3 = dynamics_state_jacobian(s3);
            const StateMatrix dk3_ds = fs3 * (StateMatrix::Identity() + 0.5 * h * dk2_ds);
            const InputMatrix dk3_du = fs3 * (0.5 * h * dk2_du) + fu;

            const RobotState s4 = s + h * k3;
            const RobotState k4 = continuous_dynamics(s4, u);
            const StateMatrix fs4 = dynamics_state_jacobian(s4);
            const StateMatrix dk4_ds = fs4 * (StateMatrix::Identity() + h * dk3_ds);
            const InputMatrix dk4_du = fs4 * (h * dk3_du) + fu;

            jac.A = StateMatrix::Identity() + h * ((dk1_ds + 2.0 * dk2_ds + 2.0 * dk3_ds + dk4_ds) / 6.0);
            jac.B = h * ((dk1_du + 2.0 * dk2_du + 2.0 * dk3_du + dk4_du) / 6.0);
            return s + h * ((k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0);
        }
    } // namespace

    void DiscretizationParams::validate() const
    {
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw ConfigError("dt", "must be positive and finite");
        if (substeps < 1)
            throw ConfigError("substeps", "must be >= 1");
    }

    void DiffDriveParams::validate() const
    {
        if (!(tau > 0.0))
            throw ConfigError("tau", "must be positive");
    }

    RobotState continuous_dynamics(const RobotState &s, const ControlInput &u)
    {
        RobotState ds;
        ds << s[kV] * std::cos(s[kTheta]), s[kV] * std::sin(s[kTheta]), s[kOmega], u[kAcc], u[kAlpha];
        return ds;
    }

    RobotState integrate_for(const RobotState &s, const ControlInput &u, double duration, int substeps)
    {
        const double h = duration / substeps;
        RobotState out = s;
        for (int i = 0; i < substeps; ++i)
            out = rk4_step(out, u, h);
        return out;
    }

    RobotState integrate_step(const RobotState &s, const ControlInput &u, const DiscretizationParams &p)
    {
        return integrate_for(s, u, p.dt, p.substeps);
    }

    Jacobians discrete_jacobians(const RobotState &s, const ControlInput &u, const DiscretizationParams &p)
    {
        const double h = p.dt / p.substeps;
        Jacobians total;
        RobotState cur = s;
        for (int i = 0; i < p.substeps; ++i)
        {
            Jacobians step;
            cur = rk4_step_sens(cur, u, h, step);
            if (i == 0)
            {
                total = step;
            }
            else
            {
                total.B = step.A * total.B + step.B;
                total.A = step.A * total.A;
            }
        }
        return total;
    }

    LinearSubsystem linear_subsystem_matrices(const DiscretizationParams &p)
    {
        // v' = a and omega' = alpha integrate exactly under RK4 with
        // piecewise-constant input.
        return {Mat2::Identity(), p.dt * Mat2::Identity()};
    }

    Velocities diff_drive_response(double v_rob, double omega_rob, double v_cmd, double omega_cmd, double dt,
                                   const DiffDriveParams &dd)
    {
        const double decay = std::exp(-dt / dd.tau);
        return {v_cmd + (v_rob - v_cmd) * decay, omega_cmd + (omega_rob - omega_cmd) * decay};
    }

} // namespace zoro
