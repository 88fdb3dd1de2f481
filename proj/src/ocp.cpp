#include "zoro/ocp.hpp"

#include <cmath>
#include <numbers>

namespace zoro
{
    double ReferenceTrajectory::consistency_residual(const DiscretizationParams &p) const
    {
        double worst = 0.0;
        const std::size_t n = std::min(inputs.size(), states.empty() ? 0 : states.size() - 1);
        for (std::size_t k = 0; k < n; ++k)
        {
            const RobotState next = integrate_step(states[k], inputs[k], p);
            worst = std::max(worst, (next - states[k + 1]).cwiseAbs().maxCoeff());
        }
        return worst;
    }

    void Bounds::validate() const
    {
        if (!(v_min < v_max))
            throw ConfigError("bounds.v", "min must be < max");
        if (!(omega_min < omega_max))
            throw ConfigError("bounds.omega", "min must be < max");
        if (!(a_min < a_max))
            throw ConfigError("bounds.a", "min must be < max");
        if (!(alpha_min < alpha_max))
            throw ConfigError("bounds.alpha", "min must be < max");
    }

    void OcpSpec::validate() const
    {
        if (N < 1)
            throw ConfigError("N", "must be >= 1");
        if (!(robot_radius > 0.0))
            throw ConfigError("robot_radius", "must be positive");
        disc.validate();
        bounds.validate();
        for (std::size_t i = 0; i < obstacles.size(); ++i)
        {
            if (!(obstacles[i].radius >= 0.0))
                throw ConfigError("obstacles[" + std::to_string(i) + "].radius", "must be >= 0");
        }
    }

    ReferenceWindow reference_window(const ReferenceTrajectory &ref, int t_index, int N)
    {
        if (ref.states.empty())
            throw ConfigError("reference", "empty reference trajectory");
        if (t_index < 0)
            throw ConfigError("reference", "negative time index");

        ReferenceWindow win;
        win.states.reserve(static_cast<std::size_t>(N + 1));
        win.inputs.reserve(static_cast<std::size_t>(N));

        if (ref.loop && !ref.inputs.empty() && ref.states.size() > ref.inputs.size())
        {
            const int period = static_cast<int>(ref.inputs.size());
            const double lap_heading =
                ref.states[static_cast<std::size_t>(period)][kTheta] - ref.states.front()[kTheta];
            for (int k = 0; k <= N; ++k)
            {
                const int i = t_index + k;
                RobotState s = ref.states[static_cast<std::size_t>(i % period)];
                s[kTheta] += (i / period) * lap_heading;
                win.states.push_back(s);
                if (k < N)
                    win.inputs.push_back(ref.inputs[static_cast<std::size_t>(i % period)]);
            }
            return win;
        }

        const int last = static_cast<int>(ref.states.size()) - 1;
        for (int k = 0; k <= N; ++k)
        {
            const int i = t_index + k;
            win.states.push_back(ref.states[static_cast<std::size_t>(std::min(i, last))]);
            if (k < N)
            {
                if (i < static_cast<int>(ref.inputs.size()) && i < last)
                    win.inputs.push_back(ref.inputs[static_cast<std::size_t>(i)]);
                else
                    win.inputs.push_back(ControlInput::Zero());
            }
        }
        return win;
    }

    double shortest_angle(double delta)
    {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        double wrapped = std::remainder(delta, two_pi);
        if (wrapped <= -std::numbers::pi)
            wrapped += two_pi;
        return wrapped;
    }

    RobotState tracking_error(const RobotState &s, const RobotState &s_ref)
    {
        RobotState e = s - s_ref;
        e[kTheta] = shortest_angle(e[kTheta]);
        return e;
    }

    double stage_cost(const RobotState &s, const ControlInput &u, const RobotState &s_ref, const ControlInput &u_ref,
                      const Weights &w)
    {
        const RobotState e = tracking_error(s, s_ref);
        const ControlInput du = u - u_ref;
        return du.dot(w.R * du) + e.dot(w.Q * e);
    }

    double terminal_cost(const RobotState &s, const RobotState &s_ref, const Weights &w)
    {
        const RobotState e = tracking_error(s, s_ref);
        return e.dot(w.Q_e * e);
    }

    CollisionEval collision_constraint(const RobotState &s, const Obstacle &obs, double robot_radius,
                                       const Eigen::Vector2d &fallback_direction)
    {
        const double dx = s[kX] - obs.cx;
        const double dy = s[kY] - obs.cy;
        const double dist = std::hypot(dx, dy);
        CollisionEval out;
        out.h = (obs.radius + robot_radius) - dist;
        Eigen::Vector2d dir;
        if (dist < 1e-9)
        {
            out.singular = true;
            dir = fallback_direction.normalized();
        }
        else
        {
            dir << dx / dist, dy / dist;
        }
        out.grad[kX] = -dir[0];
        out.grad[kY] = -dir[1];
        return out;
    }

    double clearance(const RobotState &s, const Obstacle &obs, double robot_radius)
    {
        return std::hypot(s[kX] - obs.cx, s[kY] - obs.cy) - obs.radius - robot_radius;
    }

    namespace
    {
        ConstraintRow box_row(const std::string &label, int index, double sign, double bound)
        {
            ConstraintRow row;
            row.kind = RowKind::kAffineLin;
            row.label = label;
            row.gradient[index] = sign;
            row.offset = sign * bound;
            return row;
        }

        void append_state_boxes(std::vector<ConstraintRow> &rows, const Bounds &b)
        {
            rows.push_back(box_row("v_max", kV, 1.0, b.v_max));
            rows.push_back(box_row("v_min", kV, -1.0, b.v_min));
            rows.push_back(box_row("omega_max", kOmega, 1.0, b.omega_max));
            rows.push_back(box_row("omega_min", kOmega, -1.0, b.omega_min));
        }

        void append_collisions(std::vector<ConstraintRow> &rows, const OcpSpec &spec)
        {
            for (std::size_t j = 0; j < spec.obstacles.size(); ++j)
            {
                ConstraintRow row;
                row.kind = RowKind::kCollision;
                row.label = "obstacle_" + std::to_string(j);
                row.obstacle = static_cast<int>(j);
                rows.push_back(row);
            }
        }
    } // namespace

    ConstraintBlocks constraint_blocks(const OcpSpec &spec)
    {
        ConstraintBlocks blocks;
        const Bounds &b = spec.bounds;
        append_state_boxes(blocks.stage, b);
        blocks.stage.push_back(box_row("a_max", kNs + kAcc, 1.0, b.a_max));
        blocks.stage.push_back(box_row("a_min", kNs + kAcc, -1.0, b.a_min));
        blocks.stage.push_back(box_row("alpha_max", kNs + kAlpha, 1.0, b.alpha_max));
        blocks.stage.push_back(box_row("alpha_min", kNs + kAlpha, -1.0, b.alpha_min));
        append_collisions(blocks.stage, spec);

        append_state_boxes(blocks.terminal, b);
        append_collisions(blocks.terminal, spec);
        return blocks;
    }

    RowEval evaluate_row(const ConstraintRow &row, const OcpSpec &spec, const RobotState &s, const ControlInput &u)
    {
        RowEval out;
        if (row.kind == RowKind::kAffineLin)
        {
            out.grad = row.gradient;
            out.h = row.gradient.head<kNs>().dot(s) + row.gradient.tail<kNu>().dot(u) - row.offset;
            return out;
        }
        const CollisionEval c = collision_constraint(s, spec.obstacles[static_cast<std::size_t>(row.obstacle)],
                                                     spec.robot_radius);
        out.h = c.h;
        out.grad.head<kNs>() = c.grad;
        return out;
    }

} // namespace zoro
