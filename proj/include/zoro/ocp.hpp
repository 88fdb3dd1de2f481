#pragma once

#include "zoro/model.hpp"
#include "zoro/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace zoro
{
    struct Obstacle
    {
        double cx = 0.0;
        double cy = 0.0;
        double radius = 0.0;
    };

    /// Sampled state/input reference. For closed paths (`loop`), sample i maps
    /// to i mod P with P = inputs.size(), and the heading is continued by the
    /// per-lap heading change so that windows stay unwrapped.
    struct ReferenceTrajectory
    {
        double dt = 0.05;
        std::vector<RobotState> states;
        std::vector<ControlInput> inputs;
        bool loop = false;

        // max_k |psi(s_k, u_k) - s_{k+1}|_inf over consecutive samples
        double consistency_residual(const DiscretizationParams &p) const;
    };

    struct ReferenceWindow
    {
        std::vector<RobotState> states;   // N + 1
        std::vector<ControlInput> inputs; // N
    };

    struct Weights
    {
        StateMatrix Q = StateMatrix::Identity();
        Mat2 R = Mat2::Identity();
        StateMatrix Q_e = StateMatrix::Identity();
    };

    struct Bounds
    {
        double v_min = -1.0, v_max = 1.0;
        double omega_min = -1.0, omega_max = 1.0;
        double a_min = -1.0, a_max = 1.0;
        double alpha_min = -1.0, alpha_max = 1.0;

        void validate() const;
    };

    struct OcpSpec
    {
        int N = 20;
        DiscretizationParams disc;
        Weights weights;
        Bounds bounds;
        std::vector<Obstacle> obstacles;
        double robot_radius = 0.5;
        bool apply_accel_backoff = false;

        void validate() const;
    };

    ReferenceWindow reference_window(const ReferenceTrajectory &ref, int t_index, int N);

    /// Wraps an angle difference into (-pi, pi].
    double shortest_angle(double delta);

    // s - s_ref with the heading component taken as shortest-angle difference
    RobotState tracking_error(const RobotState &s, const RobotState &s_ref);

    double stage_cost(const RobotState &s, const ControlInput &u, const RobotState &s_ref, const ControlInput &u_ref,
                      const Weights &w);
    double terminal_cost(const RobotState &s, const RobotState &s_ref, const Weights &w);

    struct CollisionEval
    {
        double h = 0.0;   // (r_obs + r) - distance; feasible iff h <= 0
        RobotState grad = RobotState::Zero();
        bool singular = false;
    };

    /// Collision constraint in distance form. When the robot centre is within
    /// 1e-9 of the obstacle centre the gradient direction is taken from
    /// `fallback_direction` (unit vector in the plane).
    CollisionEval collision_constraint(const RobotState &s, const Obstacle &obs, double robot_radius,
                                       const Eigen::Vector2d &fallback_direction = Eigen::Vector2d(1.0, 0.0));

    enum class RowKind
    {
        kAffineLin,
        kCollision,
    };

    /// One inequality row h(s, u) <= 0. Affine rows: h = gradient . [s; u] - offset.
    struct ConstraintRow
    {
        RowKind kind = RowKind::kAffineLin;
        std::string label;
        Vec7 gradient = Vec7::Zero();
        double offset = 0.0;
        int obstacle = -1;
        bool acts_on_input() const { return gradient.tail<kNu>().squaredNorm() > 0.0; }
    };

    struct ConstraintBlocks
    {
        std::vector<ConstraintRow> stage;     // rows for k = 0..N-1
        std::vector<ConstraintRow> terminal;  // rows for k = N (state-only)

        const std::vector<ConstraintRow> &rows_at(int k, int N) const { return k < N ? stage : terminal; }
    };

    ConstraintBlocks constraint_blocks(const OcpSpec &spec);

    struct RowEval
    {
        double h = 0.0;
        Vec7 grad = Vec7::Zero();
    };

    RowEval evaluate_row(const ConstraintRow &row, const OcpSpec &spec, const RobotState &s, const ControlInput &u);

    // Signed distance between the robot boundary and the obstacle boundary.
    double clearance(const RobotState &s, const Obstacle &obs, double robot_radius);

} // namespace zoro
