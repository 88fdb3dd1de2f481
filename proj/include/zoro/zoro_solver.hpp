#pragma once

#include "zoro/model.hpp"
#include "zoro/ocp.hpp"
#include "zoro/qp.hpp"
#include "zoro/tube.hpp"

#include <optional>
#include <vector>

namespace zoro
{
    struct ZoroSettings
    {
        int qp_iterations_per_sample = 2;
        int backoff_updates_per_sample = 2;
        int max_outer_iterations = 50;
        int max_inner_iterations = 100;
        double tol_stationarity = 1e-10;
        double tol_feasibility = 1e-10;
        double levenberg = 1e-8;
        double slack_penalty_l1 = 1e4;
        double slack_penalty_l2 = 1e4;
        int qp_max_iterations = 2000;

        void validate() const;
    };

    enum class TubeKind
    {
        kEllipsoidal,
        kScalar,
    };

    /// Everything the backoff computation needs besides the trajectory.
    struct RobustModel
    {
        TubeKind kind = TubeKind::kEllipsoidal;
        FeedbackGain K;
        NoiseModel W;
        ShapeMatrix sigma0 = ShapeMatrix::Zero();
        ScalarTube scalar;  // used when kind == kScalar

        static RobustModel nominal() { return {}; }
    };

    /// Per-stage row vectors; stage k has rows_at(k).size() entries.
    using StageVectors = std::vector<Eigen::VectorXd>;

    struct KktStats
    {
        double stationarity = 0.0;
        double feasibility = 0.0;
        double complementarity = 0.0;
    };

    struct OcpSolution
    {
        std::vector<RobotState> states;       // N + 1
        std::vector<ControlInput> inputs;     // N
        std::vector<RobotState> dyn_multipliers;  // N
        StageVectors multipliers;             // inequality rows, >= 0
        StageVectors backoffs;
        StageVectors slacks;
        std::vector<ShapeMatrix> tube;        // N + 1
        KktStats kkt;
        int iterations = 0;       // SQP (QP) iterations
        int qp_iterations = 0;    // active-set iterations summed over QPs
        int outer_iterations = 0;
        bool converged = true;
        double last_step_norm = 0.0;

        int horizon() const { return static_cast<int>(inputs.size()); }
        const ControlInput &command() const { return inputs.front(); }
        bool collision_active(const ConstraintBlocks &blocks) const;
    };

    /// Reference window as the initial guess with zero multipliers; the first
    /// state is replaced by s0.
    OcpSolution cold_start(const RobotState &s0, const ReferenceWindow &window, const OcpSpec &spec);

    /// Shift-by-one warm start; the last stage is duplicated.
    OcpSolution shift_solution(const OcpSolution &prev);

    struct BackoffResult
    {
        StageVectors backoffs;
        std::vector<ShapeMatrix> tube;
    };

    std::vector<Jacobians> trajectory_jacobians(const std::vector<RobotState> &states,
                                                const std::vector<ControlInput> &inputs, const DiscretizationParams &p);

    BackoffResult update_backoffs(const std::vector<RobotState> &states, const std::vector<ControlInput> &inputs,
                                  const OcpSpec &spec, const RobustModel &model);

    /// One inequality row of the structured QP:
    ///   grad_local . [ds_k; du_k] + coupling . dz <= -value + slack (soft rows)
    struct QpRow
    {
        int stage = 0;
        int index = 0;        // position within rows_at(stage)
        Vec7 grad_local = Vec7::Zero();
        double value = 0.0;   // h(z) + backoff at the linearization point
        bool soft = false;
    };

    /// Gauss-Newton QP around a linearization point, before condensing.
    struct QProblem
    {
        int N = 0;
        std::vector<RobotState> states;
        std::vector<ControlInput> inputs;
        RobotState init_delta = RobotState::Zero();   // s_init - s_0
        std::vector<Jacobians> jacobians;             // N
        std::vector<RobotState> residuals;            // psi(s_k, u_k) - s_{k+1}
        std::vector<StateMatrix> state_hessians;      // N + 1
        std::vector<Mat2> input_hessians;             // N
        std::vector<RobotState> state_gradients;      // N + 1
        std::vector<ControlInput> input_gradients;    // N
        std::vector<QpRow> rows;
        // optional dense row gradients over the full z (rows x nz), added to grad_local
        Eigen::MatrixXd coupling;
    };

    inline int z_size(int N) { return (kNs + kNu) * N + kNs; }
    inline int z_state_offset(int k) { return (kNs + kNu) * k; }
    inline int z_input_offset(int k) { return (kNs + kNu) * k + kNs; }

    Eigen::VectorXd stack_z(const std::vector<RobotState> &states, const std::vector<ControlInput> &inputs);
    void unstack_z(const Eigen::VectorXd &z, std::vector<RobotState> &states, std::vector<ControlInput> &inputs);

    QProblem build_qp(const std::vector<RobotState> &states, const std::vector<ControlInput> &inputs,
                      const RobotState &s_init, const OcpSpec &spec, const ReferenceWindow &window,
                      const StageVectors &backoffs);

    struct QpStep
    {
        std::vector<RobotState> ds;       // N + 1
        std::vector<ControlInput> du;     // N
        StageVectors multipliers;
        StageVectors slacks;
        int qp_iterations = 0;
        QpStatus status = QpStatus::kOptimal;
        double step_norm = 0.0;           // inf-norm over dz
    };

    /// Condenses the structured QP onto the inputs (plus slacks for soft rows)
    /// and solves it with the dense active-set method.
    QpStep solve_qp(const QProblem &qp, const OcpSpec &spec, const ZoroSettings &settings);

    /// Evaluates the KKT residuals of the robustified problem at the iterate in
    /// `sol` (which must carry multipliers and backoffs). `backoff_jacobian`,
    /// when given, adds d(backoff)/dz to the row gradients (exact robust problem).
    KktStats evaluate_kkt(const OcpSolution &sol, const RobotState &s_init, const OcpSpec &spec,
                          const ReferenceWindow &window, const Eigen::MatrixXd *backoff_jacobian = nullptr,
                          std::vector<RobotState> *dyn_multipliers = nullptr);

    /// Real-time step: alternates backoff updates and single QP iterations
    /// starting from `prev` as the linearization point.
    OcpSolution zoro_step(const RobotState &s_init, const OcpSolution &prev, const ZoroSettings &settings,
                          const OcpSpec &spec, const ReferenceWindow &window, const RobustModel &model);

    /// Alternates solving the fixed-backoff problem to stationarity with
    /// backoff updates until both settle. Returns the last iterate with
    /// converged == false when max_outer_iterations is exhausted.
    OcpSolution zoro_solve_to_convergence(const RobotState &s_init, const ZoroSettings &settings,
                                          const OcpSpec &spec, const ReferenceWindow &window,
                                          const RobustModel &model,
                                          const std::optional<OcpSolution> &initial_guess = std::nullopt);

    /// Jacobian of all backoffs (rows stacked stage by stage) w.r.t. z by
    /// central finite differences through the Jacobian recomputation and the
    /// tube propagation.
    Eigen::MatrixXd backoff_jacobian(const std::vector<RobotState> &states, const std::vector<ControlInput> &inputs,
                                     const OcpSpec &spec, const RobustModel &model, double step = 1e-6);

    struct DisregardedGradient
    {
        Eigen::VectorXd gradient;  // over z
        double norm = 0.0;         // inf-norm
    };

    /// Lagrangian-gradient term ignored by fixing the backoffs:
    /// sum over rows of mu * d(backoff)/dz.
    DisregardedGradient disregarded_gradient(const OcpSolution &sol, const OcpSpec &spec, const RobustModel &model,
                                             double step = 1e-6);

    Eigen::VectorXd stack_rows(const StageVectors &v);
    int total_rows(const ConstraintBlocks &blocks, int N);

    double objective_value(const OcpSolution &sol, const ReferenceWindow &window, const OcpSpec &spec);

} // namespace zoro
