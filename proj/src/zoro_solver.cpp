#include "zoro/zoro_solver.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace zoro
{
    void ZoroSettings::validate() const
    {
        if (qp_iterations_per_sample < 1)
            throw ConfigError("controller.qp_iterations_per_sample", "must be >= 1");
        if (backoff_updates_per_sample < 1)
            throw ConfigError("controller.backoff_updates_per_sample", "must be >= 1");
        if (max_outer_iterations < 1)
            throw ConfigError("controller.max_outer_iterations", "must be >= 1");
        if (max_inner_iterations < 1)
            throw ConfigError("controller.max_inner_iterations", "must be >= 1");
        if (!(tol_stationarity > 0.0))
            throw ConfigError("controller.tol_stationarity", "must be positive");
        if (!(tol_feasibility > 0.0))
            throw ConfigError("controller.tol_feasibility", "must be positive");
        if (!(levenberg >= 0.0))
            throw ConfigError("controller.levenberg", "must be >= 0");
        if (!(slack_penalty_l1 >= 0.0))
            throw ConfigError("controller.slack_penalty_l1", "must be >= 0");
        if (!(slack_penalty_l2 > 0.0))
            throw ConfigError("controller.slack_penalty_l2", "must be positive");
    }

    bool OcpSolution::collision_active(const ConstraintBlocks &blocks) const
    {
        const int N = horizon();
        for (int k = 0; k <= N && k < static_cast<int>(multipliers.size()); ++k)
        {
            const auto &rows = blocks.rows_at(k, N);
            for (std::size_t i = 0; i < rows.size(); ++i)
            {
                if (rows[i].kind == RowKind::kCollision && multipliers[static_cast<std::size_t>(k)][static_cast<Eigen::Index>(i)] > 0.0)
                    return true;
            }
        }
        return false;
    }

    namespace
    {
        StageVectors zero_stage_vectors(const ConstraintBlocks &blocks, int N)
        {
            StageVectors out;
            out.reserve(static_cast<std::size_t>(N + 1));
            for (int k = 0; k <= N; ++k)
                out.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(blocks.rows_at(k, N).size())));
            return out;
        }

        ControlInput input_at(const std::vector<ControlInput> &inputs, int k)
        {
            return k < static_cast<int>(inputs.size()) ? inputs[static_cast<std::size_t>(k)] : ControlInput::Zero();
        }

        BackoffResult compute_backoffs(const std::vector<RobotState> &states, const std::vector<ControlInput> &inputs,
                                       const std::vector<Jacobians> &jacs, const ConstraintBlocks &blocks,
                                       const OcpSpec &spec, const RobustModel &model)
        {
            const int N = static_cast<int>(inputs.size());
            BackoffResult out;
            if (model.kind == TubeKind::kEllipsoidal)
            {
                out.tube = propagate_trajectory(model.sigma0, jacs, model.K, model.W);
            }
            else
            {
                out.tube.reserve(static_cast<std::size_t>(N + 1));
                for (int k = 0; k <= N; ++k)
                {
                    const double eps = scalar_tube_radius(k, model.scalar);
                    out.tube.push_back(eps * eps * ShapeMatrix::Identity());
                }
            }

            out.backoffs.reserve(static_cast<std::size_t>(N + 1));
            for (int k = 0; k <= N; ++k)
            {
                const auto &rows = blocks.rows_at(k, N);
                Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()));
                const RobotState &s = states[static_cast<std::size_t>(k)];
                const ControlInput u = input_at(inputs, k);
                const ShapeMatrix &sigma = out.tube[static_cast<std::size_t>(k)];
                for (std::size_t i = 0; i < rows.size(); ++i)
                {
                    const ConstraintRow &row = rows[i];
                    if (row.acts_on_input() && !spec.apply_accel_backoff)
                        continue;
                    const RowEval ev = evaluate_row(row, spec, s, u);
                    double b = 0.0;
                    if (model.kind == TubeKind::kEllipsoidal)
                    {
                        b = k < N ? backoff(ev.grad, sigma, model.K) : terminal_backoff(ev.grad.head<kNs>(), sigma);
                    }
                    else
                    {
                        const RobotState l = k < N ? lifted_gradient(ev.grad, model.K) : RobotState(ev.grad.head<kNs>());
                        b = scalar_tube_radius(k, model.scalar) * l.norm();
                    }
                    beta[static_cast<Eigen::Index>(i)] = b;
                }
                out.backoffs.push_back(std::move(beta));
            }
            return out;
        }

        double max_abs_difference(const StageVectors &a, const StageVectors &b)
        {
            double worst = 0.0;
            for (std::size_t k = 0; k < a.size() && k < b.size(); ++k)
            {
                if (a[k].size() > 0)
                    worst = std::max(worst, (a[k] - b[k]).cwiseAbs().maxCoeff());
            }
            return worst;
        }

        void apply_step(OcpSolution &sol, const QpStep &step)
        {
            for (std::size_t k = 0; k < sol.states.size(); ++k)
                sol.states[k] += step.ds[k];
            for (std::size_t k = 0; k < sol.inputs.size(); ++k)
                sol.inputs[k] += step.du[k];
            sol.multipliers = step.multipliers;
            sol.slacks = step.slacks;
            sol.iterations += 1;
            sol.qp_iterations += step.qp_iterations;
            sol.last_step_norm = step.step_norm;
        }

        QpStep checked_qp_step(const QProblem &qp, const OcpSpec &spec, const ZoroSettings &settings)
        {
            QpStep step = solve_qp(qp, spec, settings);
            if (step.status == QpStatus::kInfeasible)
                throw SolverError(SolverError::Kind::kInfeasible, "QP infeasible after slack relaxation");
            if (step.status == QpStatus::kMaxIterations)
                throw SolverError(SolverError::Kind::kMaxIterations, "QP max-iterations");
            if (step.status == QpStatus::kNotConvex)
                throw SolverError(SolverError::Kind::kDegenerate, "QP Hessian not positive definite");
            return step;
        }
    } // namespace

    Eigen::VectorXd stack_rows(const StageVectors &v)
    {
        Eigen::Index n = 0;
        for (const auto &x : v)
            n += x.size();
        Eigen::VectorXd out(n);
        Eigen::Index pos = 0;
        for (const auto &x : v)
        {
            out.segment(pos, x.size()) = x;
            pos += x.size();
        }
        return out;
    }

    int total_rows(const ConstraintBlocks &blocks, int N)
    {
        return static_cast<int>(blocks.stage.size()) * N + static_cast<int>(blocks.terminal.size());
    }

    Eigen::VectorXd stack_z(const std::vector<RobotState> &states, const std::vector<ControlInput> &inputs)
    {
        const int N = static_cast<int>(inputs.size());
        Eigen::VectorXd z(z_size(N));
        for (int k = 0; k < N; ++k)
        {
            z.segment<kNs>(z_state_offset(k)) = states[static_cast<std::size_t>(k)];
            z.segment<kNu>(z_input_offset(k)) = inputs[static_cast<std::size_t>(k)];
        }
        z.segment<kNs>(z_state_offset(N)) = states[static_cast<std::size_t>(N)];
        return z;
    }

    void unstack_z(const Eigen::VectorXd &z, std::vector<RobotState> &states, std::vector<ControlInput> &inputs)
    {
        const int N = static_cast<int>((z.size() - kNs) / (kNs + kNu));
        states.resize(static_cast<std::size_t>(N + 1));
        inputs.resize(static_cast<std::size_t>(N));
        for (int k = 0; k < N; ++k)
        {
            states[static_cast<std::size_t>(k)] = z.segment<kNs>(z_state_offset(k));
            inputs[static_cast<std::size_t>(k)] = z.segment<kNu>(z_input_offset(k));
        }
        states[static_cast<std::size_t>(N)] = z.segment<kNs>(z_state_offset(N));
    }

    OcpSolution cold_start(const RobotState &s0, const ReferenceWindow &window, const OcpSpec &spec)
    {
        (void)s0;
        const int N = static_cast<int>(window.inputs.size());
        const ConstraintBlocks blocks = constraint_blocks(spec);
        OcpSolution sol;
        sol.states = window.states;
        sol.inputs = window.inputs;
        sol.dyn_multipliers.assign(static_cast<std::size_t>(N), RobotState::Zero());
        sol.multipliers = zero_stage_vectors(blocks, N);
        sol.backoffs = zero_stage_vectors(blocks, N);
        sol.slacks = zero_stage_vectors(blocks, N);
        sol.tube.assign(static_cast<std::size_t>(N + 1), ShapeMatrix::Zero());
        return sol;
    }

    OcpSolution shift_solution(const OcpSolution &prev)
    {
        OcpSolution out = prev;
        auto shift = [](auto &v) {
            if (v.size() < 2)
                return;
            for (std::size_t k = 0; k + 1 < v.size(); ++k)
                v[k] = v[k + 1];
        };
        shift(out.states);
        shift(out.inputs);
        shift(out.dyn_multipliers);
        shift(out.tube);
        // stage and terminal rows differ in layout; only shift stage rows
        const std::size_t N = out.inputs.size();
        for (std::size_t k = 0; k + 2 <= N; ++k)
        {
            out.multipliers[k] = prev.multipliers[k + 1];
            out.backoffs[k] = prev.backoffs[k + 1];
            out.slacks[k] = prev.slacks[k + 1];
        }
        out.iterations = 0;
        out.qp_iterations = 0;
        out.outer_iterations = 0;
        return out;
    }

    std::vector<Jacobians> trajectory_jacobians(const std::vector<RobotState> &states,
                                                const std::vector<ControlInput> &inputs, const DiscretizationParams &p)
    {
        std::vector<Jacobians> jacs;
        jacs.reserve(inputs.size());
        for (std::size_t k = 0; k < inputs.size(); ++k)
            jacs.push_back(discrete_jacobians(states[k], inputs[k], p));
        return jacs;
    }

    BackoffResult update_backoffs(const std::vector<RobotState> &states, const std::vector<ControlInput> &inputs,
                                  const OcpSpec &spec, const RobustModel &model)
    {
        const ConstraintBlocks blocks = constraint_blocks(spec);
        std::vector<Jacobians> jacs;
        if (model.kind == TubeKind::kEllipsoidal)
            jacs = trajectory_jacobians(states, inputs, spec.disc);
        BackoffResult out = compute_backoffs(states, inputs, jacs, blocks, spec, model);
        for (const auto &sigma : out.tube)
        {
            if (!is_psd(sigma))
                throw SolverError(SolverError::Kind::kPsdViolation, "propagated tube is not PSD");
        }
        return out;
    }

    QProblem build_qp(const std::vector<RobotState> &states, const std::vector<ControlInput> &inputs,
                      const RobotState &s_init, const OcpSpec &spec, const ReferenceWindow &window,
                      const StageVectors &backoffs)
    {
        const int N = static_cast<int>(inputs.size());
        QProblem qp;
        qp.N = N;
        qp.states = states;
        qp.inputs = inputs;
        qp.init_delta = s_init - states.front();

        qp.jacobians.reserve(static_cast<std::size_t>(N));
        qp.residuals.reserve(static_cast<std::size_t>(N));
        for (int k = 0; k < N; ++k)
        {
            const auto ku = static_cast<std::size_t>(k);
            qp.jacobians.push_back(discrete_jacobians(states[ku], inputs[ku], spec.disc));
            qp.residuals.push_back(integrate_step(states[ku], inputs[ku], spec.disc) - states[ku + 1]);
        }

        const Weights &w = spec.weights;
        for (int k = 0; k <= N; ++k)
        {
            const auto ku = static_cast<std::size_t>(k);
            const StateMatrix &Q = k < N ? w.Q : w.Q_e;
            const RobotState e = tracking_error(states[ku], window.states[ku]);
            qp.state_hessians.push_back(2.0 * Q);
            qp.state_gradients.push_back(2.0 * Q * e);
            if (k < N)
            {
                qp.input_hessians.push_back(2.0 * w.R);
                qp.input_gradients.push_back(2.0 * w.R * (inputs[ku] - window.inputs[ku]));
            }
        }

        const ConstraintBlocks blocks = constraint_blocks(spec);
        for (int k = 0; k <= N; ++k)
        {
            const auto &rows = blocks.rows_at(k, N);
            const RobotState &s = states[static_cast<std::size_t>(k)];
            const ControlInput u = input_at(inputs, k);
            for (std::size_t i = 0; i < rows.size(); ++i)
            {
                const RowEval ev = evaluate_row(rows[i], spec, s, u);
                QpRow row;
                row.stage = k;
                row.index = static_cast<int>(i);
                row.grad_local = ev.grad;
                row.value = ev.h + backoffs[static_cast<std::size_t>(k)][static_cast<Eigen::Index>(i)];
                row.soft = rows[i].kind == RowKind::kCollision;
                qp.rows.push_back(row);
            }
        }
        return qp;
    }

    QpStep solve_qp(const QProblem &qp, const OcpSpec &spec, const ZoroSettings &settings)
    {
        const int N = qp.N;
        const int nu = kNu * N;
        const int nz = z_size(N);
        const bool coupled = qp.coupling.rows() > 0;

        // ds_k = c_k + G_k du
        std::vector<RobotState> c(static_cast<std::size_t>(N + 1));
        std::vector<Eigen::MatrixXd> G(static_cast<std::size_t>(N + 1));
        c[0] = qp.init_delta;
        G[0] = Eigen::MatrixXd::Zero(kNs, nu);
        for (int k = 0; k < N; ++k)
        {
            const auto ku = static_cast<std::size_t>(k);
            const Jacobians &jac = qp.jacobians[ku];
            c[ku + 1] = jac.A * c[ku] + qp.residuals[ku];
            G[ku + 1].noalias() = jac.A * G[ku];
            G[ku + 1].block(0, kNu * k, kNs, kNu) += jac.B;
        }

        // full map dz = T du + cz, only needed for coupled rows
        Eigen::MatrixXd T;
        Eigen::VectorXd cz;
        if (coupled)
        {
            T = Eigen::MatrixXd::Zero(nz, nu);
            cz = Eigen::VectorXd::Zero(nz);
            for (int k = 0; k <= N; ++k)
            {
                T.block(z_state_offset(k), 0, kNs, nu) = G[static_cast<std::size_t>(k)];
                cz.segment<kNs>(z_state_offset(k)) = c[static_cast<std::size_t>(k)];
                if (k < N)
                    T.block(z_input_offset(k), kNu * k, kNu, kNu).setIdentity();
            }
        }

        // condensed rows
        struct CondensedRow
        {
            std::size_t source;
            Eigen::RowVectorXd grad;
            double rhs;
            bool soft;
        };
        std::vector<CondensedRow> condensed;
        condensed.reserve(qp.rows.size());
        int n_slack = 0;
        for (std::size_t r = 0; r < qp.rows.size(); ++r)
        {
            const QpRow &row = qp.rows[r];
            const auto ku = static_cast<std::size_t>(row.stage);
            Eigen::RowVectorXd grad = row.grad_local.head<kNs>().transpose() * G[ku];
            double constant = row.grad_local.head<kNs>().dot(c[ku]);
            if (row.stage < N)
                grad.segment<kNu>(kNu * row.stage) += row.grad_local.tail<kNu>().transpose();
            if (coupled)
            {
                grad.noalias() += qp.coupling.row(static_cast<Eigen::Index>(r)) * T;
                constant += qp.coupling.row(static_cast<Eigen::Index>(r)).dot(cz);
            }
            if (grad.cwiseAbs().maxCoeff() == 0.0)
                continue;  // fixed by the initial state
            condensed.push_back({r, std::move(grad), -row.value - constant, row.soft});
            if (row.soft)
                ++n_slack;
        }

        const int n = nu + n_slack;
        DenseQp dense;
        dense.H = Eigen::MatrixXd::Zero(n, n);
        dense.g = Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd Huu = Eigen::MatrixXd::Zero(nu, nu);
        Eigen::VectorXd gu = Eigen::VectorXd::Zero(nu);
        for (int k = 0; k <= N; ++k)
        {
            const auto ku = static_cast<std::size_t>(k);
            if (k > 0)
            {
                // G_k only depends on du_0..du_{k-1}
                const auto cols = static_cast<Eigen::Index>(kNu * k);
                const auto Gk = G[ku].leftCols(cols);
                const Eigen::MatrixXd HG = qp.state_hessians[ku] * Gk;
                Huu.topLeftCorner(cols, cols).noalias() += Gk.transpose() * HG;
                gu.head(cols).noalias() += Gk.transpose() * (qp.state_hessians[ku] * c[ku] + qp.state_gradients[ku]);
            }
            if (k < N)
            {
                Huu.block(kNu * k, kNu * k, kNu, kNu) += qp.input_hessians[ku];
                gu.segment<kNu>(kNu * k) += qp.input_gradients[ku];
            }
        }
        Huu.diagonal().array() += settings.levenberg;
        dense.H.topLeftCorner(nu, nu) = 0.5 * (Huu + Huu.transpose());
        dense.g.head(nu) = gu;
        for (int j = 0; j < n_slack; ++j)
        {
            dense.H(nu + j, nu + j) = 2.0 * settings.slack_penalty_l2 + settings.levenberg;
            dense.g[nu + j] = settings.slack_penalty_l1;
        }

        const auto m = static_cast<Eigen::Index>(condensed.size());
        dense.C = Eigen::MatrixXd::Zero(m, n);
        dense.d = Eigen::VectorXd::Zero(m);
        std::vector<int> slack_of(condensed.size(), -1);
        int slack_idx = 0;
        for (std::size_t i = 0; i < condensed.size(); ++i)
        {
            const auto ii = static_cast<Eigen::Index>(i);
            dense.C.row(ii).head(nu) = condensed[i].grad;
            dense.d[ii] = condensed[i].rhs;
            if (condensed[i].soft)
            {
                dense.C(ii, nu + slack_idx) = -1.0;
                slack_of[i] = slack_idx;
                dense.nonneg.push_back(nu + slack_idx);
                ++slack_idx;
            }
        }

        DenseQpSettings qps;
        qps.max_iterations = settings.qp_max_iterations;
        const DenseQpResult res = solve_dense_qp(dense, qps);

        QpStep step;
        step.status = res.status;
        step.qp_iterations = res.iterations;
        const ConstraintBlocks blocks = constraint_blocks(spec);
        step.multipliers = zero_stage_vectors(blocks, N);
        step.slacks = zero_stage_vectors(blocks, N);
        step.ds.assign(static_cast<std::size_t>(N + 1), RobotState::Zero());
        step.du.assign(static_cast<std::size_t>(N), ControlInput::Zero());
        if (res.status != QpStatus::kOptimal)
            return step;

        const Eigen::VectorXd du = res.x.head(nu);
        double norm = 0.0;
        for (int k = 0; k <= N; ++k)
        {
            const auto ku = static_cast<std::size_t>(k);
            step.ds[ku] = c[ku] + G[ku] * du;
            norm = std::max(norm, step.ds[ku].cwiseAbs().maxCoeff());
            if (k < N)
            {
                step.du[ku] = du.segment<kNu>(kNu * k);
                norm = std::max(norm, step.du[ku].cwiseAbs().maxCoeff());
            }
        }
        step.step_norm = norm;

        for (std::size_t i = 0; i < condensed.size(); ++i)
        {
            const QpRow &row = qp.rows[condensed[i].source];
            const auto ku = static_cast<std::size_t>(row.stage);
            step.multipliers[ku][row.index] = res.multipliers[static_cast<Eigen::Index>(i)];
            if (slack_of[i] >= 0)
                step.slacks[ku][row.index] = std::max(0.0, res.x[nu + slack_of[i]]);
        }
        return step;
    }

    KktStats evaluate_kkt(const OcpSolution &sol, const RobotState &s_init, const OcpSpec &spec,
                          const ReferenceWindow &window, const Eigen::MatrixXd *backoff_jac,
                          std::vector<RobotState> *dyn_multipliers)
    {
        const int N = sol.horizon();
        const ConstraintBlocks blocks = constraint_blocks(spec);
        const Weights &w = spec.weights;
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(z_size(N));
        KktStats stats;

        stats.feasibility = (sol.states.front() - s_init).cwiseAbs().maxCoeff();
        for (int k = 0; k <= N; ++k)
        {
            const auto ku = static_cast<std::size_t>(k);
            const RobotState &s = sol.states[ku];
            const ControlInput u = input_at(sol.inputs, k);
            const RobotState e = tracking_error(s, window.states[ku]);
            grad.segment<kNs>(z_state_offset(k)) += 2.0 * (k < N ? w.Q : w.Q_e) * e;
            if (k < N)
            {
                grad.segment<kNu>(z_input_offset(k)) += 2.0 * w.R * (u - window.inputs[ku]);
                const RobotState defect = integrate_step(s, u, spec.disc) - sol.states[ku + 1];
                stats.feasibility = std::max(stats.feasibility, defect.cwiseAbs().maxCoeff());
            }
            const auto &rows = blocks.rows_at(k, N);
            for (std::size_t i = 0; i < rows.size(); ++i)
            {
                const auto ii = static_cast<Eigen::Index>(i);
                const RowEval ev = evaluate_row(rows[i], spec, s, u);
                const double mu = sol.multipliers[ku][ii];
                const double value = ev.h + sol.backoffs[ku][ii];
                const bool fixed = k == 0 && !rows[i].acts_on_input();
                if (!fixed)
                    stats.feasibility = std::max(stats.feasibility, value);
                stats.complementarity = std::max(stats.complementarity, std::abs(mu * value));
                if (mu != 0.0)
                {
                    grad.segment<kNs>(z_state_offset(k)) += mu * ev.grad.head<kNs>();
                    if (k < N)
                        grad.segment<kNu>(z_input_offset(k)) += mu * ev.grad.tail<kNu>();
                }
            }
        }
        if (backoff_jac != nullptr)
            grad.noalias() += backoff_jac->transpose() * stack_rows(sol.multipliers);

        // lambda_{k-1} = grad_{s_k} + A_k' lambda_k
        std::vector<RobotState> lambda(static_cast<std::size_t>(N), RobotState::Zero());
        RobotState next = RobotState::Zero();
        double stationarity = 0.0;
        for (int k = N; k >= 1; --k)
        {
            RobotState lam = grad.segment<kNs>(z_state_offset(k));
            if (k < N)
            {
                const Jacobians jac = discrete_jacobians(sol.states[static_cast<std::size_t>(k)],
                                                         sol.inputs[static_cast<std::size_t>(k)], spec.disc);
                lam += jac.A.transpose() * next;
            }
            lambda[static_cast<std::size_t>(k - 1)] = lam;
            next = lam;
        }
        for (int k = 0; k < N; ++k)
        {
            const Jacobians jac = discrete_jacobians(sol.states[static_cast<std::size_t>(k)],
                                                     sol.inputs[static_cast<std::size_t>(k)], spec.disc);
            const ControlInput gu =
                grad.segment<kNu>(z_input_offset(k)) + jac.B.transpose() * lambda[static_cast<std::size_t>(k)];
            stationarity = std::max(stationarity, gu.cwiseAbs().maxCoeff());
        }
        stats.stationarity = stationarity;
        stats.feasibility = std::max(stats.feasibility, 0.0);
        if (dyn_multipliers != nullptr)
            *dyn_multipliers = std::move(lambda);
        return stats;
    }

    OcpSolution zoro_step(const RobotState &s_init, const OcpSolution &prev, const ZoroSettings &settings,
                          const OcpSpec &spec, const ReferenceWindow &window, const RobustModel &model)
    {
        OcpSolution sol = prev;
        sol.iterations = 0;
        sol.qp_iterations = 0;
        sol.outer_iterations = 0;
        for (int i = 0; i < settings.qp_iterations_per_sample; ++i)
        {
            if (i < settings.backoff_updates_per_sample)
            {
                BackoffResult br = update_backoffs(sol.states, sol.inputs, spec, model);
                sol.backoffs = std::move(br.backoffs);
                sol.tube = std::move(br.tube);
                ++sol.outer_iterations;
            }
            const QProblem qp = build_qp(sol.states, sol.inputs, s_init, spec, window, sol.backoffs);
            apply_step(sol, checked_qp_step(qp, spec, settings));
        }
        sol.kkt = evaluate_kkt(sol, s_init, spec, window, nullptr, &sol.dyn_multipliers);
        return sol;
    }

    OcpSolution zoro_solve_to_convergence(const RobotState &s_init, const ZoroSettings &settings,
                                          const OcpSpec &spec, const ReferenceWindow &window,
                                          const RobustModel &model, const std::optional<OcpSolution> &initial_guess)
    {
        OcpSolution sol = initial_guess ? *initial_guess : cold_start(s_init, window, spec);
        sol.iterations = 0;
        sol.qp_iterations = 0;
        sol.outer_iterations = 0;
        sol.converged = false;

        BackoffResult br = update_backoffs(sol.states, sol.inputs, spec, model);
        for (int outer = 0; outer < settings.max_outer_iterations; ++outer)
        {
            sol.backoffs = br.backoffs;
            sol.tube = br.tube;
            ++sol.outer_iterations;
            for (int inner = 0; inner < settings.max_inner_iterations; ++inner)
            {
                const QProblem qp = build_qp(sol.states, sol.inputs, s_init, spec, window, sol.backoffs);
                apply_step(sol, checked_qp_step(qp, spec, settings));
                if (sol.last_step_norm <= settings.tol_stationarity)
                    break;
            }
            br = update_backoffs(sol.states, sol.inputs, spec, model);
            const double change = max_abs_difference(br.backoffs, sol.backoffs);
            if (change <= settings.tol_feasibility && sol.last_step_norm <= settings.tol_stationarity)
            {
                sol.converged = true;
                break;
            }
        }
        sol.kkt = evaluate_kkt(sol, s_init, spec, window, nullptr, &sol.dyn_multipliers);
        return sol;
    }

    Eigen::MatrixXd backoff_jacobian(const std::vector<RobotState> &states, const std::vector<ControlInput> &inputs,
                                     const OcpSpec &spec, const RobustModel &model, double step)
    {
        const int N = static_cast<int>(inputs.size());
        const ConstraintBlocks blocks = constraint_blocks(spec);
        const int m = total_rows(blocks, N);
        const int nz = z_size(N);
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, nz);

        std::vector<Jacobians> base_jacs;
        if (model.kind == TubeKind::kEllipsoidal)
            base_jacs = trajectory_jacobians(states, inputs, spec.disc);

        std::vector<RobotState> xs = states;
        std::vector<ControlInput> us = inputs;
        std::vector<Jacobians> jacs = base_jacs;

        auto evaluate = [&](int stage) {
            if (model.kind == TubeKind::kEllipsoidal && stage < N)
                jacs[static_cast<std::size_t>(stage)] =
                    discrete_jacobians(xs[static_cast<std::size_t>(stage)], us[static_cast<std::size_t>(stage)], spec.disc);
            return stack_rows(compute_backoffs(xs, us, jacs, blocks, spec, model).backoffs);
        };

        for (int k = 0; k <= N; ++k)
        {
            const auto ku = static_cast<std::size_t>(k);
            const int width = k < N ? kNs + kNu : kNs;
            for (int j = 0; j < width; ++j)
            {
                double &entry = j < kNs ? xs[ku][j] : us[ku][j - kNs];
                const double saved = entry;
                entry = saved + step;
                const Eigen::VectorXd plus = evaluate(k);
                entry = saved - step;
                const Eigen::VectorXd minus = evaluate(k);
                entry = saved;
                if (model.kind == TubeKind::kEllipsoidal && k < N)
                    jacs[ku] = base_jacs[ku];
                jac.col(z_state_offset(k) + j) = (plus - minus) / (2.0 * step);
            }
        }
        return jac;
    }

    DisregardedGradient disregarded_gradient(const OcpSolution &sol, const OcpSpec &spec, const RobustModel &model,
                                             double step)
    {
        DisregardedGradient out;
        const Eigen::VectorXd mu = stack_rows(sol.multipliers);
        if (mu.size() == 0 || mu.cwiseAbs().maxCoeff() == 0.0)
        {
            out.gradient = Eigen::VectorXd::Zero(z_size(sol.horizon()));
            return out;
        }
        const Eigen::MatrixXd jac = backoff_jacobian(sol.states, sol.inputs, spec, model, step);
        out.gradient = jac.transpose() * mu;
        out.norm = out.gradient.size() > 0 ? out.gradient.cwiseAbs().maxCoeff() : 0.0;
        return out;
    }

    double objective_value(const OcpSolution &sol, const ReferenceWindow &window, const OcpSpec &spec)
    {
        const int N = sol.horizon();
        double f = 0.0;
        for (int k = 0; k < N; ++k)
        {
            const auto ku = static_cast<std::size_t>(k);
            f += stage_cost(sol.states[ku], sol.inputs[ku], window.states[ku], window.inputs[ku], spec.weights);
        }
        f += terminal_cost(sol.states.back(), window.states.back(), spec.weights);
        return f;
    }

} // namespace zoro
