#include "zoro/oracle.hpp"

namespace zoro
{
    OcpSolution solve_exact_robust(const RobotState &s_init, const OcpSpec &spec, const ReferenceWindow &window,
                                   const RobustModel &model, const ZoroSettings &settings,
                                   const OracleSettings &oracle, const std::optional<OcpSolution> &initial_guess)
    {
        OcpSolution sol = initial_guess ? *initial_guess : cold_start(s_init, window, spec);
        sol.iterations = 0;
        sol.qp_iterations = 0;
        sol.outer_iterations = 0;
        sol.converged = false;

        for (int it = 0; it < oracle.max_iterations; ++it)
        {
            BackoffResult br = update_backoffs(sol.states, sol.inputs, spec, model);
            sol.backoffs = std::move(br.backoffs);
            sol.tube = std::move(br.tube);
            QProblem qp = build_qp(sol.states, sol.inputs, s_init, spec, window, sol.backoffs);
            qp.coupling = backoff_jacobian(sol.states, sol.inputs, spec, model, oracle.fd_step);

            QpStep step = solve_qp(qp, spec, settings);
            if (step.status == QpStatus::kInfeasible)
                throw SolverError(SolverError::Kind::kInfeasible, "infeasible");
            if (step.status != QpStatus::kOptimal)
                throw SolverError(SolverError::Kind::kNoConvergence, std::string("QP ") + to_string(step.status));

            for (std::size_t k = 0; k < sol.states.size(); ++k)
                sol.states[k] += step.ds[k];
            for (std::size_t k = 0; k < sol.inputs.size(); ++k)
                sol.inputs[k] += step.du[k];
            sol.multipliers = std::move(step.multipliers);
            sol.slacks = std::move(step.slacks);
            sol.iterations += 1;
            sol.qp_iterations += step.qp_iterations;
            sol.last_step_norm = step.step_norm;
            if (step.step_norm <= oracle.tol_step)
                break;
        }

        BackoffResult br = update_backoffs(sol.states, sol.inputs, spec, model);
        sol.backoffs = std::move(br.backoffs);
        sol.tube = std::move(br.tube);
        const Eigen::MatrixXd jac = backoff_jacobian(sol.states, sol.inputs, spec, model, oracle.fd_step);
        sol.kkt = evaluate_kkt(sol, s_init, spec, window, &jac, &sol.dyn_multipliers);
        sol.outer_iterations = sol.iterations;
        sol.converged = sol.kkt.stationarity <= oracle.tol_stationarity &&
                        sol.kkt.feasibility <= std::max(oracle.tol_stationarity, settings.tol_feasibility);
        return sol;
    }

    OcpSolution solve_nominal(const RobotState &s_init, const OcpSpec &spec, const ReferenceWindow &window,
                              const ZoroSettings &settings, const std::optional<OcpSolution> &initial_guess)
    {
        return zoro_solve_to_convergence(s_init, settings, spec, window, RobustModel::nominal(), initial_guess);
    }

} // namespace zoro
