#pragma once

#include "zoro/zoro_solver.hpp"

namespace zoro
{
    struct OracleSettings
    {
        int max_iterations = 300;
        double tol_step = 1e-10;
        double tol_stationarity = 1e-8;
        double fd_step = 1e-6;
    };

    /// Exact robust MPC in reduced form: the tube is eliminated by forward
    /// propagation and every row h(z) + backoff(g(z), z) <= 0 is linearized with
    /// its full gradient, including the backoff sensitivity. Slow; for
    /// validation only.
    OcpSolution solve_exact_robust(const RobotState &s_init, const OcpSpec &spec, const ReferenceWindow &window,
                                   const RobustModel &model, const ZoroSettings &settings,
                                   const OracleSettings &oracle = {},
                                   const std::optional<OcpSolution> &initial_guess = std::nullopt);

    /// Nominal MPC: the fixed-backoff machinery with an empty tube.
    OcpSolution solve_nominal(const RobotState &s_init, const OcpSpec &spec, const ReferenceWindow &window,
                              const ZoroSettings &settings,
                              const std::optional<OcpSolution> &initial_guess = std::nullopt);

} // namespace zoro
