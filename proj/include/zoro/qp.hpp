#pragma once

#include <Eigen/Dense>

#include <vector>

namespace zoro
{
    /// min 0.5 x'Hx + g'x  s.t.  C x <= d,  x_i >= 0 for i in nonneg,
    /// with H symmetric positive definite.
    struct DenseQp
    {
        Eigen::MatrixXd H;
        Eigen::VectorXd g;
        Eigen::MatrixXd C;
        Eigen::VectorXd d;
        // Variables without Hessian coupling and with g_i >= 0 start with
        // their bound active, which is dual feasible and skips one iteration each.
        std::vector<int> nonneg = {};
    };

    struct DenseQpSettings
    {
        int max_iterations = 2000;
        double feasibility_tol = 1e-12;  // relative to row scale
    };

    enum class QpStatus
    {
        kOptimal,
        kInfeasible,
        kMaxIterations,
        kNotConvex,
    };

    struct DenseQpResult
    {
        QpStatus status = QpStatus::kOptimal;
        Eigen::VectorXd x;
        Eigen::VectorXd multipliers;  // one per row of C, >= 0
        Eigen::VectorXd bound_multipliers;  // one per nonneg entry
        std::vector<int> active_set;  // rows of C only
        double objective = 0.0;
        int iterations = 0;
    };

    /// Goldfarb-Idnani dual active-set method. Starts from the unconstrained
    /// minimiser and adds the most violated row at each outer iteration, so it
    /// needs no feasible starting point and returns exact active-set
    /// multipliers.
    DenseQpResult solve_dense_qp(const DenseQp &qp, const DenseQpSettings &settings = {});

    const char *to_string(QpStatus status);

} // namespace zoro
