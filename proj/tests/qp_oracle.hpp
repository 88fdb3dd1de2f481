#pragma once

// Brute-force active-set enumeration for small strictly convex QPs
//   min 0.5 x'Hx + g'x  s.t.  C x <= d.
// Every subset of rows (smallest first) is tried as the active set; the
// equality-constrained KKT system is solved directly and the first candidate
// that is primal feasible with non-negative multipliers is the unique optimum.

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <vector>

namespace zoro::testing
{
    struct EnumeratedQpSolution
    {
        Eigen::VectorXd x;
        double objective = 0.0;
        std::vector<int> active;
    };

    inline std::optional<EnumeratedQpSolution> enumerate_qp(const Eigen::MatrixXd &H, const Eigen::VectorXd &g,
                                                            const Eigen::MatrixXd &C, const Eigen::VectorXd &d,
                                                            double tol = 1e-9)
    {
        const int n = static_cast<int>(H.rows());
        const int m = static_cast<int>(C.rows());
        std::vector<int> subset;

        auto try_subset = [&](const std::vector<int> &act) -> std::optional<EnumeratedQpSolution> {
            const int k = static_cast<int>(act.size());
            Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
            Eigen::VectorXd rhs(n + k);
            K.topLeftCorner(n, n) = H;
            rhs.head(n) = -g;
            for (int i = 0; i < k; ++i)
            {
                K.block(0, n + i, n, 1) = C.row(act[static_cast<std::size_t>(i)]).transpose();
                K.block(n + i, 0, 1, n) = C.row(act[static_cast<std::size_t>(i)]);
                rhs[n + i] = d[act[static_cast<std::size_t>(i)]];
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
            if (lu.rank() < n + k)
                return std::nullopt;
            const Eigen::VectorXd sol = lu.solve(rhs);
            const Eigen::VectorXd x = sol.head(n);
            for (int i = 0; i < k; ++i)
                if (sol[n + i] < -tol)
                    return std::nullopt;
            if (m > 0 && ((C * x - d).array() > tol).any())
                return std::nullopt;
            EnumeratedQpSolution out;
            out.x = x;
            out.objective = 0.5 * x.dot(H * x) + g.dot(x);
            out.active = act;
            return out;
        };

        for (int size = 0; size <= std::min(n, m); ++size)
        {
            // iterate all combinations of `size` rows
            std::vector<int> idx(static_cast<std::size_t>(size));
            for (int i = 0; i < size; ++i)
                idx[static_cast<std::size_t>(i)] = i;
            while (true)
            {
                if (auto sol = try_subset(idx))
                    return sol;
                int pos = size - 1;
                while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == m - size + pos)
                    --pos;
                if (pos < 0)
                    break;
                ++idx[static_cast<std::size_t>(pos)];
                for (int j = pos + 1; j < size; ++j)
                    idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
            }
        }
        return std::nullopt;
    }

    struct RandomQp
    {
        Eigen::MatrixXd H, C;
        Eigen::VectorXd g, d;
    };

    // Strictly convex, feasible by construction (a random interior point).
    template <class Rng>
    RandomQp random_qp(Rng &rng, int n, int m)
    {
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> uniform(0.1, 1.0);
        RandomQp qp;
        Eigen::MatrixXd F(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                F(i, j) = normal(rng);
        qp.H = F * F.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
        qp.g.resize(n);
        for (int i = 0; i < n; ++i)
            qp.g[i] = 3.0 * normal(rng);
        qp.C.resize(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                qp.C(i, j) = normal(rng);
        Eigen::VectorXd x0(n);
        for (int i = 0; i < n; ++i)
            x0[i] = 0.3 * normal(rng);
        qp.d = qp.C * x0;
        for (int i = 0; i < m; ++i)
            qp.d[i] += uniform(rng);
        return qp;
    }
} // namespace zoro::testing
