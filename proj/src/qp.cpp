#include "zoro/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zoro
{
    const char *to_string(QpStatus status)
    {
        switch (status)
        {
        case QpStatus::kOptimal:
            return "optimal";
        case QpStatus::kInfeasible:
            return "infeasible";
        case QpStatus::kMaxIterations:
            return "max-iterations";
        case QpStatus::kNotConvex:
            return "not-convex";
        }
        return "unknown";
    }

    namespace
    {
        constexpr double kInf = std::numeric_limits<double>::infinity();

        // Active-set factorisation: J' n_i for active rows is kept upper
        // triangular in R, with J = L^{-T} Q and H = L L'.
        class ActiveSetFactor
        {
        public:
            explicit ActiveSetFactor(const Eigen::MatrixXd &J0) : J_(J0), R_(Eigen::MatrixXd::Zero(J0.rows(), J0.rows())) {}

            int size() const { return iq_; }

            // Activates unit-normal bounds on decoupled variables: their J columns
            // are moved to the front, where J' e_i is already triangular.
            void preset_bounds(const std::vector<int> &vars)
            {
                const int n = static_cast<int>(J_.rows());
                std::vector<int> order(vars);
                std::vector<char> used(static_cast<std::size_t>(n), 0);
                for (int v : vars)
                    used[static_cast<std::size_t>(v)] = 1;
                for (int j = 0; j < n; ++j)
                    if (!used[static_cast<std::size_t>(j)])
                        order.push_back(j);
                Eigen::MatrixXd permuted(n, n);
                for (int j = 0; j < n; ++j)
                    permuted.col(j) = J_.col(order[static_cast<std::size_t>(j)]);
                J_ = std::move(permuted);
                for (std::size_t t = 0; t < vars.size(); ++t)
                {
                    const auto ti = static_cast<Eigen::Index>(t);
                    R_(ti, ti) = J_(vars[t], ti);
                    r_norm_ = std::max(r_norm_, std::abs(R_(ti, ti)));
                }
                iq_ = static_cast<int>(vars.size());
            }
            const Eigen::MatrixXd &J() const { return J_; }

            // Primal direction z = J2 J2' n and dual direction r = R^{-1} J1' n.
            void directions(const Eigen::VectorXd &normal, Eigen::VectorXd &d, Eigen::VectorXd &z,
                            Eigen::VectorXd &r) const
            {
                const int n = static_cast<int>(J_.rows());
                d.noalias() = J_.transpose() * normal;
                z.noalias() = J_.rightCols(n - iq_) * d.tail(n - iq_);
                r.resize(iq_);
                for (int i = iq_ - 1; i >= 0; --i)
                {
                    double sum = d[i];
                    for (int j = i + 1; j < iq_; ++j)
                        sum -= R_(i, j) * r[j];
                    r[i] = sum / R_(i, i);
                }
            }

            // Appends a row whose transformed normal is d (= J' n). Returns false
            // when the row is linearly dependent on the active set.
            bool add(Eigen::VectorXd d)
            {
                const int n = static_cast<int>(J_.rows());
                for (int j = n - 1; j > iq_; --j)
                {
                    const double h = std::hypot(d[j - 1], d[j]);
                    if (h == 0.0)
                        continue;
                    const double c = d[j - 1] / h;
                    const double s = d[j] / h;
                    d[j - 1] = h;
                    d[j] = 0.0;
                    rotate_columns(j - 1, c, s);
                }
                R_.col(iq_).head(iq_ + 1) = d.head(iq_ + 1);
                ++iq_;
                const double diag = std::abs(d[iq_ - 1]);
                if (diag <= std::numeric_limits<double>::epsilon() * r_norm_)
                {
                    --iq_;
                    R_.col(iq_).setZero();
                    return false;
                }
                r_norm_ = std::max(r_norm_, diag);
                return true;
            }

            void remove(int position)
            {
                for (int col = position; col < iq_ - 1; ++col)
                    R_.col(col) = R_.col(col + 1);
                R_.col(iq_ - 1).setZero();
                --iq_;
                // restore the triangle from the Hessenberg form
                for (int j = position; j < iq_; ++j)
                {
                    const double a = R_(j, j);
                    const double b = R_(j + 1, j);
                    const double h = std::hypot(a, b);
                    if (h == 0.0)
                        continue;
                    const double c = a / h;
                    const double s = b / h;
                    for (int col = j; col < iq_; ++col)
                    {
                        const double top = R_(j, col);
                        const double bottom = R_(j + 1, col);
                        R_(j, col) = c * top + s * bottom;
                        R_(j + 1, col) = -s * top + c * bottom;
                    }
                    R_(j + 1, j) = 0.0;
                    rotate_columns(j, c, s);
                }
            }

        private:
            void rotate_columns(int j, double c, double s)
            {
                for (Eigen::Index k = 0; k < J_.rows(); ++k)
                {
                    const double t1 = J_(k, j);
                    const double t2 = J_(k, j + 1);
                    J_(k, j) = c * t1 + s * t2;
                    J_(k, j + 1) = -s * t1 + c * t2;
                }
            }

            Eigen::MatrixXd J_;
            Eigen::MatrixXd R_;
            int iq_ = 0;
            double r_norm_ = 1.0;
        };
    } // namespace

    DenseQpResult solve_dense_qp(const DenseQp &qp, const DenseQpSettings &settings)
    {
        const Eigen::Index n = qp.H.rows();
        const Eigen::Index m_rows = qp.C.rows();
        const auto nb = static_cast<Eigen::Index>(qp.nonneg.size());
        const Eigen::Index m = m_rows + nb;
        DenseQpResult result;
        result.multipliers = Eigen::VectorXd::Zero(m_rows);
        result.bound_multipliers = Eigen::VectorXd::Zero(nb);

        // Variables without off-diagonal Hessian entries are factored trivially;
        // J = L^{-T} is assembled from the coupled block and the diagonal.
        std::vector<int> coupled, diagonal;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const bool lone = qp.H.row(i).cwiseAbs().sum() == std::abs(qp.H(i, i)) &&
                              qp.H.col(i).cwiseAbs().sum() == std::abs(qp.H(i, i));
            (lone ? diagonal : coupled).push_back(static_cast<int>(i));
        }
        const auto nc = static_cast<Eigen::Index>(coupled.size());
        Eigen::MatrixXd J0 = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd x(n);
        for (int i : diagonal)
        {
            if (!(qp.H(i, i) > 0.0))
            {
                result.status = QpStatus::kNotConvex;
                result.x = Eigen::VectorXd::Zero(n);
                return result;
            }
            J0(i, i) = 1.0 / std::sqrt(qp.H(i, i));
            x[i] = -qp.g[i] / qp.H(i, i);
        }
        if (nc > 0)
        {
            Eigen::MatrixXd Hc(nc, nc);
            Eigen::VectorXd gc(nc);
            for (Eigen::Index a = 0; a < nc; ++a)
            {
                gc[a] = qp.g[coupled[static_cast<std::size_t>(a)]];
                for (Eigen::Index b = 0; b < nc; ++b)
                    Hc(a, b) = qp.H(coupled[static_cast<std::size_t>(a)], coupled[static_cast<std::size_t>(b)]);
            }
            Eigen::LLT<Eigen::MatrixXd> llt(Hc);
            if (llt.info() != Eigen::Success)
            {
                result.status = QpStatus::kNotConvex;
                result.x = Eigen::VectorXd::Zero(n);
                return result;
            }
            Eigen::MatrixXd Jc = Eigen::MatrixXd::Identity(nc, nc);
            llt.matrixU().solveInPlace(Jc);
            const Eigen::VectorXd xc = llt.solve(-gc);
            for (Eigen::Index a = 0; a < nc; ++a)
            {
                x[coupled[static_cast<std::size_t>(a)]] = xc[a];
                for (Eigen::Index b = 0; b < nc; ++b)
                    J0(coupled[static_cast<std::size_t>(a)], coupled[static_cast<std::size_t>(b)]) = Jc(a, b);
            }
        }
        ActiveSetFactor factor(J0);

        // rows in the form normal' x >= rhs; bounds are appended after C
        Eigen::MatrixXd normals = Eigen::MatrixXd::Zero(n, m);
        normals.leftCols(m_rows) = -qp.C.transpose();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        rhs.head(m_rows) = -qp.d;
        for (Eigen::Index b = 0; b < nb; ++b)
            normals(qp.nonneg[static_cast<std::size_t>(b)], m_rows + b) = 1.0;
        Eigen::VectorXd row_norm(m);
        for (Eigen::Index i = 0; i < m; ++i)
            row_norm[i] = std::max(normals.col(i).norm(), 1e-300);

        std::vector<int> active;
        std::vector<double> dual;
        std::vector<char> is_active(static_cast<std::size_t>(m), 0);

        std::vector<int> preset;
        for (Eigen::Index b = 0; b < nb; ++b)
        {
            const int v = qp.nonneg[static_cast<std::size_t>(b)];
            const bool decoupled = (qp.H.row(v).cwiseAbs().sum() == std::abs(qp.H(v, v)));
            if (decoupled && qp.g[v] >= 0.0 && std::find(preset.begin(), preset.end(), v) == preset.end())
            {
                preset.push_back(v);
                active.push_back(static_cast<int>(m_rows + b));
                dual.push_back(qp.g[v]);
                is_active[static_cast<std::size_t>(m_rows + b)] = 1;
                x[v] = 0.0;
            }
        }
        if (!preset.empty())
            factor.preset_bounds(preset);

        Eigen::VectorXd d(n), z(n), r, slacks(m);

        auto finish = [&](QpStatus status) {
            result.status = status;
            result.x = x;
            for (std::size_t i = 0; i < active.size(); ++i)
            {
                if (active[i] < m_rows)
                {
                    result.active_set.push_back(active[i]);
                    result.multipliers[active[i]] = dual[i];
                }
                else
                {
                    result.bound_multipliers[active[i] - m_rows] = dual[i];
                }
            }
            result.objective = 0.5 * x.dot(qp.H * x) + qp.g.dot(x);
            return result;
        };

        while (true)
        {
            // most violated row (scaled)
            slacks.noalias() = normals.transpose() * x;
            int p = -1;
            double worst = 0.0;
            for (Eigen::Index i = 0; i < m; ++i)
            {
                if (is_active[static_cast<std::size_t>(i)])
                    continue;
                const double slack = (slacks[i] - rhs[i]) / row_norm[i];
                const double tol = settings.feasibility_tol * (1.0 + std::abs(rhs[i]) / row_norm[i]);
                if (slack < -tol && slack < worst)
                {
                    worst = slack;
                    p = static_cast<int>(i);
                }
            }
            if (p < 0)
                return finish(QpStatus::kOptimal);
            const Eigen::VectorXd normal_p = normals.col(p);
            double slack_p = normal_p.dot(x) - rhs[p];
            double dual_p = 0.0;

            while (true)
            {
                if (++result.iterations > settings.max_iterations)
                    return finish(QpStatus::kMaxIterations);

                factor.directions(normal_p, d, z, r);

                double t1 = kInf;
                int leave = -1;
                for (int j = 0; j < factor.size(); ++j)
                {
                    if (r[j] > 0.0)
                    {
                        const double ratio = dual[static_cast<std::size_t>(j)] / r[j];
                        if (ratio < t1)
                        {
                            t1 = ratio;
                            leave = j;
                        }
                    }
                }
                double t2 = kInf;
                const double curvature = z.dot(normal_p);
                if (z.norm() > std::numeric_limits<double>::epsilon() * row_norm[p] && curvature > 0.0)
                    t2 = -slack_p / curvature;

                const double t = std::min(t1, t2);
                if (t == kInf)
                    return finish(QpStatus::kInfeasible);

                for (int j = 0; j < factor.size(); ++j)
                    dual[static_cast<std::size_t>(j)] -= t * r[j];
                dual_p += t;

                if (t2 == kInf)
                {
                    // dual step only
                    is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(leave)])] = 0;
                    active.erase(active.begin() + leave);
                    dual.erase(dual.begin() + leave);
                    factor.remove(leave);
                    continue;
                }

                x += t * z;
                if (t2 <= t1)
                {
                    if (!factor.add(d))
                        return finish(QpStatus::kInfeasible);
                    active.push_back(p);
                    dual.push_back(dual_p);
                    is_active[static_cast<std::size_t>(p)] = 1;
                    break;
                }

                is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(leave)])] = 0;
                active.erase(active.begin() + leave);
                dual.erase(dual.begin() + leave);
                factor.remove(leave);
                slack_p = normal_p.dot(x) - rhs[p];
            }
        }
    }

} // namespace zoro
