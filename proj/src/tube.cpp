#include "zoro/tube.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace zoro
{
    FeedbackGain FeedbackGain::from_linear_block(const Mat2 &k_lin)
    {
        FeedbackGain g;
        g.K.rightCols<kNlin>() = k_lin;
        return g;
    }

    void symmetrize(ShapeMatrix &sigma)
    {
        sigma = 0.5 * (sigma + sigma.transpose()).eval();
    }

    double min_eigenvalue(const ShapeMatrix &sigma)
    {
        Eigen::SelfAdjointEigenSolver<ShapeMatrix> es(sigma, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    bool is_psd(const ShapeMatrix &sigma, double tol)
    {
        return min_eigenvalue(sigma) >= -tol;
    }

    ShapeMatrix propagate(const ShapeMatrix &sigma, const StateMatrix &A, const InputMatrix &B, const FeedbackGain &K,
                          const NoiseModel &W)
    {
        const StateMatrix closed_loop = A - B * K.K;
        ShapeMatrix next = closed_loop * sigma * closed_loop.transpose() + W.W;
        symmetrize(next);
        return next;
    }

    std::vector<ShapeMatrix> propagate_trajectory(const ShapeMatrix &sigma0, const std::vector<Jacobians> &jacs,
                                                  const FeedbackGain &K, const NoiseModel &W)
    {
        std::vector<ShapeMatrix> tube;
        tube.reserve(jacs.size() + 1);
        tube.push_back(sigma0);
        for (const auto &jac : jacs)
            tube.push_back(propagate(tube.back(), jac.A, jac.B, K, W));
        return tube;
    }

    FeedbackGain feedback_gain(const DiffDriveParams &dd, const DiscretizationParams &p)
    {
        if (!(p.dt > 0.0))
            throw SolverError(SolverError::Kind::kDegenerate, "degenerate discretization");
        const LinearSubsystem lin = linear_subsystem_matrices(p);
        const double contraction = 1.0 - std::exp(-p.dt / dd.tau);
        // B_lin is invertible (dt * I); solve B_lin K_lin = contraction * I.
        const Mat2 k_lin = lin.B_lin.inverse() * (contraction * Mat2::Identity());
        return FeedbackGain::from_linear_block(k_lin);
    }

    RobotState lifted_gradient(const Vec7 &grad_h, const FeedbackGain &K)
    {
        return grad_h.head<kNs>() + kInputDeviationSign * K.K.transpose() * grad_h.tail<kNu>();
    }

    namespace
    {
        double checked_sqrt(double radicand)
        {
            if (radicand < -kPsdTolerance)
                throw SolverError(SolverError::Kind::kPsdViolation, "PSD violation in backoff radicand");
            if (radicand <= 0.0)
                return 0.0;
            return std::sqrt(radicand);
        }
    } // namespace

    double backoff(const Vec7 &grad_h, const ShapeMatrix &sigma, const FeedbackGain &K)
    {
        const RobotState l = lifted_gradient(grad_h, K);
        return checked_sqrt(l.dot(sigma * l));
    }

    double terminal_backoff(const RobotState &grad_hN, const ShapeMatrix &sigmaN)
    {
        return checked_sqrt(grad_hN.dot(sigmaN * grad_hN));
    }

    double scalar_tube_radius(int k, const ScalarTube &st)
    {
        double eps = st.eps0;
        for (int i = 0; i < k; ++i)
            eps = st.rho * eps + st.eps_step;
        return eps;
    }

    namespace
    {
        // Columns span range(W), scaled by the square roots of the eigenvalues.
        Eigen::MatrixXd ellipsoid_factor(const ShapeMatrix &W)
        {
            Eigen::SelfAdjointEigenSolver<ShapeMatrix> es(W);
            Eigen::MatrixXd factor(kNs, 0);
            for (int i = 0; i < kNs; ++i)
            {
                const double lambda = es.eigenvalues()[i];
                if (lambda > kNullSpaceThreshold)
                {
                    factor.conservativeResize(Eigen::NoChange, factor.cols() + 1);
                    factor.col(factor.cols() - 1) = std::sqrt(lambda) * es.eigenvectors().col(i);
                }
            }
            return factor;
        }
    } // namespace

    std::vector<RobotState> sample_disturbance_trajectory(const NoiseModel &W, int N, std::mt19937_64 &rng,
                                                          SampleMode mode)
    {
        std::vector<RobotState> ws(static_cast<std::size_t>(N), RobotState::Zero());
        const Eigen::MatrixXd factor = ellipsoid_factor(W.W);
        const int rank = static_cast<int>(factor.cols());
        if (rank == 0 || N < 1)
            return ws;

        const int dim = rank * N;
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd xi(dim);
        double norm = 0.0;
        do
        {
            for (int i = 0; i < dim; ++i)
                xi[i] = normal(rng);
            norm = xi.norm();
        } while (norm == 0.0);
        xi /= norm;

        double radius = 1.0;
        if (mode == SampleMode::kInterior)
        {
            // uniform in the unit ball of dimension `dim`
            std::uniform_real_distribution<double> uniform(0.0, 1.0);
            radius = std::pow(uniform(rng), 1.0 / dim);
        }
        xi *= radius;

        for (int k = 0; k < N; ++k)
            ws[static_cast<std::size_t>(k)] = factor * xi.segment(k * rank, rank);
        return ws;
    }

    EllipsoidMembership stacked_ellipsoid_norm(const NoiseModel &W, const std::vector<RobotState> &ws)
    {
        Eigen::SelfAdjointEigenSolver<ShapeMatrix> es(W.W);
        EllipsoidMembership out;
        for (const auto &w : ws)
        {
            const RobotState coords = es.eigenvectors().transpose() * w;
            for (int i = 0; i < kNs; ++i)
            {
                const double lambda = es.eigenvalues()[i];
                if (lambda > kNullSpaceThreshold)
                    out.norm_sq += coords[i] * coords[i] / lambda;
                else
                    out.null_space_residual = std::max(out.null_space_residual, std::abs(coords[i]));
            }
        }
        return out;
    }

} // namespace zoro
