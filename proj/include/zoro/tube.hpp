#pragma once

#include "zoro/model.hpp"
#include "zoro/types.hpp"

#include <random>
#include <vector>

namespace zoro
{
    /// One-step additive disturbance shape matrix W. A horizon-length disturbance
    /// trajectory is assumed to lie in E(diag(W, ..., W)).
    struct NoiseModel
    {
        ShapeMatrix W = ShapeMatrix::Zero();
    };

    /// Ancillary feedback u = u_nom - K (s - s_nom). Only the (v, omega) columns
    /// are non-zero.
    struct FeedbackGain
    {
        GainMatrix K = GainMatrix::Zero();

        Mat2 K_lin() const { return K.rightCols<kNlin>(); }
        static FeedbackGain from_linear_block(const Mat2 &k_lin);
    };

    /// Hypersphere tube eps_{k+1} = rho * eps_k + eps_step.
    struct ScalarTube
    {
        double eps0 = 0.0;
        double rho = 1.0;
        double eps_step = 0.0;
    };

    enum class SampleMode
    {
        kBoundary,
        kInterior,
    };

    // Input deviations obey du = kInputDeviationSign * K * ds. The backoff lift
    // uses the same sign so that the tube and the tightening are consistent.
    inline constexpr double kInputDeviationSign = -1.0;

    inline constexpr double kPsdTolerance = 1e-10;
    inline constexpr double kNullSpaceThreshold = 1e-12;

    void symmetrize(ShapeMatrix &sigma);
    double min_eigenvalue(const ShapeMatrix &sigma);
    bool is_psd(const ShapeMatrix &sigma, double tol = kPsdTolerance);

    // Sigma' = (A - B K) Sigma (A - B K)' + W
    ShapeMatrix propagate(const ShapeMatrix &sigma, const StateMatrix &A, const InputMatrix &B, const FeedbackGain &K,
                          const NoiseModel &W);

    std::vector<ShapeMatrix> propagate_trajectory(const ShapeMatrix &sigma0, const std::vector<Jacobians> &jacs,
                                                  const FeedbackGain &K, const NoiseModel &W);

    /// Gain that reproduces the inner velocity controller over one interval:
    /// B_lin K_lin = (1 - exp(-dt/tau)) I.
    FeedbackGain feedback_gain(const DiffDriveParams &dd, const DiscretizationParams &p);

    // Projects a constraint gradient over (s, u) onto the state through the
    // feedback lift: ds-part + sign * K' du-part.
    RobotState lifted_gradient(const Vec7 &grad_h, const FeedbackGain &K);

    /// Constraint tightening sqrt(g' M Sigma M' g) with M = [I; -K].
    double backoff(const Vec7 &grad_h, const ShapeMatrix &sigma, const FeedbackGain &K);
    double terminal_backoff(const RobotState &grad_hN, const ShapeMatrix &sigmaN);

    double scalar_tube_radius(int k, const ScalarTube &st);

    /// Draws w_0..w_{N-1} whose stacked vector lies in E(diag(W, ..., W)).
    /// Boundary mode puts it exactly on the boundary.
    std::vector<RobotState> sample_disturbance_trajectory(const NoiseModel &W, int N, std::mt19937_64 &rng,
                                                          SampleMode mode);

    /// Stacked ellipsoid norm sum_k w_k' W^+ w_k, plus the largest component of
    /// any w_k that falls outside range(W).
    struct EllipsoidMembership
    {
        double norm_sq = 0.0;
        double null_space_residual = 0.0;
    };
    EllipsoidMembership stacked_ellipsoid_norm(const NoiseModel &W, const std::vector<RobotState> &ws);

} // namespace zoro
