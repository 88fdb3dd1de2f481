#pragma once

#include "zoro/model.hpp"

#include <vector>

namespace zoro
{
    struct NoiseEstimate
    {
        RobotState sigma = RobotState::Zero();   // per-component standard deviation
        ShapeMatrix W = ShapeMatrix::Zero();     // diag((3 sigma)^2)
        int samples = 0;                         // number of residuals
    };

    inline constexpr int kMinNoiseSamples = 31;

    /// Residuals w_k = s_{k+1} - psi(s_k, u_k) (heading wrapped) over a logged
    /// trajectory; states has one more entry than inputs, or equal length with
    /// the last input unused.
    std::vector<RobotState> model_residuals(const std::vector<RobotState> &states,
                                            const std::vector<ControlInput> &inputs, const DiscretizationParams &p);

    NoiseEstimate estimate_noise_bounds(const std::vector<RobotState> &states, const std::vector<ControlInput> &inputs,
                                        const DiscretizationParams &p);

} // namespace zoro
