#include "zoro/noise_estimation.hpp"

#include "zoro/ocp.hpp"

#include <cmath>

namespace zoro
{
    std::vector<RobotState> model_residuals(const std::vector<RobotState> &states,
                                            const std::vector<ControlInput> &inputs, const DiscretizationParams &p)
    {
        if (states.empty() || inputs.size() + 1 < states.size())
            throw ConfigError("log", "need one input per transition");
        std::vector<RobotState> w;
        w.reserve(states.size() - 1);
        for (std::size_t k = 0; k + 1 < states.size(); ++k)
            w.push_back(tracking_error(states[k + 1], integrate_step(states[k], inputs[k], p)));
        return w;
    }

    NoiseEstimate estimate_noise_bounds(const std::vector<RobotState> &states, const std::vector<ControlInput> &inputs,
                                        const DiscretizationParams &p)
    {
        if (static_cast<int>(states.size()) < kMinNoiseSamples)
            throw ConfigError("log", "too few samples: need at least " + std::to_string(kMinNoiseSamples) +
                                         ", got " + std::to_string(states.size()));
        const std::vector<RobotState> w = model_residuals(states, inputs, p);
        const auto n = static_cast<double>(w.size());
        RobotState mean = RobotState::Zero();
        for (const RobotState &wk : w)
            mean += wk;
        mean /= n;
        RobotState var = RobotState::Zero();
        for (const RobotState &wk : w)
            var += (wk - mean).cwiseAbs2();
        var /= n - 1.0;

        NoiseEstimate est;
        est.samples = static_cast<int>(w.size());
        est.sigma = var.cwiseSqrt();
        est.W = (3.0 * est.sigma).cwiseAbs2().asDiagonal();
        return est;
    }

} // namespace zoro
