#pragma once

#include "zoro/reference.hpp"
#include "zoro/simulator.hpp"

namespace zoro::testing
{
    inline OcpSpec default_spec(int N = 20)
    {
        OcpSpec spec;
        spec.N = N;
        spec.disc = {0.05, 1};
        spec.weights.Q = RobotState(10, 10, 1, 0.1, 0.1).asDiagonal();
        spec.weights.Q_e = spec.weights.Q;
        spec.weights.R = Mat2::Identity() * 0.1;
        spec.bounds.v_min = -0.2;
        spec.bounds.v_max = 1.0;
        return spec;
    }

    inline RobustModel ellipsoidal_model(const OcpSpec &spec, const RobotState &w_diag)
    {
        RobustModel m;
        m.K = feedback_gain(DiffDriveParams{}, spec.disc);
        m.W.W = w_diag.asDiagonal();
        return m;
    }

    inline SimScenario line_scenario(int N, std::vector<Obstacle> obstacles, const RobotState &w_diag,
                                     NoiseMode mode = NoiseMode::kBoundary)
    {
        SimScenario sc;
        sc.spec = default_spec(N);
        sc.spec.obstacles = std::move(obstacles);
        ReferenceParams rp;
        rp.speed = 0.5;
        rp.duration = 20.0;
        sc.reference = generate_reference(ReferenceKind::kLine, rp, sc.spec.disc, sc.spec.bounds);
        sc.robust = ellipsoidal_model(sc.spec, w_diag);
        sc.scalar.eps_step = std::sqrt(w_diag.maxCoeff());
        sc.scalar.rho = std::exp(-1.0);
        sc.plant.noise = sc.robust.W;
        sc.plant.noise_mode = mode;
        return sc;
    }
} // namespace zoro::testing
