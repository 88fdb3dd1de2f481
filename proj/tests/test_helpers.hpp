#pragma once

#include "zoro/types.hpp"

#include <Eigen/Dense>

#include <random>

namespace zoro::testing
{
    inline ShapeMatrix random_psd(std::mt19937_64 &rng, int rank = kNs, double scale = 1.0)
    {
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::Matrix<double, kNs, Eigen::Dynamic> F(kNs, rank);
        for (int i = 0; i < kNs; ++i)
            for (int j = 0; j < rank; ++j)
                F(i, j) = scale * normal(rng);
        ShapeMatrix S = F * F.transpose();
        return 0.5 * (S + S.transpose());
    }

    inline StateMatrix random_matrix(std::mt19937_64 &rng, double scale = 1.0)
    {
        std::normal_distribution<double> normal(0.0, scale);
        StateMatrix M;
        for (int i = 0; i < kNs; ++i)
            for (int j = 0; j < kNs; ++j)
                M(i, j) = normal(rng);
        return M;
    }
} // namespace zoro::testing
