#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace zoro
{
    inline constexpr int kNs = 5;   // x, y, theta, v, omega
    inline constexpr int kNu = 2;   // a, alpha
    inline constexpr int kNkin = 3;
    inline constexpr int kNlin = 2;

    // state indices
    inline constexpr int kX = 0;
    inline constexpr int kY = 1;
    inline constexpr int kTheta = 2;
    inline constexpr int kV = 3;
    inline constexpr int kOmega = 4;
    // input indices
    inline constexpr int kAcc = 0;
    inline constexpr int kAlpha = 1;

    using RobotState = Eigen::Matrix<double, kNs, 1>;
    using ControlInput = Eigen::Matrix<double, kNu, 1>;
    using StateMatrix = Eigen::Matrix<double, kNs, kNs>;
    using InputMatrix = Eigen::Matrix<double, kNs, kNu>;
    using GainMatrix = Eigen::Matrix<double, kNu, kNs>;
    using Mat2 = Eigen::Matrix2d;
    using Vec7 = Eigen::Matrix<double, kNs + kNu, 1>;

    // Shape matrix of an ellipsoid E(S) = {y : y' S^-1 y <= 1}.
    using ShapeMatrix = StateMatrix;

    inline RobotState make_state(double x, double y, double theta, double v, double omega)
    {
        RobotState s;
        s << x, y, theta, v, omega;
        return s;
    }

    inline ControlInput make_input(double a, double alpha)
    {
        ControlInput u;
        u << a, alpha;
        return u;
    }

    /// Error raised for numerical failures inside the solvers (no convergence,
    /// infeasibility, PSD violations).
    class SolverError : public std::runtime_error
    {
    public:
        enum class Kind
        {
            kNoConvergence,
            kInfeasible,
            kMaxIterations,
            kPsdViolation,
            kDegenerate,
        };

        SolverError(Kind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}
        Kind kind() const { return kind_; }

    private:
        Kind kind_;
    };

    /// Error raised for invalid user-supplied configuration.
    class ConfigError : public std::runtime_error
    {
    public:
        ConfigError(const std::string &key, const std::string &what)
            : std::runtime_error(key + ": " + what), key_(key) {}
        const std::string &key() const { return key_; }

    private:
        std::string key_;
    };

} // namespace zoro
