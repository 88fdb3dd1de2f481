#pragma once

#include "zoro/oracle.hpp"
#include "zoro/zoro_solver.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace zoro
{
    enum class PlantMode
    {
        kIdeal,
        kDiffDriveMismatch,
    };

    enum class NoiseMode
    {
        kBoundary,
        kInterior,
        kOff,
    };

    struct PlantModel
    {
        PlantMode mode = PlantMode::kIdeal;
        DiffDriveParams dd;
        NoiseModel noise;
        NoiseMode noise_mode = NoiseMode::kOff;
        int noise_window = 0;  // samples per independently drawn disturbance trajectory; 0 = horizon N
    };

    enum class ControllerKind
    {
        kZoro,
        kNominal,
        kExact,
        kScalarTube,
    };

    ControllerKind parse_controller_kind(const std::string &name);
    std::string to_string(ControllerKind kind);
    PlantMode parse_plant_mode(const std::string &name);
    std::string to_string(PlantMode mode);
    NoiseMode parse_noise_mode(const std::string &name);
    std::string to_string(NoiseMode mode);

    /// Draws disturbances window by window; each window is a fresh
    /// horizon-length trajectory inside the stacked ellipsoid.
    class NoiseSource
    {
    public:
        NoiseSource(const PlantModel &plant, int window, std::uint64_t seed);

        RobotState next();

    private:
        NoiseModel W_;
        NoiseMode mode_;
        int window_;
        std::mt19937_64 rng_;
        std::vector<RobotState> buffer_;
        std::size_t cursor_ = 0;
    };

    /// Noise-free plant transition over `duration`. Ideal mode is the model
    /// itself. Mismatch mode drives the velocities by the first-order response
    /// toward the integrated commands and integrates the pose along them.
    RobotState plant_advance(const RobotState &s, const ControlInput &u, double duration, const PlantModel &plant,
                             int substeps);

    struct PlantStep
    {
        RobotState state;
        RobotState w;
    };

    /// One sample of the plant: `u_prev` acts for `delay` seconds, `u` for the rest.
    PlantStep plant_step(const RobotState &s, const ControlInput &u, const PlantModel &plant,
                         const DiscretizationParams &disc, NoiseSource &noise, const ControlInput &u_prev,
                         double delay = 0.0);
    PlantStep plant_step(const RobotState &s, const ControlInput &u, const PlantModel &plant,
                         const DiscretizationParams &disc, NoiseSource &noise);

    RobotState delay_compensate(const RobotState &s_measured, const ControlInput &u_pending, double delay,
                                int substeps = 1);

    struct SimScenario
    {
        std::string name = "scenario";
        OcpSpec spec;
        ReferenceTrajectory reference;
        RobustModel robust;           // ellipsoidal tube model for zoro / exact
        ScalarTube scalar;            // tube used by the scalar-tube controller
        PlantModel plant;
        ZoroSettings settings;
        OracleSettings oracle;
        double delay = 0.0;
        std::optional<RobotState> initial_state;  // default: first reference state
        int steps = 200;
        bool solve_to_convergence = false;         // zoro / nominal / scalar-tube
        std::uint64_t seed = 1;
    };

    RobustModel controller_model(const SimScenario &sc, ControllerKind kind);

    struct SimRow
    {
        int step = 0;
        double t = 0.0;
        RobotState state = RobotState::Zero();
        ControlInput command = ControlInput::Zero();
        RobotState w = RobotState::Zero();
        double err_pos = 0.0;
        double err_theta = 0.0;
        std::vector<double> clearance;  // per obstacle
        double clearance_min = 0.0;
        bool collision_active = false;
        double solve_ms = 0.0;
        int iterations = 0;
        bool converged = true;
        bool failed = false;
    };

    struct SimLog
    {
        ControllerKind controller = ControllerKind::kZoro;
        std::uint64_t seed = 0;
        int obstacles = 0;
        std::vector<SimRow> rows;
        RobotState final_state = RobotState::Zero();
        RobotState final_reference = RobotState::Zero();
    };

    SimLog run_closed_loop(const SimScenario &sc, ControllerKind controller, int steps, std::uint64_t seed);

    /// Stream seed for run `index` of a batch.
    std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

    /// Rollouts with seeds derive_seed(master, i), on `threads` workers (<= 0: ZORO_THREADS or hardware).
    std::vector<SimLog> run_batch(const SimScenario &sc, ControllerKind controller, int runs, std::uint64_t master_seed,
                                  int threads = 0);

    int worker_count(int requested);

    /// Order statistics without interpolation: element floor(q (n - 1)) of the
    /// sorted sample, so the median of an even count is the lower middle.
    struct Digest
    {
        std::size_t count = 0;
        double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    };

    Digest order_statistics(std::vector<double> values);

    struct TrackingBound
    {
        double bound = 0.0;     // 2 x max over the final window
        int entry_step = -1;    // first step after which every error stays within the bound
    };

    TrackingBound tracking_bound(const std::vector<double> &errors, int window = 50);

    struct SimMetrics
    {
        std::vector<double> tracking_error;
        TrackingBound bound;
        double max_tracking_error = 0.0;
        double final_position_error = 0.0;
        std::vector<double> min_clearance;  // per obstacle
        double min_clearance_all = 0.0;
        Digest clearance;                   // per-step minimum clearance
        Digest clearance_active;            // only steps with an active collision row
        Digest solve_ms;
        int failures = 0;
        int unconverged = 0;
    };

    SimMetrics compute_metrics(const SimLog &log);

    // Largest lateral distance from the reference path (polyline through all samples).
    double max_path_deviation(const SimLog &log, const ReferenceTrajectory &ref);

} // namespace zoro
