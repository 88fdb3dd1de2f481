#include "zoro/simulator.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace zoro
{
    ControllerKind parse_controller_kind(const std::string &name)
    {
        if (name == "zoro")
            return ControllerKind::kZoro;
        if (name == "nominal")
            return ControllerKind::kNominal;
        if (name == "exact")
            return ControllerKind::kExact;
        if (name == "scalar-tube")
            return ControllerKind::kScalarTube;
        throw ConfigError("controller", "unknown controller '" + name + "'");
    }

    std::string to_string(ControllerKind kind)
    {
        switch (kind)
        {
        case ControllerKind::kZoro:
            return "zoro";
        case ControllerKind::kNominal:
            return "nominal";
        case ControllerKind::kExact:
            return "exact";
        case ControllerKind::kScalarTube:
            return "scalar-tube";
        }
        return "unknown";
    }

    PlantMode parse_plant_mode(const std::string &name)
    {
        if (name == "ideal")
            return PlantMode::kIdeal;
        if (name == "diff-drive-mismatch")
            return PlantMode::kDiffDriveMismatch;
        throw ConfigError("plant", "unknown plant mode '" + name + "'");
    }

    std::string to_string(PlantMode mode)
    {
        return mode == PlantMode::kIdeal ? "ideal" : "diff-drive-mismatch";
    }

    NoiseMode parse_noise_mode(const std::string &name)
    {
        if (name == "boundary")
            return NoiseMode::kBoundary;
        if (name == "interior")
            return NoiseMode::kInterior;
        if (name == "off")
            return NoiseMode::kOff;
        throw ConfigError("noise.mode", "unknown noise mode '" + name + "'");
    }

    std::string to_string(NoiseMode mode)
    {
        switch (mode)
        {
        case NoiseMode::kBoundary:
            return "boundary";
        case NoiseMode::kInterior:
            return "interior";
        case NoiseMode::kOff:
            return "off";
        }
        return "unknown";
    }

    NoiseSource::NoiseSource(const PlantModel &plant, int window, std::uint64_t seed)
        : W_(plant.noise), mode_(plant.noise_mode), window_(std::max(1, window)), rng_(seed)
    {
    }

    RobotState NoiseSource::next()
    {
        if (mode_ == NoiseMode::kOff)
            return RobotState::Zero();
        if (cursor_ >= buffer_.size())
        {
            buffer_ = sample_disturbance_trajectory(
                W_, window_, rng_, mode_ == NoiseMode::kBoundary ? SampleMode::kBoundary : SampleMode::kInterior);
            cursor_ = 0;
        }
        return buffer_[cursor_++];
    }

    namespace
    {
        // Kinematics driven by the analytic first-order velocity response.
        RobotState mismatch_advance(const RobotState &s, double v_cmd, double omega_cmd, double duration,
                                    const DiffDriveParams &dd, int fine_steps)
        {
            auto vel = [&](double t) { return diff_drive_response(s[kV], s[kOmega], v_cmd, omega_cmd, t, dd); };
            auto rhs = [](const Eigen::Vector3d &q, const Velocities &w) {
                return Eigen::Vector3d(w.v * std::cos(q[2]), w.v * std::sin(q[2]), w.omega);
            };
            Eigen::Vector3d q = s.head<3>();
            const double h = duration / fine_steps;
            for (int i = 0; i < fine_steps; ++i)
            {
                const double t = i * h;
                const Velocities w0 = vel(t), wm = vel(t + 0.5 * h), w1 = vel(t + h);
                const Eigen::Vector3d k1 = rhs(q, w0);
                const Eigen::Vector3d k2 = rhs(q + 0.5 * h * k1, wm);
                const Eigen::Vector3d k3 = rhs(q + 0.5 * h * k2, wm);
                const Eigen::Vector3d k4 = rhs(q + h * k3, w1);
                q += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            const Velocities end = vel(duration);
            RobotState next;
            next << q, end.v, end.omega;
            return next;
        }
    } // namespace

    RobotState plant_advance(const RobotState &s, const ControlInput &u, double duration, const PlantModel &plant,
                             int substeps)
    {
        if (plant.mode != PlantMode::kDiffDriveMismatch)
            return integrate_for(s, u, duration, substeps);
        const double v_cmd = s[kV] + duration * u[kAcc];
        const double omega_cmd = s[kOmega] + duration * u[kAlpha];
        return mismatch_advance(s, v_cmd, omega_cmd, duration, plant.dd, std::max(20, 10 * substeps));
    }

    PlantStep plant_step(const RobotState &s, const ControlInput &u, const PlantModel &plant,
                         const DiscretizationParams &disc, NoiseSource &noise, const ControlInput &u_prev, double delay)
    {
        RobotState next;
        if (delay > 0.0)
        {
            const double d = std::min(delay, disc.dt);
            next = plant_advance(s, u_prev, d, plant, disc.substeps);
            if (d < disc.dt)
                next = plant_advance(next, u, disc.dt - d, plant, disc.substeps);
        }
        else
        {
            next = plant.mode == PlantMode::kIdeal ? integrate_step(s, u, disc)
                                                   : plant_advance(s, u, disc.dt, plant, disc.substeps);
        }
        PlantStep out;
        out.w = noise.next();
        out.state = next + out.w;
        return out;
    }

    PlantStep plant_step(const RobotState &s, const ControlInput &u, const PlantModel &plant,
                         const DiscretizationParams &disc, NoiseSource &noise)
    {
        return plant_step(s, u, plant, disc, noise, u, 0.0);
    }

    RobotState delay_compensate(const RobotState &s_measured, const ControlInput &u_pending, double delay,
                                int substeps)
    {
        if (delay < 0.0)
            throw ConfigError("delay", "must be >= 0");
        if (delay == 0.0)
            return s_measured;
        return integrate_for(s_measured, u_pending, delay, substeps);
    }

    RobustModel controller_model(const SimScenario &sc, ControllerKind kind)
    {
        switch (kind)
        {
        case ControllerKind::kNominal:
            return RobustModel::nominal();
        case ControllerKind::kScalarTube:
        {
            RobustModel m = sc.robust;
            m.kind = TubeKind::kScalar;
            m.scalar = sc.scalar;
            return m;
        }
        case ControllerKind::kZoro:
        case ControllerKind::kExact:
            break;
        }
        RobustModel m = sc.robust;
        m.kind = TubeKind::kEllipsoidal;
        return m;
    }

    namespace
    {
        OcpSolution controller_step(const SimScenario &sc, ControllerKind kind, const RobustModel &model,
                                    const RobotState &s0, const ReferenceWindow &window, const OcpSolution &guess)
        {
            if (kind == ControllerKind::kExact)
                return solve_exact_robust(s0, sc.spec, window, model, sc.settings, sc.oracle, guess);
            if (sc.solve_to_convergence)
                return zoro_solve_to_convergence(s0, sc.settings, sc.spec, window, model, guess);
            return zoro_step(s0, guess, sc.settings, sc.spec, window, model);
        }
    } // namespace

    SimLog run_closed_loop(const SimScenario &sc, ControllerKind controller, int steps, std::uint64_t seed)
    {
        sc.spec.validate();
        sc.settings.validate();
        if (steps < 0)
            throw ConfigError("steps", "must be >= 0");
        if (sc.delay < 0.0 || sc.delay > sc.spec.disc.dt)
            throw ConfigError("delay", "must lie in [0, dt]");

        const OcpSpec &spec = sc.spec;
        const RobustModel model = controller_model(sc, controller);
        const ConstraintBlocks blocks = constraint_blocks(spec);
        NoiseSource noise(sc.plant, sc.plant.noise_window > 0 ? sc.plant.noise_window : spec.N, seed);

        SimLog log;
        log.controller = controller;
        log.seed = seed;
        log.obstacles = static_cast<int>(spec.obstacles.size());
        log.rows.reserve(static_cast<std::size_t>(steps));

        RobotState s = sc.initial_state.value_or(reference_window(sc.reference, 0, 0).states.front());
        ControlInput u_prev = reference_window(sc.reference, 0, 1).inputs.front();
        std::optional<OcpSolution> prev;

        for (int t = 0; t < steps; ++t)
        {
            const ReferenceWindow window = reference_window(sc.reference, t, spec.N);
            const RobotState s0 = delay_compensate(s, u_prev, sc.delay, spec.disc.substeps);
            const OcpSolution guess = prev ? shift_solution(*prev) : cold_start(s0, window, spec);

            SimRow row;
            row.step = t;
            row.t = t * spec.disc.dt;
            row.state = s;

            const auto start = std::chrono::steady_clock::now();
            try
            {
                OcpSolution sol = controller_step(sc, controller, model, s0, window, guess);
                row.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
                row.iterations = sol.iterations;
                row.converged = sol.converged;
                row.collision_active = sol.collision_active(blocks);
                row.command = sol.command();
                prev = std::move(sol);
            }
            catch (const SolverError &)
            {
                row.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
                row.failed = true;
                row.converged = false;
                row.command = u_prev;
                prev = guess;
            }

            const RobotState err = tracking_error(s, window.states.front());
            row.err_pos = std::hypot(err[kX], err[kY]);
            row.err_theta = err[kTheta];
            row.clearance_min = std::numeric_limits<double>::infinity();
            for (const Obstacle &obs : spec.obstacles)
            {
                row.clearance.push_back(clearance(s, obs, spec.robot_radius));
                row.clearance_min = std::min(row.clearance_min, row.clearance.back());
            }

            const PlantStep next = plant_step(s, row.command, sc.plant, spec.disc, noise, u_prev, sc.delay);
            row.w = next.w;
            s = next.state;
            u_prev = row.command;
            log.rows.push_back(std::move(row));
        }
        log.final_state = s;
        log.final_reference = reference_window(sc.reference, steps, 0).states.front();
        return log;
    }

    std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
        std::array<std::uint32_t, 2> out{};
        seq.generate(out.begin(), out.end());
        return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    }

    int worker_count(int requested)
    {
        if (requested > 0)
            return requested;
        if (const char *env = std::getenv("ZORO_THREADS"))
        {
            const int n = std::atoi(env);
            if (n > 0)
                return n;
        }
        return std::max(1u, std::thread::hardware_concurrency());
    }

    std::vector<SimLog> run_batch(const SimScenario &sc, ControllerKind controller, int runs, std::uint64_t master_seed,
                                  int threads)
    {
        std::vector<SimLog> logs(static_cast<std::size_t>(std::max(runs, 0)));
        std::vector<std::exception_ptr> errors(logs.size());
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int i = next++; i < runs; i = next++)
            {
                try
                {
                    logs[static_cast<std::size_t>(i)] =
                        run_closed_loop(sc, controller, sc.steps, derive_seed(master_seed, static_cast<std::uint64_t>(i)));
                }
                catch (...)
                {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        };
        const int n = std::min(worker_count(threads), std::max(runs, 1));
        {
            std::vector<std::jthread> pool;
            for (int w = 1; w < n; ++w)
                pool.emplace_back(worker);
            worker();
        }
        for (const auto &e : errors)
            if (e)
                std::rethrow_exception(e);
        return logs;
    }

    Digest order_statistics(std::vector<double> values)
    {
        Digest d;
        d.count = values.size();
        if (values.empty())
        {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            d.min = d.q1 = d.median = d.q3 = d.max = nan;
            return d;
        }
        std::sort(values.begin(), values.end());
        const std::size_t last = values.size() - 1;
        d.min = values.front();
        d.q1 = values[last / 4];
        d.median = values[last / 2];
        d.q3 = values[(3 * last) / 4];
        d.max = values.back();
        return d;
    }

    TrackingBound tracking_bound(const std::vector<double> &errors, int window)
    {
        TrackingBound out;
        if (errors.empty())
            return out;
        const std::size_t w = std::min(errors.size(), static_cast<std::size_t>(std::max(window, 1)));
        out.bound = 2.0 * *std::max_element(errors.end() - static_cast<std::ptrdiff_t>(w), errors.end());
        int entry = static_cast<int>(errors.size());
        while (entry > 0 && errors[static_cast<std::size_t>(entry - 1)] <= out.bound)
            --entry;
        out.entry_step = entry;
        return out;
    }

    SimMetrics compute_metrics(const SimLog &log)
    {
        SimMetrics m;
        std::vector<double> clear_all, clear_active, solve;
        m.min_clearance.assign(static_cast<std::size_t>(log.obstacles), std::numeric_limits<double>::infinity());
        m.min_clearance_all = std::numeric_limits<double>::infinity();
        for (const SimRow &row : log.rows)
        {
            m.tracking_error.push_back(row.err_pos);
            m.max_tracking_error = std::max(m.max_tracking_error, row.err_pos);
            for (std::size_t i = 0; i < row.clearance.size() && i < m.min_clearance.size(); ++i)
                m.min_clearance[i] = std::min(m.min_clearance[i], row.clearance[i]);
            if (!row.clearance.empty())
            {
                m.min_clearance_all = std::min(m.min_clearance_all, row.clearance_min);
                clear_all.push_back(row.clearance_min);
                if (row.collision_active)
                    clear_active.push_back(row.clearance_min);
            }
            solve.push_back(row.solve_ms);
            m.failures += row.failed ? 1 : 0;
            m.unconverged += row.converged ? 0 : 1;
        }
        m.bound = tracking_bound(m.tracking_error);
        m.final_position_error = std::hypot(log.final_state[kX] - log.final_reference[kX],
                                            log.final_state[kY] - log.final_reference[kY]);
        m.clearance = order_statistics(std::move(clear_all));
        m.clearance_active = order_statistics(std::move(clear_active));
        m.solve_ms = order_statistics(std::move(solve));
        return m;
    }

    double max_path_deviation(const SimLog &log, const ReferenceTrajectory &ref)
    {
        auto distance_to_path = [&](double x, double y) {
            const Eigen::Vector2d p(x, y);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i + 1 < ref.states.size(); ++i)
            {
                const Eigen::Vector2d a(ref.states[i][kX], ref.states[i][kY]);
                const Eigen::Vector2d b(ref.states[i + 1][kX], ref.states[i + 1][kY]);
                const Eigen::Vector2d ab = b - a;
                const double len2 = ab.squaredNorm();
                const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
                best = std::min(best, (a + t * ab - p).norm());
            }
            if (ref.states.size() == 1)
                best = (Eigen::Vector2d(ref.states[0][kX], ref.states[0][kY]) - p).norm();
            return best;
        };
        double worst = 0.0;
        for (const SimRow &row : log.rows)
            worst = std::max(worst, distance_to_path(row.state[kX], row.state[kY]));
        return std::max(worst, distance_to_path(log.final_state[kX], log.final_state[kY]));
    }

} // namespace zoro
