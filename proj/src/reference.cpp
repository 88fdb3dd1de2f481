#include "zoro/reference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace zoro
{
    namespace
    {
        constexpr double kBoundSlack = 1e-12;

        struct Targets
        {
            double v = 0.0;
            double omega = 0.0;
        };

        // Next-sample velocity targets given the time of that sample and the current state.
        using TargetFn = std::function<Targets(double t_next, const RobotState &s)>;

        void check_input(const ControlInput &u, const Bounds &b, int k)
        {
            if (u[kAcc] > b.a_max + kBoundSlack || u[kAcc] < b.a_min - kBoundSlack)
                throw ConfigError("reference", "acceleration out of bounds at sample " + std::to_string(k));
            if (u[kAlpha] > b.alpha_max + kBoundSlack || u[kAlpha] < b.alpha_min - kBoundSlack)
                throw ConfigError("reference", "angular acceleration out of bounds at sample " + std::to_string(k));
        }

        void check_state(const RobotState &s, const Bounds &b, int k)
        {
            if (s[kV] > b.v_max + kBoundSlack || s[kV] < b.v_min - kBoundSlack)
                throw ConfigError("reference.speed", "velocity out of bounds at sample " + std::to_string(k));
            if (s[kOmega] > b.omega_max + kBoundSlack || s[kOmega] < b.omega_min - kBoundSlack)
                throw ConfigError("reference", "angular velocity out of bounds at sample " + std::to_string(k));
        }

        ReferenceTrajectory forward_simulate(const RobotState &s0, int samples, const TargetFn &targets,
                                             const DiscretizationParams &disc, const Bounds &bounds,
                                             const std::function<bool(const RobotState &)> &stop = {})
        {
            ReferenceTrajectory ref;
            ref.dt = disc.dt;
            ref.states.push_back(s0);
            check_state(s0, bounds, 0);
            for (int k = 0; k < samples; ++k)
            {
                const RobotState &s = ref.states.back();
                const Targets tgt = targets((k + 1) * disc.dt, s);
                // the (v, omega) rows integrate exactly, so the targets are hit exactly
                const ControlInput u = make_input((tgt.v - s[kV]) / disc.dt, (tgt.omega - s[kOmega]) / disc.dt);
                check_input(u, bounds, k);
                ref.inputs.push_back(u);
                ref.states.push_back(integrate_step(s, u, disc));
                check_state(ref.states.back(), bounds, k + 1);
                if (stop && stop(ref.states.back()))
                    break;
            }
            return ref;
        }

        double ramped_speed(const ReferenceParams &p, double t)
        {
            if (p.ramp_time <= 0.0)
                return p.speed;
            return p.speed * std::min(1.0, t / p.ramp_time);
        }

        RobotState initial_state(const ReferenceParams &p)
        {
            return make_state(p.x0, p.y0, p.heading, ramped_speed(p, 0.0), 0.0);
        }

        std::vector<Eigen::Vector2d> catmull_rom(const std::vector<Eigen::Vector2d> &pts, int per_segment)
        {
            std::vector<Eigen::Vector2d> out;
            const int n = static_cast<int>(pts.size());
            auto at = [&](int i) { return pts[static_cast<std::size_t>(std::clamp(i, 0, n - 1))]; };
            for (int i = 0; i + 1 < n; ++i)
            {
                const Eigen::Vector2d p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
                for (int j = 0; j < per_segment; ++j)
                {
                    const double t = static_cast<double>(j) / per_segment;
                    const double t2 = t * t, t3 = t2 * t;
                    out.push_back(0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                                         (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3));
                }
            }
            out.push_back(pts.back());
            return out;
        }
    } // namespace

    ReferenceKind parse_reference_kind(const std::string &name)
    {
        if (name == "line")
            return ReferenceKind::kLine;
        if (name == "circle")
            return ReferenceKind::kCircle;
        if (name == "figure-eight")
            return ReferenceKind::kFigureEight;
        if (name == "waypoint-spline")
            return ReferenceKind::kWaypointSpline;
        throw ConfigError("reference.kind", "unknown generator '" + name + "'");
    }

    std::string to_string(ReferenceKind kind)
    {
        switch (kind)
        {
        case ReferenceKind::kLine:
            return "line";
        case ReferenceKind::kCircle:
            return "circle";
        case ReferenceKind::kFigureEight:
            return "figure-eight";
        case ReferenceKind::kWaypointSpline:
            return "waypoint-spline";
        }
        return "unknown";
    }

    ReferenceTrajectory generate_reference(ReferenceKind kind, const ReferenceParams &p,
                                           const DiscretizationParams &disc, const Bounds &bounds)
    {
        disc.validate();
        if (!(p.speed > 0.0))
            throw ConfigError("reference.speed", "must be positive");
        if (p.speed > bounds.v_max)
            throw ConfigError("reference.speed", "exceeds bounds.v_max");
        if (!(p.duration > 0.0))
            throw ConfigError("reference.duration", "must be positive");
        const int samples = static_cast<int>(std::lround(p.duration / disc.dt));
        const double turn = p.counter_clockwise ? 1.0 : -1.0;

        switch (kind)
        {
        case ReferenceKind::kLine:
            return forward_simulate(
                initial_state(p), samples, [&](double t, const RobotState &) { return Targets{ramped_speed(p, t), 0.0}; },
                disc, bounds);

        case ReferenceKind::kCircle:
        {
            if (!(p.radius > 0.0))
                throw ConfigError("reference.radius", "must be positive");
            RobotState s0 = initial_state(p);
            s0[kOmega] = turn * s0[kV] / p.radius;
            return forward_simulate(
                s0, samples,
                [&](double t, const RobotState &) {
                    const double v = ramped_speed(p, t);
                    return Targets{v, turn * v / p.radius};
                },
                disc, bounds);
        }

        case ReferenceKind::kFigureEight:
        {
            if (!(p.radius > 0.0))
                throw ConfigError("reference.radius", "must be positive");
            // omega = w0 sin(2 pi t / T) with each half period turning one full lap
            const double w0 = p.speed / p.radius;
            const double period = 2.0 * std::numbers::pi * std::numbers::pi / w0;
            return forward_simulate(
                initial_state(p), samples,
                [&, w0, period](double t, const RobotState &) {
                    const double v = ramped_speed(p, t);
                    return Targets{v, turn * (v / p.speed) * w0 * std::sin(2.0 * std::numbers::pi * t / period)};
                },
                disc, bounds);
        }

        case ReferenceKind::kWaypointSpline:
        {
            if (p.waypoints.size() < 2)
                throw ConfigError("reference.waypoints", "need at least 2 points");
            if (!(p.lookahead > 0.0))
                throw ConfigError("reference.lookahead", "must be positive");
            const std::vector<Eigen::Vector2d> path = catmull_rom(p.waypoints, 50);
            RobotState s0 = initial_state(p);
            s0[kX] = path.front().x();
            s0[kY] = path.front().y();
            const Eigen::Vector2d first_dir = path[1] - path[0];
            s0[kTheta] = std::atan2(first_dir.y(), first_dir.x());

            std::size_t progress = 0;
            auto advance = [&](const RobotState &s) {
                const Eigen::Vector2d pos(s[kX], s[kY]);
                double best = (path[progress] - pos).norm();
                for (std::size_t i = progress + 1; i < path.size() && i < progress + 200; ++i)
                {
                    const double d = (path[i] - pos).norm();
                    if (d < best)
                    {
                        best = d;
                        progress = i;
                    }
                }
            };
            // pure pursuit on the sampled spline
            auto targets = [&](double t, const RobotState &s) {
                advance(s);
                const Eigen::Vector2d pos(s[kX], s[kY]);
                std::size_t look = progress;
                while (look + 1 < path.size() && (path[look] - pos).norm() < p.lookahead)
                    ++look;
                const Eigen::Vector2d d = path[look] - pos;
                const double err = shortest_angle(std::atan2(d.y(), d.x()) - s[kTheta]);
                const double v = ramped_speed(p, t);
                double omega = 2.0 * v * std::sin(err) / std::max(d.norm(), 1e-9);
                omega = std::clamp(omega, bounds.omega_min, bounds.omega_max);
                omega = std::clamp(omega, s[kOmega] + bounds.alpha_min * disc.dt, s[kOmega] + bounds.alpha_max * disc.dt);
                return Targets{v, omega};
            };
            const int max_samples = std::max(samples, static_cast<int>(10.0 * p.duration / disc.dt));
            return forward_simulate(s0, max_samples, targets, disc, bounds, [&](const RobotState &s) {
                return (Eigen::Vector2d(s[kX], s[kY]) - path.back()).norm() < 0.5 * p.speed * disc.dt ||
                       (progress + 1 >= path.size());
            });
        }
        }
        throw ConfigError("reference.kind", "unsupported generator");
    }

} // namespace zoro
