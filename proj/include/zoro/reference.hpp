#pragma once

#include "zoro/ocp.hpp"

#include <string>
#include <vector>

namespace zoro
{
    enum class ReferenceKind
    {
        kLine,
        kCircle,
        kFigureEight,
        kWaypointSpline,
    };

    ReferenceKind parse_reference_kind(const std::string &name);
    std::string to_string(ReferenceKind kind);

    struct ReferenceParams
    {
        double speed = 0.5;        // [m/s]
        double duration = 20.0;    // [s]
        double x0 = 0.0;
        double y0 = 0.0;
        double heading = 0.0;      // initial heading [rad]
        double radius = 2.0;       // circle radius / figure-eight lobe radius [m]
        bool counter_clockwise = true;
        std::vector<Eigen::Vector2d> waypoints;  // waypoint-spline only
        double lookahead = 0.5;    // waypoint-spline tracking lookahead [m]
        double ramp_time = 0.0;    // speed ramp-up duration from rest [s]
    };

    /// Builds a reference by forward-simulating a smooth (a, alpha) profile
    /// through integrate_step, so consecutive samples are dynamics-consistent.
    ReferenceTrajectory generate_reference(ReferenceKind kind, const ReferenceParams &params,
                                           const DiscretizationParams &disc, const Bounds &bounds);

} // namespace zoro
