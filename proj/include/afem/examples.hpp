#pragma once

#include "afem/mesh.hpp"
#include "afem/ocp.hpp"

#include <string>

namespace afem {

struct ExampleSpec
{
    std::string id;  // "1", "2", "3" or "smoke"
    DomainSpec domain;
    OcpProblem prob;
    bool has_exact = false;
    double default_theta = 0.4;
};

/// Corner singularity on the three-quarter disk 0 < r < 1, 0 < theta < 3pi/2:
/// y = (r^l - r^nu1) sin(l theta), p = alpha (r^l - r^nu2) sin(l theta), l = 2/3,
/// alpha = 0.1, u in [-0.3, 1]. The source f and target y_d are manufactured so that
/// (y, p, u) solves the optimality system.
ExampleSpec example1(double nu1 = 2.5, double nu2 = 2.5, bool snap_to_arc = true, int arc_segments = 12);

/// (-1,1)^2, alpha = 1e-3, u in [-10, 10], y_d = 10, 1, -10, -1 in quadrants I..IV.
ExampleSpec example2();

/// (-1,1)^2 minus the closed lower-right quarter [0,1) x (-1,0], alpha = 1e-2, u in [0, 8], y_d = 2.
ExampleSpec example3();

/// Unit square with smooth exact solution y = sin(pi x) sin(pi y), p = -2 alpha y,
/// alpha = 0.1, u = clamp(2y, 0, 1). Small enough for quick checks.
ExampleSpec smoke_example();

/// Throws std::invalid_argument on an unknown id.
ExampleSpec make_example(const std::string& id);

/// Point-in-domain test for the analytic domains (open sets).
bool domain_contains(const DomainSpec& domain, Point x);

/// Polar angle mapped to [-pi/4, 7pi/4), so the three-quarter disk has angles in [0, 3pi/2].
double sector_angle(Point x);

} // namespace afem
