#pragma once

#include "afem/ocp.hpp"

#include <span>
#include <vector>

namespace afem {

/// Per-element squared residual indicators and oscillations for state and adjoint.
struct Indicators
{
    std::vector<double> eta_y_sq;
    std::vector<double> eta_p_sq;
    std::vector<double> eta_sq;  // eta_y_sq + eta_p_sq
    std::vector<double> osc_y_sq;
    std::vector<double> osc_p_sq;

    double eta_y_total_sq() const;
    double eta_p_total_sq() const;
    double eta_total_sq() const;
    double osc_total_sq() const;
};

/// eta_y^2(T) = h_T^2 ||f + u_h - c y_h||_T^2 + sum_{interior E in dT} h_E ||[A grad y_h].n||_E^2,
/// eta_p^2(T) likewise with y_h - y_d - c p_h and the jump of A grad p_h. Oscillations are
/// h_T^2 ||g - mean_T g||_T^2 of the same element residuals. `rule` integrates element terms.
Indicators compute_indicators(const P1Space& space, const OcpProblem& prob, const OcpSolution& sol,
                              const QuadratureRule& rule = degree5_rule());

struct Oscillation
{
    std::vector<double> osc_y_sq;
    std::vector<double> osc_p_sq;
    double total_sq = 0.0;
};

Oscillation compute_oscillation(const P1Space& space, const OcpProblem& prob, const OcpSolution& sol,
                                const QuadratureRule& rule = degree5_rule());

/// h_T^2 * int_T (g - mean_T g)^2 with the mean taken under the same rule.
double element_oscillation_sq(const Mesh& mesh, int t, const QuadFunction& g, const QuadratureRule& rule);

struct MarkResult
{
    std::vector<int> marked;  // in order of decreasing indicator
    bool converged = false;   // all indicators vanish
};

/// Shortest prefix of the indicators sorted by decreasing value (ties: ascending index)
/// whose sum reaches theta times the total. Throws std::invalid_argument unless 0 < theta < 1.
MarkResult dorfler_mark(std::span<const double> eta_sq, double theta);

} // namespace afem
