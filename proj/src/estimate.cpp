#include "afem/estimate.hpp"

#include "afem/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace afem {

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

struct ElementResiduals
{
    double r_y_sq = 0.0;  // int_T r_y^2
    double r_p_sq = 0.0;
    double osc_y = 0.0;   // int_T (r_y - mean)^2
    double osc_p = 0.0;
};

// Element residuals r_y = f + u_h - c y_h and r_p = y_h - y_d - c p_h; the second-order
// terms vanish for P1 with constant A.
ElementResiduals element_residuals(const Mesh& mesh, int t, const OcpProblem& prob, const OcpSolution& sol,
                                   const QuadratureRule& rule)
{
    const std::size_t nq = rule.size();
    std::vector<double> ry(nq), rp(nq), w(nq);
    const double jac = 2.0 * mesh.geometry(t).area;
    for (std::size_t q = 0; q < nq; ++q) {
        const auto& bary = rule.points[q];
        const Point x = mesh.to_physical(t, bary);
        const double y = evaluate_p1(mesh, sol.y, t, bary).value;
        const double p = evaluate_p1(mesh, sol.p, t, bary).value;
        const double u = project_control(p, sol.alpha, sol.lower, sol.upper);
        ry[q] = prob.f_extra(x) + u - prob.coeff.c * y;
        rp[q] = y - prob.y_d(x) - prob.coeff.c * p;
        w[q] = rule.weights[q] * jac;
    }
    ElementResiduals r;
    double wsum = 0.0, my = 0.0, mp = 0.0;
    for (std::size_t q = 0; q < nq; ++q) {
        wsum += w[q];
        my += w[q] * ry[q];
        mp += w[q] * rp[q];
        r.r_y_sq += w[q] * ry[q] * ry[q];
        r.r_p_sq += w[q] * rp[q] * rp[q];
    }
    my /= wsum;
    mp /= wsum;
    for (std::size_t q = 0; q < nq; ++q) {
        r.osc_y += w[q] * (ry[q] - my) * (ry[q] - my);
        r.osc_p += w[q] * (rp[q] - mp) * (rp[q] - mp);
    }
    return r;
}

} // namespace

double Indicators::eta_y_total_sq() const { return sum(eta_y_sq); }
double Indicators::eta_p_total_sq() const { return sum(eta_p_sq); }
double Indicators::eta_total_sq() const { return sum(eta_sq); }
double Indicators::osc_total_sq() const { return sum(osc_y_sq) + sum(osc_p_sq); }

Indicators compute_indicators(const P1Space& space, const OcpProblem& prob, const OcpSolution& sol,
                              const QuadratureRule& rule)
{
    const Mesh& mesh = space.mesh();
    const std::size_t ne = mesh.element_count();
    Indicators ind;
    ind.eta_y_sq.assign(ne, 0.0);
    ind.eta_p_sq.assign(ne, 0.0);
    ind.osc_y_sq.assign(ne, 0.0);
    ind.osc_p_sq.assign(ne, 0.0);

    std::vector<Point> flux_y(ne), flux_p(ne);
    parallel_for(ne, [&](std::size_t ti) {
        const int t = static_cast<int>(ti);
        const double h = mesh.geometry(t).diameter;
        const auto r = element_residuals(mesh, t, prob, sol, rule);
        ind.eta_y_sq[ti] = h * h * r.r_y_sq;
        ind.eta_p_sq[ti] = h * h * r.r_p_sq;
        ind.osc_y_sq[ti] = h * h * r.osc_y;
        ind.osc_p_sq[ti] = h * h * r.osc_p;
        const std::array<double, 3> centre{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        flux_y[ti] = prob.coeff.apply(evaluate_p1(mesh, sol.y, t, centre).gradient);
        flux_p[ti] = prob.coeff.apply(evaluate_p1(mesh, sol.p, t, centre).gradient);
    });

    // Normal flux jumps on interior edges; boundary edges carry no jump term. The jump of a
    // P1 flux is constant along the edge, so two-point Gauss gives |E| * j^2 exactly.
    const double gauss_w[2] = {0.5, 0.5};
    for (int e = 0; e < static_cast<int>(mesh.edge_count()); ++e) {
        if (mesh.is_boundary_edge(e))
            continue;
        const auto [a, b] = mesh.edge_vertices(e);
        const auto [t1, t2] = mesh.edge_elements(e);
        const Point d = mesh.point(b) - mesh.point(a);
        const double len = norm(d);
        const Point n{d.y / len, -d.x / len};
        const double jy = dot(flux_y[static_cast<std::size_t>(t1)] - flux_y[static_cast<std::size_t>(t2)], n);
        const double jp = dot(flux_p[static_cast<std::size_t>(t1)] - flux_p[static_cast<std::size_t>(t2)], n);
        double int_y = 0.0, int_p = 0.0;
        for (double gw : gauss_w) {
            int_y += gw * len * jy * jy;
            int_p += gw * len * jp * jp;
        }
        for (int t : {t1, t2}) {
            ind.eta_y_sq[static_cast<std::size_t>(t)] += len * int_y;
            ind.eta_p_sq[static_cast<std::size_t>(t)] += len * int_p;
        }
    }

    ind.eta_sq.resize(ne);
    for (std::size_t t = 0; t < ne; ++t)
        ind.eta_sq[t] = ind.eta_y_sq[t] + ind.eta_p_sq[t];
    return ind;
}

Oscillation compute_oscillation(const P1Space& space, const OcpProblem& prob, const OcpSolution& sol,
                                const QuadratureRule& rule)
{
    const Mesh& mesh = space.mesh();
    const std::size_t ne = mesh.element_count();
    Oscillation osc;
    osc.osc_y_sq.assign(ne, 0.0);
    osc.osc_p_sq.assign(ne, 0.0);
    parallel_for(ne, [&](std::size_t ti) {
        const int t = static_cast<int>(ti);
        const double h = mesh.geometry(t).diameter;
        const auto r = element_residuals(mesh, t, prob, sol, rule);
        osc.osc_y_sq[ti] = h * h * r.osc_y;
        osc.osc_p_sq[ti] = h * h * r.osc_p;
    });
    osc.total_sq = sum(osc.osc_y_sq) + sum(osc.osc_p_sq);
    return osc;
}

double element_oscillation_sq(const Mesh& mesh, int t, const QuadFunction& g, const QuadratureRule& rule)
{
    const auto geo = mesh.geometry(t);
    std::vector<double> v(rule.size());
    double mean = 0.0, wsum = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        v[q] = g({t, static_cast<int>(q), rule.points[q], mesh.to_physical(t, rule.points[q])});
        mean += rule.weights[q] * v[q];
        wsum += rule.weights[q];
    }
    mean /= wsum;
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q)
        s += rule.weights[q] * 2.0 * geo.area * (v[q] - mean) * (v[q] - mean);
    return geo.diameter * geo.diameter * s;
}

MarkResult dorfler_mark(std::span<const double> eta_sq, double theta)
{
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("dorfler: theta must lie in (0, 1)");
    MarkResult out;
    double total = 0.0;
    for (double v : eta_sq) {
        if (v < 0.0 || !std::isfinite(v))
            throw std::invalid_argument("dorfler: indicators must be finite and non-negative");
        total += v;
    }
    if (total == 0.0) {
        out.converged = true;
        return out;
    }
    std::vector<int> order(eta_sq.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return eta_sq[static_cast<std::size_t>(a)] > eta_sq[static_cast<std::size_t>(b)];
    });
    const double target = theta * total;
    double acc = 0.0;
    for (int t : order) {
        out.marked.push_back(t);
        acc += eta_sq[static_cast<std::size_t>(t)];
        if (acc >= target)
            break;
    }
    return out;
}

} // namespace afem
