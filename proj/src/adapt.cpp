#include "afem/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace afem {

void StopRule::validate() const
{
    const bool any = max_iters != std::numeric_limits<int>::max() ||
                     max_dofs != std::numeric_limits<long>::max() || eta_tol > 0.0;
    if (!any)
        throw std::invalid_argument("stop rule: at least one bound must be finite");
    if (max_iters < 0 || max_dofs < 0 || eta_tol < 0.0)
        throw std::invalid_argument("stop rule: bounds must be non-negative");
}

double AdaptRecord::quasi_error(double gamma) const
{
    if (!err_yp)
        throw std::logic_error("quasi error needs exact-solution errors");
    return *err_yp * *err_yp + gamma * eta_total * eta_total;
}

AdaptResult run_adaptive(const OcpProblem& prob, const Mesh& initial, const AdaptConfig& config,
                         const IterationObserver& observer)
{
    if (!(config.theta > 0.0 && config.theta < 1.0))
        throw std::invalid_argument("adapt: theta must lie in (0, 1)");
    config.stop.validate();
    prob.validate();

    AdaptResult result;
    Mesh mesh = initial;
    NodalField p_guess;

    for (int k = 0;; ++k) {
        const P1Space space(mesh);
        OcpSolution sol;
        try {
            sol = solve_ocp(space, prob, config.solver, config.warm_start && !p_guess.empty() ? &p_guess : nullptr);
        } catch (const OcpSolveError& e) {
            throw AdaptError(std::string("adapt: iteration ") + std::to_string(k) + ": " + e.what(),
                             result.records);
        }
        const Indicators ind = compute_indicators(space, prob, sol);

        AdaptRecord rec;
        rec.iter = k;
        rec.n_elements = static_cast<long>(mesh.element_count());
        rec.n_dofs = space.n_dofs();
        rec.eta_y = std::sqrt(ind.eta_y_total_sq());
        rec.eta_p = std::sqrt(ind.eta_p_total_sq());
        rec.eta_total = std::sqrt(ind.eta_total_sq());
        rec.osc_total = std::sqrt(ind.osc_total_sq());
        rec.outer_iterations = sol.outer_iterations;
        rec.kkt_residual = sol.kkt_residual;
        if (prob.exact) {
            const auto& ex = *prob.exact;
            rec.err_y = energy_norm_error(mesh, sol.y, ex.y, prob.coeff, degree5_rule());
            rec.err_p = energy_norm_error(mesh, sol.p, ex.p, prob.coeff, degree5_rule());
            rec.err_yp = std::hypot(*rec.err_y, *rec.err_p);
            rec.err_u = l2_norm_error(mesh, sol.control_function(mesh), ex.u, degree5_rule());
        }

        std::vector<int> marked;
        bool stop = k >= config.stop.max_iters || rec.n_dofs >= config.stop.max_dofs ||
                    rec.eta_total <= config.stop.eta_tol;
        int times = 1;
        if (!stop) {
            if (config.mode == RefinementMode::Uniform) {
                marked.resize(mesh.element_count());
                std::iota(marked.begin(), marked.end(), 0);
                times = 2;
            } else {
                auto m = dorfler_mark(ind.eta_sq, config.theta);
                stop = m.converged;
                marked = std::move(m.marked);
            }
        }

        if (stop) {
            result.records.push_back(rec);
            if (observer)
                observer({k, mesh, space, sol, ind, marked, result.records.back()});
            result.final_solution = std::move(sol);
            break;
        }

        RefineResult refined = refine(mesh, marked, times);
        rec.marked_count = static_cast<long>(marked.size());
        rec.refined_count = static_cast<long>(refined.refined.size());
        result.records.push_back(rec);
        if (observer)
            observer({k, mesh, space, sol, ind, marked, result.records.back()});

        p_guess = prolongate(sol.p, refined);
        mesh = std::move(refined.mesh);
    }
    result.final_mesh = std::move(mesh);
    return result;
}

double fit_slope(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_slope: need at least two paired samples");
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(x.size());
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("fit_slope: values must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        mx += lx[i] / n;
        my += ly[i] / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("fit_slope: x values are all equal");
    return sxy / sxx;
}

double fit_slope(std::span<const AdaptRecord> records, const std::function<double(const AdaptRecord&)>& field,
                 std::size_t window)
{
    const std::size_t n = window == 0 ? records.size() : std::min(window, records.size());
    std::vector<double> x, y;
    for (std::size_t i = records.size() - n; i < records.size(); ++i) {
        x.push_back(static_cast<double>(records[i].n_dofs));
        y.push_back(field(records[i]));
    }
    return fit_slope(x, y);
}

ContractionScan scan_contraction(std::span<const AdaptRecord> records, std::span<const double> gammas,
                                 std::size_t first_step)
{
    ContractionScan scan;
    scan.gammas.assign(gammas.begin(), gammas.end());
    int best = -1;
    for (std::size_t g = 0; g < gammas.size(); ++g) {
        std::vector<double> ratios;
        for (std::size_t k = first_step; k + 1 < records.size(); ++k)
            ratios.push_back(records[k + 1].quasi_error(gammas[g]) / records[k].quasi_error(gammas[g]));
        const int below = static_cast<int>(std::count_if(ratios.begin(), ratios.end(), [](double r) { return r < 1.0; }));
        const double worst = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
        if (!ratios.empty() && below == static_cast<int>(ratios.size()))
            scan.all_contract = true;
        scan.ratios.push_back(std::move(ratios));
        scan.below_one.push_back(below);
        scan.max_ratio.push_back(worst);
        if (best < 0 || below > scan.best_below_one || (below == scan.best_below_one && worst < scan.best_max_ratio)) {
            best = static_cast<int>(g);
            scan.best_below_one = below;
            scan.best_max_ratio = worst;
        }
    }
    if (best >= 0)
        scan.best_gamma = gammas[static_cast<std::size_t>(best)];
    return scan;
}

std::vector<double> log_spaced(double lo, double hi, int count)
{
    std::vector<double> out;
    if (count == 1)
        return {lo};
    for (int i = 0; i < count; ++i)
        out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
    return out;
}

double cardinality_constant(std::span<const AdaptRecord> records)
{
    if (records.empty())
        return 0.0;
    long marked = 0;
    for (std::size_t i = 0; i + 1 < records.size(); ++i)
        marked += records[i].marked_count;
    if (marked == 0)
        return 0.0;
    return static_cast<double>(records.back().n_elements - records.front().n_elements) / static_cast<double>(marked);
}

} // namespace afem
