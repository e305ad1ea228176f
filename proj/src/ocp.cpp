#include "afem/ocp.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace afem {

void OcpProblem::validate() const
{
    if (!(alpha > 0.0))
        throw std::invalid_argument("ocp: alpha must be positive");
    if (!(lower < upper))
        throw std::invalid_argument("ocp: bounds must satisfy lower < upper");
    if (!y_d || !f_extra)
        throw std::invalid_argument("ocp: y_d and f_extra must be callable");
    coeff.validate();
}

void SolverOptions::validate() const
{
    if (!(tol > 0.0))
        throw std::invalid_argument("solver options: tol must be positive");
    if (max_outer < 1)
        throw std::invalid_argument("solver options: max_outer must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0))
        throw std::invalid_argument("solver options: damping must lie in (0, 1]");
    if (!(cg_tol > 0.0))
        throw std::invalid_argument("solver options: cg_tol must be positive");
}

double OcpSolution::control(const Mesh& mesh, int element, const std::array<double, 3>& bary) const
{
    return project_control(evaluate_p1(mesh, p, element, bary).value, alpha, lower, upper);
}

QuadFunction OcpSolution::control_function(const Mesh& mesh) const
{
    return [this, &mesh](const QuadPoint& qp) { return control(mesh, qp.element, qp.bary); };
}

// --- discrete reduced problem ----------------------------------------------

struct DiscreteOcp::Factorization
{
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

DiscreteOcp::DiscreteOcp(const P1Space& space, const OcpProblem& prob, const SolverOptions& options)
    : space_(space)
    , prob_(prob)
    , options_(options)
    , rule_(&degree5_rule())
{
    prob_.validate();
    options_.validate();
    const Mesh& mesh = space.mesh();
    stiffness_ = assemble_stiffness(space, prob.coeff);
    weights_ = physical_weights(mesh, *rule_);
    y_d_ = sample(mesh, *rule_, prob.y_d);
    f_extra_ = sample(mesh, *rule_, prob.f_extra);

    if (options_.linear_solver == LinearSolverKind::Cholesky && stiffness_.size() > 0) {
        const auto rp = stiffness_.row_ptr();
        const auto ci = stiffness_.col_index();
        const auto vals = stiffness_.values();
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(vals.size());
        for (int i = 0; i < stiffness_.size(); ++i)
            for (int k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k)
                trip.emplace_back(i, ci[static_cast<std::size_t>(k)], vals[static_cast<std::size_t>(k)]);
        Eigen::SparseMatrix<double> k(stiffness_.size(), stiffness_.size());
        k.setFromTriplets(trip.begin(), trip.end());
        factor_ = std::make_unique<Factorization>();
        factor_->ldlt.compute(k);
        if (factor_->ldlt.info() != Eigen::Success)
            throw std::runtime_error("ocp: stiffness factorization failed");
    }
}

DiscreteOcp::~DiscreteOcp() = default;

NodalField DiscreteOcp::solve(std::vector<double> rhs, const NodalField* guess) const
{
    ++solves_;
    if (rhs.empty())
        return space_.extend_to_nodal(rhs);
    if (factor_) {
        const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
        const Eigen::VectorXd x = factor_->ldlt.solve(b);
        return space_.extend_to_nodal(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    }
    std::vector<double> x = guess ? space_.restrict_to_dofs(*guess) : std::vector<double>(rhs.size(), 0.0);
    CgOptions cg;
    cg.tol = options_.cg_tol;
    cg.max_iter = options_.cg_max_iter;
    const auto report = cg_solve(stiffness_, rhs, x, cg);
    // A residual within two orders of the target is accepted: round-off floors the
    // attainable relative residual on fine meshes.
    if (!report.converged && !(report.relative_residual <= 100.0 * options_.cg_tol))
        throw std::runtime_error("ocp: linear solve did not converge");
    return space_.extend_to_nodal(x);
}

NodalField DiscreteOcp::state(const QuadratureField& u, const NodalField* guess) const
{
    return solve(assemble_load(space_, QuadFunction([&](const QuadPoint& qp) {
                                   return f_extra_.at(qp.element, qp.index) + u.at(qp.element, qp.index);
                               }),
                               *rule_),
                 guess);
}

NodalField DiscreteOcp::adjoint(const NodalField& y, const NodalField* guess) const
{
    const QuadratureField yq = evaluate(y);
    return solve(assemble_load(space_, QuadFunction([&](const QuadPoint& qp) {
                                   return yq.at(qp.element, qp.index) - y_d_.at(qp.element, qp.index);
                               }),
                               *rule_),
                 guess);
}

QuadratureField DiscreteOcp::evaluate(const NodalField& nodal) const
{
    const Mesh& mesh = space_.mesh();
    const std::size_t nq = rule_->size();
    QuadratureField out{rule_, std::vector<double>(mesh.element_count() * nq)};
    for (int t = 0; t < static_cast<int>(mesh.element_count()); ++t) {
        const auto& v = mesh.element(t).v;
        const double a = nodal[static_cast<std::size_t>(v[0])];
        const double b = nodal[static_cast<std::size_t>(v[1])];
        const double c = nodal[static_cast<std::size_t>(v[2])];
        for (std::size_t q = 0; q < nq; ++q) {
            const auto& l = rule_->points[q];
            out.values[static_cast<std::size_t>(t) * nq + q] = l[0] * a + l[1] * b + l[2] * c;
        }
    }
    return out;
}

QuadratureField DiscreteOcp::project(const NodalField& p) const
{
    QuadratureField out = evaluate(p);
    for (double& v : out.values)
        v = project_control(v, prob_.alpha, prob_.lower, prob_.upper);
    return out;
}

QuadratureField DiscreteOcp::constant(double value) const
{
    return {rule_, std::vector<double>(weights_.size(), value)};
}

double DiscreteOcp::inner(const QuadratureField& a, const QuadratureField& b) const
{
    double s = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k)
        s += weights_[k] * a.values[k] * b.values[k];
    return s;
}

double DiscreteOcp::functional(const NodalField& y, const QuadratureField& u) const
{
    const QuadratureField yq = evaluate(y);
    long double misfit = 0.0L, control = 0.0L;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
        const long double d = static_cast<long double>(yq.values[k]) - y_d_.values[k];
        misfit += weights_[k] * d * d;
        control += static_cast<long double>(weights_[k]) * u.values[k] * u.values[k];
    }
    return static_cast<double>(0.5L * misfit + 0.5L * prob_.alpha * control);
}

// --- outer solver -----------------------------------------------------------

namespace {

QuadratureField gradient_of(const DiscreteOcp& ocp, const QuadratureField& u, const NodalField& p)
{
    QuadratureField g = ocp.evaluate(p);
    for (std::size_t k = 0; k < g.values.size(); ++k)
        g.values[k] += ocp.problem().alpha * u.values[k];
    return g;
}

double distance(const DiscreteOcp& ocp, const QuadratureField& a, const QuadratureField& b)
{
    QuadratureField d = a;
    for (std::size_t k = 0; k < d.values.size(); ++k)
        d.values[k] -= b.values[k];
    return ocp.norm(d);
}

} // namespace

OcpSolution solve_ocp(const P1Space& space, const OcpProblem& prob, const SolverOptions& options,
                      const NodalField* initial_adjoint)
{
    const DiscreteOcp ocp(space, prob, options);
    const double alpha = prob.alpha;

    OcpSolution sol;
    sol.alpha = alpha;
    sol.lower = prob.lower;
    sol.upper = prob.upper;

    QuadratureField u = initial_adjoint ? ocp.project(*initial_adjoint) : ocp.project(NodalField(space.mesh().vertex_count(), 0.0));
    NodalField y = ocp.state(u);
    NodalField p = ocp.adjoint(y, initial_adjoint);
    double j = ocp.functional(y, u);
    QuadratureField g = gradient_of(ocp, u, p);
    double omega = options.damping;
    sol.functional_history.push_back(j);

    bool converged = false;
    for (int m = 0;; ++m) {
        const QuadratureField fixed_point = ocp.project(p);
        const double residual = distance(ocp, u, fixed_point);
        sol.residual_history.push_back(residual);
        if (residual <= options.tol * std::max(1.0, ocp.norm(u))) {
            converged = true;
            break;
        }
        if (m == options.max_outer)
            break;

        // Step u <- clamp(u - (omega/alpha) g); halve omega until the functional decreases.
        QuadratureField trial;
        NodalField y_trial;
        double j_trial = 0.0;
        for (;;) {
            trial = u;
            for (std::size_t k = 0; k < trial.values.size(); ++k)
                trial.values[k] = std::min(prob.upper, std::max(prob.lower, u.values[k] - omega / alpha * g.values[k]));
            y_trial = ocp.state(trial, &y);
            j_trial = ocp.functional(y_trial, trial);
            QuadratureField step = trial;
            for (std::size_t k = 0; k < step.values.size(); ++k)
                step.values[k] -= u.values[k];
            NodalField dy = y_trial;
            for (std::size_t i = 0; i < dy.size(); ++i)
                dy[i] -= y[i];
            // J is quadratic: the exact change avoids cancelling two nearly equal functional values.
            const double slope = ocp.inner(g, step);
            const double dy_norm = ocp.norm(ocp.evaluate(dy));
            const double step_norm = ocp.norm(step);
            const double change = slope + 0.5 * (dy_norm * dy_norm + alpha * step_norm * step_norm);
            if (change <= 1e-4 * slope || omega < 1e-10)
                break;
            omega *= 0.5;
        }
        NodalField p_trial = ocp.adjoint(y_trial, &p);
        QuadratureField g_trial = gradient_of(ocp, trial, p_trial);

        // Barzilai-Borwein step fraction; (s, dg) >= alpha (s, s), so it never exceeds 1.
        double ss = 0.0, sg = 0.0;
        {
            QuadratureField s = trial, dg = g_trial;
            for (std::size_t k = 0; k < s.values.size(); ++k) {
                s.values[k] -= u.values[k];
                dg.values[k] -= g.values[k];
            }
            ss = ocp.inner(s, s);
            sg = ocp.inner(s, dg);
        }
        omega = sg > 0.0 ? std::min(1.0, std::max(1e-6, alpha * ss / sg)) : 1.0;

        u = std::move(trial);
        y = std::move(y_trial);
        p = std::move(p_trial);
        g = std::move(g_trial);
        j = j_trial;
        sol.functional_history.push_back(j);
        sol.outer_iterations = m + 1;
    }

    // Final pair from the composition u_h = clamp(-p/alpha).
    const QuadratureField uh = ocp.project(p);
    sol.y = ocp.state(uh, &y);
    sol.p = ocp.adjoint(sol.y, &p);
    sol.kkt_residual = distance(ocp, uh, ocp.project(sol.p));
    if (!converged) {
        const std::string what = "ocp: outer iteration did not converge in " + std::to_string(options.max_outer) +
                                 " iterations (residual " + std::to_string(sol.residual_history.back()) + ")";
        throw OcpSolveError(what, std::move(sol));
    }
    return sol;
}

double reduced_functional(const P1Space& space, const OcpProblem& prob, const QuadratureField& u,
                          const SolverOptions& options)
{
    const DiscreteOcp ocp(space, prob, options);
    return ocp.functional(ocp.state(u), u);
}

QuadratureField reduced_gradient(const P1Space& space, const OcpProblem& prob, const QuadratureField& u,
                                 const SolverOptions& options)
{
    const DiscreteOcp ocp(space, prob, options);
    return gradient_of(ocp, u, ocp.adjoint(ocp.state(u)));
}

} // namespace afem

namespace afem {

KktDiagnostics check_kkt(const P1Space& space, const OcpProblem& prob, const OcpSolution& sol,
                         std::uint64_t seed, int directions, double eps, const SolverOptions& options)
{
    const DiscreteOcp ocp(space, prob, options);
    const Mesh& mesh = space.mesh();
    KktDiagnostics d;

    const QuadratureField u = sample(mesh, ocp.rule(), sol.control_function(mesh));
    const QuadratureField projected = ocp.project(sol.p);
    for (std::size_t k = 0; k < u.values.size(); ++k)
        d.composition_gap = std::max(d.composition_gap, std::abs(u.values[k] - projected.values[k]));

    QuadratureField g = ocp.evaluate(sol.p);
    for (std::size_t k = 0; k < g.values.size(); ++k)
        g.values[k] += prob.alpha * u.values[k];

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto vi = [&](const QuadratureField& v) {
        QuadratureField diff = v;
        for (std::size_t k = 0; k < diff.values.size(); ++k)
            diff.values[k] -= u.values[k];
        return ocp.inner(g, diff);
    };
    d.variational_min = std::min(vi(ocp.constant(prob.lower)), vi(ocp.constant(prob.upper)));
    const double width = prob.upper - prob.lower;
    for (int s = 0; s < 4; ++s) {
        QuadratureField v = u;
        const double sign = s % 2 == 0 ? 1.0 : -1.0;
        for (double& x : v.values)
            x = std::min(prob.upper, std::max(prob.lower, x + sign * 0.1 * width * unit(rng)));
        d.variational_min = std::min(d.variational_min, vi(v));
    }

    // Gradient at u_h with the adjoint recomputed from u_h itself.
    const NodalField y_u = ocp.state(u);
    QuadratureField grad = ocp.evaluate(ocp.adjoint(y_u));
    for (std::size_t k = 0; k < grad.values.size(); ++k)
        grad.values[k] += prob.alpha * u.values[k];
    const double j_u = ocp.functional(y_u, u);
    for (int s = 0; s < directions; ++s) {
        QuadratureField dir = u;
        for (std::size_t k = 0; k < dir.values.size(); ++k)
            dir.values[k] = prob.lower + width * unit(rng) - u.values[k];
        QuadratureField plus = u, minus = u;
        for (std::size_t k = 0; k < dir.values.size(); ++k) {
            plus.values[k] += eps * dir.values[k];
            minus.values[k] -= eps * dir.values[k];
        }
        const double fd = (ocp.functional(ocp.state(plus), plus) - ocp.functional(ocp.state(minus), minus)) / (2.0 * eps);
        const double exact = ocp.inner(grad, dir);
        // Scale by |g||d| (and a floor tied to J) so a vanishing gradient does not blow up the ratio.
        const double scale = std::max({std::abs(exact), ocp.norm(grad) * ocp.norm(dir), 1e-6 * std::max(1.0, j_u)});
        d.gradient_rel_error = std::max(d.gradient_rel_error, std::abs(fd - exact) / scale);
    }

    // Galerkin defect of the state equation with the composed control.
    const auto load = assemble_load(space, QuadFunction([&](const QuadPoint& qp) {
                                        return prob.f_extra(qp.x) + sol.control(mesh, qp.element, qp.bary);
                                    }),
                                    ocp.rule());
    const auto ay = spmv(ocp.stiffness(), space.restrict_to_dofs(sol.y));
    for (std::size_t i = 0; i < load.size(); ++i)
        d.galerkin_defect = std::max(d.galerkin_defect, std::abs(load[i] - ay[i]));
    return d;
}

} // namespace afem
