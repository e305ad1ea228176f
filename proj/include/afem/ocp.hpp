#pragma once

#include "afem/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace afem {

/// Exact optimal triple, used only for error reporting.
struct ExactSolution
{
    FunctionWithGradient y;
    FunctionWithGradient p;
    ScalarFunction u;
};

/// min 1/2 ||y - y_d||^2 + alpha/2 ||u||^2  s.t.  a(y, v) = (f + u, v),  lower <= u <= upper.
struct OcpProblem
{
    double alpha = 1.0;
    double lower = -1.0;
    double upper = 1.0;
    ScalarFunction y_d = [](Point) { return 0.0; };
    ScalarFunction f_extra = [](Point) { return 0.0; };
    Coefficients coeff;
    std::optional<ExactSolution> exact;

    void validate() const;
};

/// Pointwise projection of -p/alpha onto [lower, upper].
inline double project_control(double p, double alpha, double lower, double upper)
{
    return std::min(upper, std::max(lower, -p / alpha));
}

enum class LinearSolverKind { Cg, Cholesky };

struct SolverOptions
{
    double tol = 1e-10;    // on the fixed-point residual, scaled by max(1, ||u||)
    int max_outer = 200;
    double damping = 1.0;  // initial step fraction omega in (0, 1]
    LinearSolverKind linear_solver = LinearSolverKind::Cholesky;
    double cg_tol = 1e-13;
    int cg_max_iter = 50000;

    void validate() const;
};

/// Discrete state and adjoint. The control is not stored: it is the composition
/// u_h(x) = clamp(-p_h(x)/alpha, lower, upper).
struct OcpSolution
{
    NodalField y;
    NodalField p;
    double alpha = 1.0;
    double lower = 0.0;
    double upper = 0.0;
    double kkt_residual = 0.0;
    int outer_iterations = 0;
    std::vector<double> residual_history;
    std::vector<double> functional_history;

    double control(const Mesh& mesh, int element, const std::array<double, 3>& bary) const;
    QuadFunction control_function(const Mesh& mesh) const;
};

class OcpSolveError : public std::runtime_error
{
public:
    OcpSolveError(const std::string& what, OcpSolution last)
        : std::runtime_error(what)
        , last_(std::move(last))
    {}
    const OcpSolution& last_iterate() const { return last_; }

private:
    OcpSolution last_;
};

/// The discrete problem on a fixed mesh with the control represented by its values at the
/// points of the degree-5 rule. All L2 products use that rule, so the reduced gradient
/// alpha*u + p_h(u) is the exact gradient of the discrete reduced functional.
class DiscreteOcp
{
public:
    DiscreteOcp(const P1Space& space, const OcpProblem& prob, const SolverOptions& options = {});
    ~DiscreteOcp();
    DiscreteOcp(const DiscreteOcp&) = delete;
    DiscreteOcp& operator=(const DiscreteOcp&) = delete;

    const P1Space& space() const { return space_; }
    const OcpProblem& problem() const { return prob_; }
    const QuadratureRule& rule() const { return *rule_; }
    const SparseMatrix& stiffness() const { return stiffness_; }

    /// a(y, v) = (f_extra + u, v).
    NodalField state(const QuadratureField& u, const NodalField* guess = nullptr) const;
    /// a(w, p) = (y - y_d, w).
    NodalField adjoint(const NodalField& y, const NodalField* guess = nullptr) const;

    QuadratureField evaluate(const NodalField& nodal) const;
    QuadratureField project(const NodalField& p) const;
    QuadratureField constant(double value) const;

    /// 1/2 ||y - y_d||^2 + alpha/2 ||u||^2.
    double functional(const NodalField& y, const QuadratureField& u) const;
    double inner(const QuadratureField& a, const QuadratureField& b) const;
    double norm(const QuadratureField& a) const { return std::sqrt(inner(a, a)); }

    int linear_solves() const { return solves_; }

private:
    NodalField solve(std::vector<double> rhs, const NodalField* guess) const;

    const P1Space& space_;
    const OcpProblem& prob_;
    SolverOptions options_;
    const QuadratureRule* rule_;
    SparseMatrix stiffness_;
    std::vector<double> weights_;
    QuadratureField y_d_;
    QuadratureField f_extra_;
    struct Factorization;
    std::unique_ptr<Factorization> factor_;
    mutable int solves_ = 0;
};

/// Projected gradient on the reduced functional with Barzilai-Borwein step fractions and
/// halving on insufficient decrease; omega = 1 is the plain fixed-point map
/// u <- clamp(-p(u)/alpha). Throws OcpSolveError after max_outer iterations.
OcpSolution solve_ocp(const P1Space& space, const OcpProblem& prob, const SolverOptions& options = {},
                      const NodalField* initial_adjoint = nullptr);

/// J_h(S_h u, u) for a control given at the degree-5 quadrature points.
double reduced_functional(const P1Space& space, const OcpProblem& prob, const QuadratureField& u,
                          const SolverOptions& options = {});

/// alpha*u + p_h(u) at the degree-5 quadrature points.
QuadratureField reduced_gradient(const P1Space& space, const OcpProblem& prob, const QuadratureField& u,
                                 const SolverOptions& options = {});

struct KktDiagnostics
{
    /// max |u_h - clamp(-p_h/alpha)| over quadrature points.
    double composition_gap = 0.0;
    /// min over sampled feasible v of (alpha u_h + p_h, v - u_h).
    double variational_min = 0.0;
    /// max relative error of central differences of the reduced functional against
    /// (alpha u_h + p_h, d) over random feasible directions d.
    double gradient_rel_error = 0.0;
    /// |(f + u_h, phi_i) - a(y_h, phi_i)| maximised over free basis functions.
    double galerkin_defect = 0.0;
};

KktDiagnostics check_kkt(const P1Space& space, const OcpProblem& prob, const OcpSolution& sol,
                         std::uint64_t seed, int directions = 3, double eps = 1e-5,
                         const SolverOptions& options = {});

} // namespace afem
