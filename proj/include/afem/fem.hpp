#pragma once

#include "afem/linalg.hpp"
#include "afem/mesh.hpp"

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace afem {

/// Rule on the reference triangle; weights sum to the reference area 1/2.
struct QuadratureRule
{
    std::vector<std::array<double, 3>> points;  // barycentric
    std::vector<double> weights;
    int degree = 0;

    std::size_t size() const { return weights.size(); }
};

const QuadratureRule& centroid_rule();  // degree 1
const QuadratureRule& degree2_rule();   // 3 points
const QuadratureRule& degree5_rule();   // 7 points
/// Composite rule: `rule` applied on each of the 4^levels congruent subtriangles.
QuadratureRule subdivided(const QuadratureRule& rule, int levels);

/// Constant coefficients of a(y,v) = int (A grad y).grad v + c y v.
struct Coefficients
{
    std::array<double, 4> A{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
    double c = 0.0;

    /// Throws std::invalid_argument unless A is symmetric positive definite and c >= 0.
    void validate() const;
    Point apply(Point g) const { return {A[0] * g.x + A[1] * g.y, A[2] * g.x + A[3] * g.y}; }
};

enum class BoundaryCondition { Dirichlet, None };

/// Continuous piecewise linears on a mesh. With homogeneous Dirichlet conditions every
/// boundary vertex is constrained to zero. The mesh must outlive the space.
class P1Space
{
public:
    explicit P1Space(const Mesh& mesh, BoundaryCondition bc = BoundaryCondition::Dirichlet);

    const Mesh& mesh() const { return *mesh_; }
    int n_dofs() const { return static_cast<int>(vertex_of_dof_.size()); }
    /// Free DOF of vertex i, or -1 if constrained.
    int dof(int vertex) const { return dof_of_vertex_[static_cast<std::size_t>(vertex)]; }
    std::span<const int> vertex_of_dof() const { return vertex_of_dof_; }

    /// Nodal field (one value per vertex) -> free DOF vector.
    std::vector<double> restrict_to_dofs(std::span<const double> nodal) const;
    /// Free DOF vector -> nodal field with constrained vertices set to zero.
    std::vector<double> extend_to_nodal(std::span<const double> dofs) const;

private:
    const Mesh* mesh_;
    std::vector<int> dof_of_vertex_;
    std::vector<int> vertex_of_dof_;
};

using NodalField = std::vector<double>;
using ScalarFunction = std::function<double(Point)>;

struct QuadPoint
{
    int element;
    int index;  // position within the rule
    std::array<double, 3> bary;
    Point x;
};

using QuadFunction = std::function<double(const QuadPoint&)>;

/// Values of a function at every quadrature point of a rule, element-major.
struct QuadratureField
{
    const QuadratureRule* rule = nullptr;
    std::vector<double> values;

    double at(int element, int q) const { return values[static_cast<std::size_t>(element) * rule->size() + static_cast<std::size_t>(q)]; }
};

QuadratureField sample(const Mesh& mesh, const QuadratureRule& rule, const QuadFunction& f);
QuadratureField sample(const Mesh& mesh, const QuadratureRule& rule, const ScalarFunction& f);

/// Physical weights |T| * 2 * w_q, element-major, matching QuadratureField layout.
std::vector<double> physical_weights(const Mesh& mesh, const QuadratureRule& rule);

/// Gradients of the three barycentric basis functions of element t (constant on t).
std::array<Point, 3> basis_gradients(const Mesh& mesh, int t);

using LocalMatrix = std::array<std::array<double, 3>, 3>;

/// Exact element matrix of a(phi_i, phi_j) for constant coefficients.
LocalMatrix element_stiffness(const Mesh& mesh, int t, const Coefficients& coeff);
LocalMatrix element_mass(const Mesh& mesh, int t);

/// Matrix of a(phi_i, phi_j) over free DOFs (constrained DOFs eliminated).
SparseMatrix assemble_stiffness(const P1Space& space, const Coefficients& coeff);

/// Vector of int f phi_i over free DOFs using `rule` on every element.
std::vector<double> assemble_load(const P1Space& space, const QuadFunction& f, const QuadratureRule& rule);
std::vector<double> assemble_load(const P1Space& space, const ScalarFunction& f, const QuadratureRule& rule);

struct P1Value
{
    double value;
    Point gradient;
};

P1Value evaluate_p1(const Mesh& mesh, std::span<const double> nodal, int element,
                    const std::array<double, 3>& bary);

NodalField interpolate(const Mesh& mesh, const ScalarFunction& f);

/// Exact solution with gradient for energy-norm errors.
struct FunctionWithGradient
{
    ScalarFunction value;
    std::function<Point(Point)> gradient;
};

/// sqrt( sum_T int (grad e)^T A grad e + c e^2 ), e = exact - discrete.
double energy_norm_error(const Mesh& mesh, std::span<const double> nodal, const FunctionWithGradient& exact,
                         const Coefficients& coeff, const QuadratureRule& rule);

/// L2 distance between a pointwise-evaluable discrete function and an exact one.
double l2_norm_error(const Mesh& mesh, const QuadFunction& discrete, const ScalarFunction& exact,
                     const QuadratureRule& rule);

/// Solves a(y, v) = (f, v) with homogeneous Dirichlet data; returns the nodal solution.
NodalField solve_poisson(const P1Space& space, const Coefficients& coeff, const ScalarFunction& f,
                         const QuadratureRule& rule, double tol = 1e-12);

} // namespace afem
