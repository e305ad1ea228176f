#include "afem/fem.hpp"

#include "afem/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace afem {

// --- quadrature -------------------------------------------------------------

namespace {

QuadratureRule make_symmetric_rule(int degree, std::vector<std::pair<double, double>> orbits, double centroid_weight)
{
    QuadratureRule r;
    r.degree = degree;
    if (centroid_weight > 0.0) {
        r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
        r.weights.push_back(centroid_weight);
    }
    for (auto [a, w] : orbits) {
        const double b = 1.0 - 2.0 * a;
        r.points.push_back({a, a, b});
        r.points.push_back({a, b, a});
        r.points.push_back({b, a, a});
        r.weights.insert(r.weights.end(), 3, w);
    }
    return r;
}

} // namespace

const QuadratureRule& centroid_rule()
{
    static const QuadratureRule rule = make_symmetric_rule(1, {}, 0.5);
    return rule;
}

const QuadratureRule& degree2_rule()
{
    static const QuadratureRule rule = make_symmetric_rule(2, {{1.0 / 6.0, 1.0 / 6.0}}, 0.0);
    return rule;
}

const QuadratureRule& degree5_rule()
{
    static const QuadratureRule rule = [] {
        const double s = std::sqrt(15.0);
        return make_symmetric_rule(5,
                                   {{(6.0 - s) / 21.0, (155.0 - s) / 2400.0},
                                    {(6.0 + s) / 21.0, (155.0 + s) / 2400.0}},
                                   9.0 / 80.0);
    }();
    return rule;
}

QuadratureRule subdivided(const QuadratureRule& rule, int levels)
{
    using Bary = std::array<double, 3>;
    std::vector<std::array<Bary, 3>> cells{{Bary{1, 0, 0}, Bary{0, 1, 0}, Bary{0, 0, 1}}};
    auto mid = [](const Bary& a, const Bary& b) {
        return Bary{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
    };
    for (int l = 0; l < levels; ++l) {
        std::vector<std::array<Bary, 3>> next;
        for (const auto& [a, b, c] : cells) {
            const Bary ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
            next.push_back({a, ab, ca});
            next.push_back({ab, b, bc});
            next.push_back({ca, bc, c});
            next.push_back({ab, bc, ca});
        }
        cells = std::move(next);
    }
    QuadratureRule out;
    out.degree = rule.degree;
    const double scale = 1.0 / static_cast<double>(cells.size());
    for (const auto& cell : cells)
        for (std::size_t q = 0; q < rule.size(); ++q) {
            Bary p{};
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t k = 0; k < 3; ++k)
                    p[k] += rule.points[q][i] * cell[i][k];
            out.points.push_back(p);
            out.weights.push_back(rule.weights[q] * scale);
        }
    return out;
}

// --- coefficients and space -------------------------------------------------

void Coefficients::validate() const
{
    if (std::abs(A[1] - A[2]) > 1e-14 * (std::abs(A[0]) + std::abs(A[3])))
        throw std::invalid_argument("coefficients: A must be symmetric");
    const double det = A[0] * A[3] - A[1] * A[2];
    if (!(A[0] > 0.0 && det > 0.0))
        throw std::invalid_argument("coefficients: A must be positive definite");
    if (!(c >= 0.0) || !std::isfinite(c))
        throw std::invalid_argument("coefficients: reaction c must be finite and >= 0");
}

P1Space::P1Space(const Mesh& mesh, BoundaryCondition bc)
    : mesh_(&mesh)
    , dof_of_vertex_(mesh.vertex_count(), -1)
{
    for (int i = 0; i < static_cast<int>(mesh.vertex_count()); ++i) {
        if (bc == BoundaryCondition::Dirichlet && mesh.vertex(i).on_boundary)
            continue;
        dof_of_vertex_[static_cast<std::size_t>(i)] = static_cast<int>(vertex_of_dof_.size());
        vertex_of_dof_.push_back(i);
    }
}

std::vector<double> P1Space::restrict_to_dofs(std::span<const double> nodal) const
{
    std::vector<double> out(vertex_of_dof_.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = nodal[static_cast<std::size_t>(vertex_of_dof_[k])];
    return out;
}

std::vector<double> P1Space::extend_to_nodal(std::span<const double> dofs) const
{
    std::vector<double> out(dof_of_vertex_.size(), 0.0);
    for (std::size_t k = 0; k < vertex_of_dof_.size(); ++k)
        out[static_cast<std::size_t>(vertex_of_dof_[k])] = dofs[k];
    return out;
}

// --- sampling ---------------------------------------------------------------

QuadratureField sample(const Mesh& mesh, const QuadratureRule& rule, const QuadFunction& f)
{
    QuadratureField out{&rule, std::vector<double>(mesh.element_count() * rule.size())};
    for (int t = 0; t < static_cast<int>(mesh.element_count()); ++t)
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const QuadPoint qp{t, static_cast<int>(q), rule.points[q], mesh.to_physical(t, rule.points[q])};
            out.values[static_cast<std::size_t>(t) * rule.size() + q] = f(qp);
        }
    return out;
}

QuadratureField sample(const Mesh& mesh, const QuadratureRule& rule, const ScalarFunction& f)
{
    return sample(mesh, rule, QuadFunction([&f](const QuadPoint& qp) { return f(qp.x); }));
}

std::vector<double> physical_weights(const Mesh& mesh, const QuadratureRule& rule)
{
    std::vector<double> w(mesh.element_count() * rule.size());
    for (int t = 0; t < static_cast<int>(mesh.element_count()); ++t) {
        const double area = mesh.geometry(t).area;
        for (std::size_t q = 0; q < rule.size(); ++q)
            w[static_cast<std::size_t>(t) * rule.size() + q] = 2.0 * area * rule.weights[q];
    }
    return w;
}

// --- element kernels --------------------------------------------------------

std::array<Point, 3> basis_gradients(const Mesh& mesh, int t)
{
    const auto& el = mesh.element(t);
    const std::array<Point, 3> p{mesh.point(el.v[0]), mesh.point(el.v[1]), mesh.point(el.v[2])};
    const double twice_area = cross(p[1] - p[0], p[2] - p[0]);
    std::array<Point, 3> g;
    for (std::size_t i = 0; i < 3; ++i) {
        const Point a = p[(i + 1) % 3], b = p[(i + 2) % 3];
        g[i] = {(a.y - b.y) / twice_area, (b.x - a.x) / twice_area};
    }
    return g;
}

LocalMatrix element_mass(const Mesh& mesh, int t)
{
    const double area = mesh.geometry(t).area;
    LocalMatrix m;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            m[i][j] = area / 12.0 * (i == j ? 2.0 : 1.0);
    return m;
}

LocalMatrix element_stiffness(const Mesh& mesh, int t, const Coefficients& coeff)
{
    const double area = mesh.geometry(t).area;
    const auto g = basis_gradients(mesh, t);
    LocalMatrix k = element_mass(mesh, t);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            k[i][j] = coeff.c * k[i][j] + area * dot(coeff.apply(g[j]), g[i]);
    return k;
}

// --- assembly ---------------------------------------------------------------

SparseMatrix assemble_stiffness(const P1Space& space, const Coefficients& coeff)
{
    const Mesh& mesh = space.mesh();
    const std::size_t ne = mesh.element_count();
    std::vector<LocalMatrix> local(ne);
    parallel_for(ne, [&](std::size_t t) { local[t] = element_stiffness(mesh, static_cast<int>(t), coeff); });

    std::vector<Triplet> triplets;
    triplets.reserve(ne * 9);
    for (std::size_t t = 0; t < ne; ++t) {
        const auto& el = mesh.element(static_cast<int>(t));
        for (std::size_t i = 0; i < 3; ++i) {
            const int di = space.dof(el.v[i]);
            if (di < 0)
                continue;
            for (std::size_t j = 0; j < 3; ++j) {
                const int dj = space.dof(el.v[j]);
                if (dj >= 0)
                    triplets.push_back({di, dj, local[t][i][j]});
            }
        }
    }
    return SparseMatrix(space.n_dofs(), std::move(triplets));
}

std::vector<double> assemble_load(const P1Space& space, const QuadFunction& f, const QuadratureRule& rule)
{
    const Mesh& mesh = space.mesh();
    std::vector<double> b(static_cast<std::size_t>(space.n_dofs()), 0.0);
    for (int t = 0; t < static_cast<int>(mesh.element_count()); ++t) {
        const auto& el = mesh.element(t);
        const double jac = 2.0 * mesh.geometry(t).area;
        std::array<double, 3> local{};
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& bary = rule.points[q];
            const double fw = f({t, static_cast<int>(q), bary, mesh.to_physical(t, bary)}) * rule.weights[q] * jac;
            for (std::size_t i = 0; i < 3; ++i)
                local[i] += fw * bary[i];
        }
        for (std::size_t i = 0; i < 3; ++i)
            if (const int d = space.dof(el.v[i]); d >= 0)
                b[static_cast<std::size_t>(d)] += local[i];
    }
    return b;
}

std::vector<double> assemble_load(const P1Space& space, const ScalarFunction& f, const QuadratureRule& rule)
{
    return assemble_load(space, QuadFunction([&f](const QuadPoint& qp) { return f(qp.x); }), rule);
}

// --- evaluation and norms ---------------------------------------------------

P1Value evaluate_p1(const Mesh& mesh, std::span<const double> nodal, int element, const std::array<double, 3>& bary)
{
    const auto& el = mesh.element(element);
    const auto g = basis_gradients(mesh, element);
    P1Value out{0.0, {0.0, 0.0}};
    for (std::size_t i = 0; i < 3; ++i) {
        const double v = nodal[static_cast<std::size_t>(el.v[i])];
        out.value += bary[i] * v;
        out.gradient = out.gradient + v * g[i];
    }
    return out;
}

NodalField interpolate(const Mesh& mesh, const ScalarFunction& f)
{
    NodalField out(mesh.vertex_count());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = f(mesh.point(static_cast<int>(i)));
    return out;
}

double energy_norm_error(const Mesh& mesh, std::span<const double> nodal, const FunctionWithGradient& exact,
                         const Coefficients& coeff, const QuadratureRule& rule)
{
    const std::size_t ne = mesh.element_count();
    std::vector<double> local(ne, 0.0);
    parallel_for(ne, [&](std::size_t ti) {
        const int t = static_cast<int>(ti);
        const double jac = 2.0 * mesh.geometry(t).area;
        double sum = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& bary = rule.points[q];
            const Point x = mesh.to_physical(t, bary);
            const P1Value h = evaluate_p1(mesh, nodal, t, bary);
            const Point ge = exact.gradient(x) - h.gradient;
            double integrand = dot(coeff.apply(ge), ge);
            if (coeff.c != 0.0) {
                const double e = exact.value(x) - h.value;
                integrand += coeff.c * e * e;
            }
            sum += rule.weights[q] * jac * integrand;
        }
        local[ti] = sum;
    });
    double total = 0.0;
    for (double v : local)
        total += v;
    return std::sqrt(total);
}

double l2_norm_error(const Mesh& mesh, const QuadFunction& discrete, const ScalarFunction& exact,
                     const QuadratureRule& rule)
{
    double total = 0.0;
    for (int t = 0; t < static_cast<int>(mesh.element_count()); ++t) {
        const double jac = 2.0 * mesh.geometry(t).area;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& bary = rule.points[q];
            const QuadPoint qp{t, static_cast<int>(q), bary, mesh.to_physical(t, bary)};
            const double e = discrete(qp) - exact(qp.x);
            total += rule.weights[q] * jac * e * e;
        }
    }
    return std::sqrt(total);
}

NodalField solve_poisson(const P1Space& space, const Coefficients& coeff, const ScalarFunction& f,
                         const QuadratureRule& rule, double tol)
{
    const SparseMatrix k = assemble_stiffness(space, coeff);
    const auto b = assemble_load(space, f, rule);
    std::vector<double> x(b.size(), 0.0);
    CgOptions options;
    options.tol = tol;
    options.max_iter = 20 * static_cast<int>(b.size()) + 100;
    const auto report = cg_solve(k, b, x, options);
    if (!report.converged)
        throw std::runtime_error("poisson solve did not converge");
    return space.extend_to_nodal(x);
}

} // namespace afem
