#include "afem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace afem {

double norm(Point a) { return std::hypot(a.x, a.y); }

namespace {

double signed_area(Point a, Point b, Point c) { return 0.5 * cross(b - a, c - a); }

std::array<int, 2> local_edge(const Element& el, int i)
{
    return {el.v[static_cast<std::size_t>((i + 1) % 3)], el.v[static_cast<std::size_t>((i + 2) % 3)]};
}

} // namespace

Mesh::Mesh(std::vector<Vertex> vertices, std::vector<Element> elements,
           std::vector<Circle> curves, bool snap_to_curves)
    : vertices_(std::move(vertices))
    , elements_(std::move(elements))
    , curves_(std::move(curves))
    , snap_to_curves_(snap_to_curves)
{
    for (const auto& v : vertices_) {
        if (!std::isfinite(v.x) || !std::isfinite(v.y))
            throw std::invalid_argument("mesh: non-finite vertex coordinate");
        if (v.curve_id && (!v.on_boundary || *v.curve_id < 0 ||
                           *v.curve_id >= static_cast<int>(curves_.size())))
            throw std::invalid_argument("mesh: curve id on a non-boundary vertex or unknown curve");
    }
    const int nv = static_cast<int>(vertices_.size());
    for (const auto& el : elements_) {
        for (int i : el.v)
            if (i < 0 || i >= nv)
                throw std::invalid_argument("mesh: element references a missing vertex");
        if (el.v[0] == el.v[1] || el.v[1] == el.v[2] || el.v[0] == el.v[2])
            throw std::invalid_argument("mesh: element with repeated vertices");
        if (el.refinement_edge < 0 || el.refinement_edge > 2)
            throw std::invalid_argument("mesh: refinement edge out of range");
        if (el.generation < 0)
            throw std::invalid_argument("mesh: negative generation");
        const double area = signed_area(point(el.v[0]), point(el.v[1]), point(el.v[2]));
        if (!(area > 0.0))
            throw std::invalid_argument("mesh: element with non-positive signed area");
    }
    build_edge_table();
}

Mesh Mesh::unchecked(std::vector<Vertex> vertices, std::vector<Element> elements)
{
    Mesh m;
    m.vertices_ = std::move(vertices);
    m.elements_ = std::move(elements);
    m.build_edge_table();
    return m;
}

void Mesh::build_edge_table()
{
    edge_vertices_.clear();
    edge_elements_.clear();
    edge_index_.clear();
    overfull_edges_ = 0;
    element_edges_.assign(elements_.size(), {-1, -1, -1});
    edge_index_.reserve(elements_.size() * 2);
    edge_vertices_.reserve(elements_.size() * 2);
    edge_elements_.reserve(elements_.size() * 2);

    for (std::size_t t = 0; t < elements_.size(); ++t) {
        for (int i = 0; i < 3; ++i) {
            auto [a, b] = local_edge(elements_[t], i);
            const auto [it, inserted] = edge_index_.try_emplace(edge_key(a, b), static_cast<int>(edge_vertices_.size()));
            const int e = it->second;
            if (inserted) {
                edge_vertices_.push_back({std::min(a, b), std::max(a, b)});
                edge_elements_.push_back({static_cast<int>(t), -1});
            } else if (edge_elements_[static_cast<std::size_t>(e)][1] < 0) {
                edge_elements_[static_cast<std::size_t>(e)][1] = static_cast<int>(t);
            } else {
                ++overfull_edges_;
            }
            element_edges_[t][static_cast<std::size_t>(i)] = e;
        }
    }
}

std::optional<int> Mesh::find_edge(int a, int b) const
{
    auto it = edge_index_.find(edge_key(a, b));
    if (it == edge_index_.end())
        return std::nullopt;
    return it->second;
}

int Mesh::neighbor(int t, int local) const
{
    const auto& adj = edge_elements(element_edge(t, local));
    return adj[0] == t ? adj[1] : adj[0];
}

ElementGeometry Mesh::geometry(int t) const
{
    const auto& el = element(t);
    const std::array<Point, 3> p{point(el.v[0]), point(el.v[1]), point(el.v[2])};
    ElementGeometry g;
    g.area = signed_area(p[0], p[1], p[2]);
    for (std::size_t i = 0; i < 3; ++i) {
        const Point d = p[(i + 2) % 3] - p[(i + 1) % 3];
        const double len = norm(d);
        g.edge_length[i] = len;
        g.normal[i] = {d.y / len, -d.x / len};  // right of a ccw traversal = outward
        g.diameter = std::max(g.diameter, len);
    }
    return g;
}

Point Mesh::centroid(int t) const
{
    return to_physical(t, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
}

Point Mesh::to_physical(int t, const std::array<double, 3>& bary) const
{
    const auto& el = element(t);
    return bary[0] * point(el.v[0]) + bary[1] * point(el.v[1]) + bary[2] * point(el.v[2]);
}

int longest_edge(const Mesh& mesh, int t)
{
    const auto g = mesh.geometry(t);
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (g.edge_length[static_cast<std::size_t>(i)] > g.edge_length[static_cast<std::size_t>(best)] * (1.0 + 1e-12))
            best = i;
    return best;
}

DomainSpec parse_domain(const std::string& name)
{
    if (name == "unit-square")
        return {DomainKind::UnitSquare};
    if (name == "square2")
        return {DomainKind::Square2};
    if (name == "three-quarter-disk")
        return {DomainKind::ThreeQuarterDisk};
    if (name == "slit-square")
        return {DomainKind::SlitSquare};
    throw std::invalid_argument("unknown domain '" + name + "'");
}

std::string domain_name(DomainKind kind)
{
    switch (kind) {
    case DomainKind::UnitSquare: return "unit-square";
    case DomainKind::Square2: return "square2";
    case DomainKind::ThreeQuarterDisk: return "three-quarter-disk";
    case DomainKind::SlitSquare: return "slit-square";
    }
    return "unknown";
}

namespace {

// Assigns the longest edge of every element as its refinement edge.
Mesh with_longest_edge_tags(std::vector<Vertex> vertices, std::vector<Element> elements,
                            std::vector<Circle> curves = {}, bool snap = true)
{
    Mesh draft(vertices, elements, curves, snap);
    for (std::size_t t = 0; t < elements.size(); ++t)
        elements[t].refinement_edge = longest_edge(draft, static_cast<int>(t));
    return Mesh(std::move(vertices), std::move(elements), std::move(curves), snap);
}

Mesh square_mesh(bool drop_lower_right)
{
    // 3x3 grid on [-1,1]^2, each quadrant split by the diagonal through the origin.
    std::vector<Vertex> v;
    for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i)
            v.push_back({double(i), double(j), i != 0 || j != 0, std::nullopt});
    auto id = [](int i, int j) { return (j + 1) * 3 + (i + 1); };
    const int c = id(0, 0);
    std::vector<Element> e{
        {{c, id(1, 0), id(1, 1)}},   {{c, id(1, 1), id(0, 1)}},    // quadrant I
        {{c, id(0, 1), id(-1, 1)}},  {{c, id(-1, 1), id(-1, 0)}},  // II
        {{c, id(-1, 0), id(-1, -1)}}, {{c, id(-1, -1), id(0, -1)}}, // III
        {{c, id(0, -1), id(1, -1)}}, {{c, id(1, -1), id(1, 0)}},   // IV
    };
    if (drop_lower_right) {
        e.resize(6);
        v[static_cast<std::size_t>(c)].on_boundary = true;
        // (1,-1) is no longer referenced; keep numbering compact.
        const int dead = id(1, -1);
        v.erase(v.begin() + dead);
        for (auto& el : e)
            for (int& k : el.v)
                if (k > dead)
                    --k;
    }
    return with_longest_edge_tags(std::move(v), std::move(e));
}

Mesh disk_mesh(int n_arc, bool snap)
{
    if (n_arc < 4 || n_arc % 2 != 0)
        throw std::invalid_argument("three-quarter disk needs an even arc segment count >= 4");
    const int m = n_arc / 2;
    const double sweep = 1.5 * std::numbers::pi;

    std::vector<Vertex> v;
    v.push_back({0.0, 0.0, true, std::nullopt});
    auto inner = [](int j) { return 1 + j; };
    for (int j = 0; j <= m; ++j) {
        const double phi = sweep * j / m;
        v.push_back({0.5 * std::cos(phi), 0.5 * std::sin(phi), j == 0 || j == m, std::nullopt});
    }
    auto outer = [m](int k) { return m + 2 + k; };
    for (int k = 0; k <= n_arc; ++k) {
        const double phi = sweep * k / n_arc;
        double x = std::cos(phi), y = std::sin(phi);
        if (k == n_arc) {
            x = 0.0;
            y = -1.0;
        }
        v.push_back({x, y, true, 0});
    }

    std::vector<Element> e;
    for (int j = 0; j < m; ++j) {
        e.push_back({{0, inner(j), inner(j + 1)}});
        e.push_back({{inner(j), outer(2 * j), outer(2 * j + 1)}});
        e.push_back({{inner(j), outer(2 * j + 1), inner(j + 1)}});
        e.push_back({{inner(j + 1), outer(2 * j + 1), outer(2 * j + 2)}});
    }
    return with_longest_edge_tags(std::move(v), std::move(e), {Circle{{0.0, 0.0}, 1.0}}, snap);
}

} // namespace

Mesh make_initial_mesh(const DomainSpec& domain)
{
    switch (domain.kind) {
    case DomainKind::UnitSquare: {
        std::vector<Vertex> v{{0, 0, true, {}}, {1, 0, true, {}}, {1, 1, true, {}}, {0, 1, true, {}}};
        std::vector<Element> e{{{0, 1, 2}}, {{0, 2, 3}}};
        return with_longest_edge_tags(std::move(v), std::move(e));
    }
    case DomainKind::Square2: return square_mesh(false);
    case DomainKind::SlitSquare: return square_mesh(true);
    case DomainKind::ThreeQuarterDisk: return disk_mesh(domain.arc_segments, domain.snap_to_arc);
    }
    throw std::invalid_argument("unknown domain");
}

RefineResult refine(const Mesh& mesh, std::span<const int> marked, int times)
{
    if (times < 1)
        throw std::invalid_argument("refine: bisection count must be >= 1");

    RefineResult out;
    std::vector<Vertex> vertices = mesh.vertices();
    std::vector<Element> elements = mesh.elements();
    std::vector<int> origin(elements.size());
    std::vector<int> remaining(elements.size(), 0);
    std::vector<char> origin_refined(elements.size(), 0);
    for (std::size_t t = 0; t < elements.size(); ++t)
        origin[t] = static_cast<int>(t);
    for (int t : marked) {
        if (t < 0 || t >= static_cast<int>(elements.size()))
            throw std::out_of_range("refine: marked element index out of range");
        remaining[static_cast<std::size_t>(t)] = times;
    }

    const bool snap = mesh.snaps_to_curves();
    const auto& curves = mesh.curves();

    for (int round = 0; round < times; ++round) {
        // Boundary status is read from the mesh at the start of the round: every edge that
        // gets marked during a round is an edge of that mesh.
        std::unordered_map<EdgeKey, int> adjacency;
        adjacency.reserve(elements.size() * 2);
        for (const auto& el : elements)
            for (int i = 0; i < 3; ++i) {
                auto [a, b] = local_edge(el, i);
                ++adjacency[edge_key(a, b)];
            }

        std::unordered_map<EdgeKey, int> marked_edges;  // edge -> midpoint vertex (or -1)
        auto ref_key = [](const Element& el) {
            auto [a, b] = local_edge(el, el.refinement_edge);
            return edge_key(a, b);
        };
        for (std::size_t t = 0; t < elements.size(); ++t)
            if (remaining[t] > 0)
                marked_edges.emplace(ref_key(elements[t]), -1);
        if (marked_edges.empty())
            break;

        // Closure: an element with any marked edge must also have its refinement edge marked.
        for (bool changed = true; changed;) {
            changed = false;
            for (const auto& el : elements) {
                const EdgeKey rk = ref_key(el);
                if (marked_edges.contains(rk))
                    continue;
                for (int i = 0; i < 3; ++i) {
                    auto [a, b] = local_edge(el, i);
                    if (marked_edges.contains(edge_key(a, b))) {
                        marked_edges.emplace(rk, -1);
                        changed = true;
                        break;
                    }
                }
            }
        }

        auto midpoint = [&](int a, int b) {
            int& mid = marked_edges.at(edge_key(a, b));
            if (mid >= 0)
                return mid;
            const Vertex& va = vertices[static_cast<std::size_t>(a)];
            const Vertex& vb = vertices[static_cast<std::size_t>(b)];
            Vertex m{0.5 * (va.x + vb.x), 0.5 * (va.y + vb.y), false, std::nullopt};
            if (adjacency.at(edge_key(a, b)) == 1) {
                m.on_boundary = true;
                if (va.curve_id && vb.curve_id && *va.curve_id == *vb.curve_id) {
                    m.curve_id = va.curve_id;
                    if (snap) {
                        const Circle& c = curves[static_cast<std::size_t>(*va.curve_id)];
                        const Point d = m.point() - c.center;
                        const Point s = c.center + (c.radius / norm(d)) * d;
                        m.x = s.x;
                        m.y = s.y;
                    }
                }
            }
            mid = static_cast<int>(vertices.size());
            vertices.push_back(m);
            out.new_vertex_parents.push_back({a, b});
            return mid;
        };

        // Bisect until no element has a marked refinement edge. Children inherit the
        // parent's other two edges as refinement edges, so marked edges propagate down.
        for (std::size_t t = 0; t < elements.size();) {
            const Element el = elements[t];
            if (!marked_edges.contains(ref_key(el))) {
                ++t;
                continue;
            }
            const int k = el.refinement_edge;
            const int apex = el.v[static_cast<std::size_t>(k)];
            const int a = el.v[static_cast<std::size_t>((k + 1) % 3)];
            const int b = el.v[static_cast<std::size_t>((k + 2) % 3)];
            const int m = midpoint(a, b);
            const int need = std::max(0, remaining[t] - 1);

            elements[t] = Element{{m, apex, a}, 0, el.generation + 1};
            elements.push_back(Element{{m, b, apex}, 0, el.generation + 1});
            origin.push_back(origin[t]);
            remaining[t] = need;
            remaining.push_back(need);
            origin_refined[static_cast<std::size_t>(origin[t])] = 1;
            ++out.bisections;
        }
    }

    for (std::size_t t = 0; t < origin_refined.size(); ++t)
        if (origin_refined[t])
            out.refined.push_back(static_cast<int>(t));
    out.mesh = Mesh(std::move(vertices), std::move(elements), mesh.curves(), snap);
    return out;
}

Mesh bisect(const Mesh& mesh, int element_id)
{
    const int ids[] = {element_id};
    return refine(mesh, ids, 1).mesh;
}

MeshAudit audit(const Mesh& mesh)
{
    MeshAudit a;
    a.element_count = mesh.element_count();
    a.vertex_count = mesh.vertex_count();
    a.min_angle = std::numbers::pi;
    bool ok = mesh.overfull_edge_count() == 0;

    for (int t = 0; t < static_cast<int>(mesh.element_count()); ++t) {
        const auto& el = mesh.element(t);
        const auto g = mesh.geometry(t);
        if (!(g.area > 0.0)) {
            ok = false;
            continue;
        }
        const double perimeter = g.edge_length[0] + g.edge_length[1] + g.edge_length[2];
        const double inradius = 2.0 * g.area / perimeter;
        a.max_aspect = std::max(a.max_aspect, g.diameter / inradius);
        for (int i = 0; i < 3; ++i) {
            const Point p = mesh.point(el.v[static_cast<std::size_t>(i)]);
            const Point u = mesh.point(el.v[static_cast<std::size_t>((i + 1) % 3)]) - p;
            const Point w = mesh.point(el.v[static_cast<std::size_t>((i + 2) % 3)]) - p;
            a.min_angle = std::min(a.min_angle, std::atan2(std::abs(cross(u, w)), dot(u, w)));
        }
    }

    // Single-sided edges must lie on the domain boundary and must not be split on the
    // other side (a hanging node shows up as a collinear single-sided sub-edge).
    std::vector<std::vector<int>> boundary_edges_at(mesh.vertex_count());
    for (int e = 0; e < static_cast<int>(mesh.edge_count()); ++e) {
        if (!mesh.is_boundary_edge(e))
            continue;
        const auto [p, q] = mesh.edge_vertices(e);
        if (!mesh.vertex(p).on_boundary || !mesh.vertex(q).on_boundary)
            ok = false;
        boundary_edges_at[static_cast<std::size_t>(p)].push_back(e);
        boundary_edges_at[static_cast<std::size_t>(q)].push_back(e);
    }
    for (int e = 0; ok && e < static_cast<int>(mesh.edge_count()); ++e) {
        if (!mesh.is_boundary_edge(e))
            continue;
        const auto [p, q] = mesh.edge_vertices(e);
        const Point P = mesh.point(p), Q = mesh.point(q);
        const double len = norm(Q - P);
        for (int f : boundary_edges_at[static_cast<std::size_t>(p)]) {
            if (f == e)
                continue;
            const auto fv = mesh.edge_vertices(f);
            const int r = fv[0] == p ? fv[1] : fv[0];
            const Point R = mesh.point(r);
            const double along = dot(R - P, Q - P) / (len * len);
            if (std::abs(cross(R - P, Q - P)) <= 1e-12 * len * len && along > 1e-12 && along < 1.0 - 1e-12) {
                ok = false;
                break;
            }
        }
    }
    a.conforming = ok;
    return a;
}

std::vector<double> prolongate(std::span<const double> coarse, const RefineResult& refinement)
{
    std::vector<double> fine(coarse.begin(), coarse.end());
    fine.reserve(coarse.size() + refinement.new_vertex_parents.size());
    for (const auto& [a, b] : refinement.new_vertex_parents)
        fine.push_back(0.5 * (fine[static_cast<std::size_t>(a)] + fine[static_cast<std::size_t>(b)]));
    return fine;
}

} // namespace afem
