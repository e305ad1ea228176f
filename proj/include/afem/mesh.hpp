#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace afem {

struct Point
{
    double x = 0.0;
    double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
double norm(Point a);

struct Vertex
{
    double x = 0.0;
    double y = 0.0;
    bool on_boundary = false;
    /// Index into Mesh::curves() when the vertex sits on a curved boundary segment.
    std::optional<int> curve_id;

    Point point() const { return {x, y}; }
};

/// Triangle with counterclockwise vertices. Local edge i is the edge opposite v[i],
/// so the refinement edge is the edge opposite the newest vertex.
struct Element
{
    std::array<int, 3> v{};
    int refinement_edge = 0;
    int generation = 0;
};

/// Circle used to snap midpoints of curved boundary edges.
struct Circle
{
    Point center;
    double radius = 1.0;
};

struct ElementGeometry
{
    double area = 0.0;
    double diameter = 0.0;               // h_T
    std::array<double, 3> edge_length{};  // h_E, edge i opposite vertex i
    std::array<Point, 3> normal{};        // outward unit normals
};

struct MeshAudit
{
    bool conforming = false;
    double max_aspect = 0.0;  // max h_T / rho_T
    double min_angle = 0.0;   // radians
    std::size_t element_count = 0;
    std::size_t vertex_count = 0;
};

using EdgeKey = std::uint64_t;

inline EdgeKey edge_key(int a, int b)
{
    if (a > b)
        std::swap(a, b);
    return (static_cast<EdgeKey>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

/// Conforming triangulation with an edge table kept in sync with the element list.
class Mesh
{
public:
    Mesh() = default;

    /// Throws std::invalid_argument on non-finite coordinates, repeated vertices in an
    /// element, non-positive signed area or an invalid refinement edge.
    Mesh(std::vector<Vertex> vertices, std::vector<Element> elements,
         std::vector<Circle> curves = {}, bool snap_to_curves = true);

    /// Test-only: skips validation so audit() can be exercised on broken input.
    static Mesh unchecked(std::vector<Vertex> vertices, std::vector<Element> elements);

    const std::vector<Vertex>& vertices() const { return vertices_; }
    const std::vector<Element>& elements() const { return elements_; }
    const std::vector<Circle>& curves() const { return curves_; }
    bool snaps_to_curves() const { return snap_to_curves_; }

    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t element_count() const { return elements_.size(); }

    const Vertex& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
    const Element& element(int t) const { return elements_[static_cast<std::size_t>(t)]; }
    Point point(int i) const { return vertex(i).point(); }

    // Edge table. Edge e joins edge_vertices(e)[0] < edge_vertices(e)[1] and is adjacent
    // to edge_elements(e)[0] and, for interior edges, edge_elements(e)[1] (-1 otherwise).
    std::size_t edge_count() const { return edge_vertices_.size(); }
    const std::array<int, 2>& edge_vertices(int e) const { return edge_vertices_[static_cast<std::size_t>(e)]; }
    const std::array<int, 2>& edge_elements(int e) const { return edge_elements_[static_cast<std::size_t>(e)]; }
    int element_edge(int t, int local) const { return element_edges_[static_cast<std::size_t>(t)][static_cast<std::size_t>(local)]; }
    bool is_boundary_edge(int e) const { return edge_elements(e)[1] < 0; }
    std::optional<int> find_edge(int a, int b) const;
    /// Number of elements sharing some edge beyond two; zero on valid meshes.
    int overfull_edge_count() const { return overfull_edges_; }

    /// Neighbor across local edge `local` of element t, or -1 on the boundary.
    int neighbor(int t, int local) const;

    ElementGeometry geometry(int t) const;
    Point centroid(int t) const;
    Point to_physical(int t, const std::array<double, 3>& bary) const;

private:
    void build_edge_table();

    std::vector<Vertex> vertices_;
    std::vector<Element> elements_;
    std::vector<Circle> curves_;
    bool snap_to_curves_ = true;

    std::vector<std::array<int, 2>> edge_vertices_;
    std::vector<std::array<int, 2>> edge_elements_;
    std::vector<std::array<int, 3>> element_edges_;
    std::unordered_map<EdgeKey, int> edge_index_;
    int overfull_edges_ = 0;
};

/// Local index of the longest edge; ties go to the lowest local index.
int longest_edge(const Mesh& mesh, int t);

enum class DomainKind { UnitSquare, Square2, ThreeQuarterDisk, SlitSquare };

struct DomainSpec
{
    DomainKind kind = DomainKind::UnitSquare;
    int arc_segments = 12;    // three-quarter disk only; must be even and >= 4
    bool snap_to_arc = true;  // three-quarter disk only
};

/// Accepts "unit-square", "square2", "three-quarter-disk", "slit-square".
DomainSpec parse_domain(const std::string& name);
std::string domain_name(DomainKind kind);

Mesh make_initial_mesh(const DomainSpec& domain);

struct RefineResult
{
    Mesh mesh;
    /// Indices (into the input mesh) of elements that no longer exist, sorted.
    std::vector<int> refined;
    /// Parent edge endpoints of every new vertex, in creation order. New vertex k has index
    /// input.vertex_count() + k; its parents may be earlier new vertices.
    std::vector<std::array<int, 2>> new_vertex_parents;
    int bisections = 0;
};

/// Newest-vertex bisection: every marked element is bisected at least `times` times and
/// conformity is restored by closure. Midpoints of curved boundary edges are snapped.
RefineResult refine(const Mesh& mesh, std::span<const int> marked, int times = 1);

Mesh bisect(const Mesh& mesh, int element_id);

MeshAudit audit(const Mesh& mesh);

/// P1 prolongation of a nodal field along the vertex hierarchy of a refine() call.
std::vector<double> prolongate(std::span<const double> coarse, const RefineResult& refinement);

} // namespace afem
