#include "afem/mesh.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

using namespace afem;

namespace {

Mesh refine_uniform(Mesh mesh, int levels)
{
    for (int k = 0; k < levels; ++k) {
        std::vector<int> all(mesh.element_count());
        std::iota(all.begin(), all.end(), 0);
        mesh = refine(mesh, all).mesh;
    }
    return mesh;
}

double total_area(const Mesh& mesh)
{
    double a = 0.0;
    for (std::size_t t = 0; t < mesh.element_count(); ++t)
        a += mesh.geometry(static_cast<int>(t)).area;
    return a;
}

bool point_in_triangle(const Mesh& mesh, int t, Point x)
{
    const auto& e = mesh.element(t);
    for (int i = 0; i < 3; ++i) {
        const Point a = mesh.point(e.v[(i + 1) % 3]);
        const Point b = mesh.point(e.v[(i + 2) % 3]);
        if (cross(b - a, x - a) < -1e-12)
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("unit square has two triangles and four vertices")
{
    const Mesh m = make_initial_mesh({DomainKind::UnitSquare});
    CHECK(m.element_count() == 2);
    CHECK(m.vertex_count() == 4);
    CHECK(audit(m).conforming);
    CHECK(std::isfinite(audit(m).max_aspect));
    CHECK(total_area(m) == doctest::Approx(1.0));
}

TEST_CASE("square2 is a criss-cross of eight triangles around the centre")
{
    const Mesh m = make_initial_mesh({DomainKind::Square2});
    CHECK(m.element_count() == 8);
    CHECK(audit(m).conforming);
    CHECK(total_area(m) == doctest::Approx(4.0));
    int centre = -1;
    for (std::size_t i = 0; i < m.vertex_count(); ++i)
        if (norm(m.point(static_cast<int>(i))) < 1e-14)
            centre = static_cast<int>(i);
    REQUIRE(centre >= 0);
    for (const auto& e : m.elements())
        CHECK(std::count(e.v.begin(), e.v.end(), centre) == 1);
    CHECK_FALSE(m.vertex(centre).on_boundary);
}

TEST_CASE("three-quarter disk arc vertices lie on the unit circle")
{
    DomainSpec domain{DomainKind::ThreeQuarterDisk, 6, true};
    const Mesh m = make_initial_mesh(domain);
    CHECK(audit(m).conforming);
    int on_arc = 0;
    for (const auto& v : m.vertices()) {
        if (v.curve_id) {
            ++on_arc;
            CHECK(std::abs(norm(v.point()) - 1.0) <= 1e-12);
        }
    }
    CHECK(on_arc == 7);
    for (std::size_t t = 0; t < m.element_count(); ++t)
        CHECK(m.geometry(static_cast<int>(t)).area > 0.0);
}

TEST_CASE("slit square covers three quadrants")
{
    const Mesh m = make_initial_mesh({DomainKind::SlitSquare});
    CHECK(audit(m).conforming);
    CHECK(total_area(m) == doctest::Approx(3.0));
    for (std::size_t t = 0; t < m.element_count(); ++t) {
        const Point c = m.centroid(static_cast<int>(t));
        CHECK_FALSE((c.x > 0.0 && c.y < 0.0));
    }
}

TEST_CASE("domain names")
{
    CHECK(parse_domain("square2").kind == DomainKind::Square2);
    CHECK(parse_domain("three-quarter-disk").kind == DomainKind::ThreeQuarterDisk);
    CHECK(domain_name(DomainKind::SlitSquare) == "slit-square");
    CHECK_THROWS_AS(parse_domain("circle"), std::invalid_argument);
}

TEST_CASE("element geometry")
{
    SUBCASE("right triangle")
    {
        const Mesh m({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}, 0, 0}});
        const auto g = m.geometry(0);
        CHECK(g.area == doctest::Approx(0.5));
        CHECK(g.diameter == doctest::Approx(std::sqrt(2.0)));
        CHECK(g.edge_length[0] == doctest::Approx(std::sqrt(2.0)));
        CHECK(g.normal[0].x == doctest::Approx(1.0 / std::sqrt(2.0)));
        CHECK(g.normal[1].x == doctest::Approx(-1.0));
        CHECK(g.normal[2].y == doctest::Approx(-1.0));
    }
    SUBCASE("equilateral")
    {
        const Mesh m({{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}}, {{{0, 1, 2}, 0, 0}});
        CHECK(m.geometry(0).area == doctest::Approx(std::sqrt(3.0) / 4));
    }
    SUBCASE("degenerate and clockwise triangles are rejected")
    {
        CHECK_THROWS_AS(Mesh({{0, 0}, {1, 1}, {2, 2}}, {{{0, 1, 2}, 0, 0}}), std::invalid_argument);
        CHECK_THROWS_AS(Mesh({{0, 0}, {0, 1}, {1, 0}}, {{{0, 1, 2}, 0, 0}}), std::invalid_argument);
        CHECK_THROWS_AS(Mesh({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 1}, 0, 0}}), std::invalid_argument);
        CHECK_THROWS_AS(Mesh({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}, 3, 0}}), std::invalid_argument);
        CHECK_THROWS_AS(Mesh({{0, 0}, {1, 0}, {0, NAN}}, {{{0, 1, 2}, 0, 0}}), std::invalid_argument);
    }
}

TEST_CASE("edge table")
{
    const Mesh m = make_initial_mesh({DomainKind::Square2});
    CHECK(m.edge_count() == 16);
    int interior = 0;
    for (std::size_t e = 0; e < m.edge_count(); ++e)
        interior += m.is_boundary_edge(static_cast<int>(e)) ? 0 : 1;
    CHECK(interior == 8);
    CHECK(m.overfull_edge_count() == 0);
    for (std::size_t t = 0; t < m.element_count(); ++t)
        for (int i = 0; i < 3; ++i) {
            const int n = m.neighbor(static_cast<int>(t), i);
            if (n >= 0)
                CHECK(n != static_cast<int>(t));
        }
}

TEST_CASE("bisecting element 0 of the unit square gives four conforming triangles")
{
    const Mesh m = make_initial_mesh({DomainKind::UnitSquare});
    const Mesh b = bisect(m, 0);
    CHECK(b.element_count() == 4);
    CHECK(b.vertex_count() == 5);
    CHECK(audit(b).conforming);
    CHECK(total_area(b) == doctest::Approx(1.0));
    for (const auto& e : b.elements())
        CHECK(e.generation == 1);
}

TEST_CASE("generations increase by one per split")
{
    const Mesh m = make_initial_mesh({DomainKind::Square2});
    const std::vector<int> first{0};
    const auto r1 = refine(m, first);
    std::vector<int> children;
    for (std::size_t t = 0; t < r1.mesh.element_count(); ++t)
        if (r1.mesh.element(static_cast<int>(t)).generation == 1)
            children.push_back(static_cast<int>(t));
    REQUIRE(children.size() >= 2);
    const auto r2 = refine(r1.mesh, children);
    CHECK(audit(r2.mesh).conforming);
    for (const auto& e : r2.mesh.elements()) {
        CHECK(e.generation >= 0);
        CHECK(e.generation <= 2);
    }
    int gen2 = 0;
    for (const auto& e : r2.mesh.elements())
        gen2 += e.generation == 2 ? 1 : 0;
    CHECK(gen2 >= 2 * static_cast<int>(children.size()));
}

TEST_CASE("arc midpoints are snapped to the circle")
{
    const Mesh m = make_initial_mesh({DomainKind::ThreeQuarterDisk, 6, true});
    int arc_element = -1;
    for (std::size_t t = 0; t < m.element_count() && arc_element < 0; ++t) {
        const auto& e = m.element(static_cast<int>(t));
        const int a = e.v[(e.refinement_edge + 1) % 3];
        const int b = e.v[(e.refinement_edge + 2) % 3];
        if (m.vertex(a).curve_id && m.vertex(b).curve_id)
            arc_element = static_cast<int>(t);
    }
    REQUIRE(arc_element >= 0);
    const std::vector<int> marked{arc_element};
    const auto r = refine(m, marked);
    REQUIRE(r.mesh.vertex_count() > m.vertex_count());
    bool found = false;
    for (std::size_t i = m.vertex_count(); i < r.mesh.vertex_count(); ++i) {
        const auto& v = r.mesh.vertex(static_cast<int>(i));
        if (v.curve_id) {
            found = true;
            CHECK(std::abs(norm(v.point()) - 1.0) <= 1e-12);
        }
    }
    CHECK(found);
    CHECK(audit(r.mesh).conforming);

    const Mesh flat = make_initial_mesh({DomainKind::ThreeQuarterDisk, 6, false});
    const auto rf = refine(flat, marked);
    for (std::size_t i = flat.vertex_count(); i < rf.mesh.vertex_count(); ++i)
        if (rf.mesh.vertex(static_cast<int>(i)).on_boundary && rf.mesh.vertex(static_cast<int>(i)).curve_id)
            CHECK(norm(rf.mesh.point(static_cast<int>(i))) < 1.0 - 1e-3);
}

TEST_CASE("refine edge cases")
{
    const Mesh m = make_initial_mesh({DomainKind::Square2});
    SUBCASE("empty marking leaves the mesh unchanged")
    {
        const auto r = refine(m, std::vector<int>{});
        CHECK(r.mesh.element_count() == m.element_count());
        CHECK(r.mesh.vertex_count() == m.vertex_count());
        CHECK(r.refined.empty());
        CHECK(r.bisections == 0);
    }
    SUBCASE("marking everything at least doubles the element count")
    {
        std::vector<int> all(m.element_count());
        std::iota(all.begin(), all.end(), 0);
        const auto r = refine(m, all);
        CHECK(r.mesh.element_count() >= 2 * m.element_count());
        CHECK(r.refined.size() == m.element_count());
    }
    SUBCASE("closure spreads beyond the marked interior element")
    {
        const Mesh fine = refine_uniform(m, 2);
        int interior = -1;
        for (std::size_t t = 0; t < fine.element_count() && interior < 0; ++t) {
            bool inner = true;
            for (int i = 0; i < 3; ++i)
                inner = inner && fine.neighbor(static_cast<int>(t), i) >= 0;
            if (inner)
                interior = static_cast<int>(t);
        }
        REQUIRE(interior >= 0);
        const std::vector<int> one{interior};
        const auto r = refine(fine, one);
        CHECK(r.refined.size() > 1);
        CHECK(std::binary_search(r.refined.begin(), r.refined.end(), interior));
        CHECK(audit(r.mesh).conforming);
    }
    SUBCASE("invalid indices are rejected")
    {
        const std::vector<int> bad{99};
        CHECK_THROWS_AS(refine(m, bad), std::out_of_range);
    }
}

TEST_CASE("audit")
{
    const Mesh m = make_initial_mesh({DomainKind::UnitSquare});
    const MeshAudit a0 = audit(m);
    CHECK(a0.conforming);
    CHECK(a0.min_angle == doctest::Approx(std::numbers::pi / 4));

    SUBCASE("shape regularity is preserved by ten uniform refinements")
    {
        const Mesh fine = refine_uniform(m, 10);
        const MeshAudit a = audit(fine);
        CHECK(a.conforming);
        CHECK(a.element_count == 2u << 10);
        CHECK(a.max_aspect == doctest::Approx(a0.max_aspect).epsilon(1e-9));
        CHECK(a.min_angle == doctest::Approx(a0.min_angle).epsilon(1e-9));
    }
    SUBCASE("a hanging node is detected")
    {
        // Left triangle split at the diagonal midpoint, right triangle left whole.
        std::vector<Vertex> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
        std::vector<Element> e{{{0, 4, 3}, 0, 1}, {{4, 2, 3}, 0, 1}, {{0, 1, 2}, 1, 0}};
        CHECK_FALSE(audit(Mesh::unchecked(v, e)).conforming);
    }
    SUBCASE("an edge shared by three elements is detected")
    {
        std::vector<Vertex> v{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
        std::vector<Element> e{{{0, 1, 2}, 0, 0}, {{1, 3, 2}, 0, 0}, {{1, 3, 2}, 0, 0}};
        CHECK_FALSE(audit(Mesh::unchecked(v, e)).conforming);
    }
}

TEST_CASE("prolongation reproduces linear functions")
{
    const Mesh m = refine_uniform(make_initial_mesh({DomainKind::Square2}), 1);
    std::vector<double> coarse(m.vertex_count());
    for (std::size_t i = 0; i < m.vertex_count(); ++i)
        coarse[i] = 2.0 * m.vertex(static_cast<int>(i)).x - 3.0 * m.vertex(static_cast<int>(i)).y + 1.0;
    const std::vector<int> marked{0, 3, 5};
    const auto r = refine(m, marked, 2);
    const auto fine = prolongate(coarse, r);
    REQUIRE(fine.size() == r.mesh.vertex_count());
    for (std::size_t i = 0; i < fine.size(); ++i)
        CHECK(fine[i] == doctest::Approx(2.0 * r.mesh.vertex(static_cast<int>(i)).x -
                                         3.0 * r.mesh.vertex(static_cast<int>(i)).y + 1.0));
}

TEST_CASE("property: random marking keeps meshes conforming, shape-regular and nested")
{
    const std::vector<DomainSpec> domains{{DomainKind::UnitSquare},
                                          {DomainKind::Square2},
                                          {DomainKind::SlitSquare},
                                          {DomainKind::ThreeQuarterDisk, 12, false}};
    std::mt19937 rng(20261017);
    for (const auto& d : domains) {
        CAPTURE(domain_name(d.kind));
        Mesh mesh = refine_uniform(make_initial_mesh(d), 1);
        const MeshAudit a0 = audit(mesh);
        const double area0 = total_area(mesh);
        for (int step = 0; step < 12; ++step) {
            std::bernoulli_distribution pick(0.15);
            std::vector<int> marked;
            for (std::size_t t = 0; t < mesh.element_count(); ++t)
                if (pick(rng))
                    marked.push_back(static_cast<int>(t));
            if (marked.empty())
                marked.push_back(0);
            const auto r = refine(mesh, marked);
            const MeshAudit a = audit(r.mesh);
            REQUIRE(a.conforming);
            CHECK(a.max_aspect <= 2.0 * a0.max_aspect);
            CHECK(total_area(r.mesh) == doctest::Approx(area0).epsilon(1e-12));
            CHECK(r.mesh.element_count() >= mesh.element_count() + marked.size());
            // Every marked element was refined; old vertices are kept in place.
            for (int t : marked)
                CHECK(std::binary_search(r.refined.begin(), r.refined.end(), t));
            for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
                CHECK(r.mesh.vertex(static_cast<int>(i)).x == mesh.vertex(static_cast<int>(i)).x);
                CHECK(r.mesh.vertex(static_cast<int>(i)).y == mesh.vertex(static_cast<int>(i)).y);
            }
            // Nestedness: every child centroid lies in exactly one refined parent.
            std::uniform_int_distribution<std::size_t> child(0, r.mesh.element_count() - 1);
            for (int s = 0; s < 20; ++s) {
                const Point c = r.mesh.centroid(static_cast<int>(child(rng)));
                int hits = 0;
                for (std::size_t t = 0; t < mesh.element_count(); ++t)
                    hits += point_in_triangle(mesh, static_cast<int>(t), c) ? 1 : 0;
                CHECK(hits >= 1);
            }
            mesh = r.mesh;
        }
    }
}
