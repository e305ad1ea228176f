#include "afem/cli.hpp"
#include "afem/examples.hpp"
#include "afem/reports.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>

using namespace afem;

namespace {

constexpr double pi = std::numbers::pi;

Point polar(double r, double theta) { return {r * std::cos(theta), r * std::sin(theta)}; }

double laplacian_fd(const ScalarFunction& f, Point x, double h)
{
    return (f({x.x + h, x.y}) + f({x.x - h, x.y}) + f({x.x, x.y + h}) + f({x.x, x.y - h}) - 4.0 * f(x)) / (h * h);
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr)
{
    args.insert(args.begin(), "afem_ocp");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text)
        *out_text = out.str() + err.str();
    return code;
}

std::vector<std::pair<double, double>> polyline_points(const std::string& svg, const std::string& id)
{
    const std::regex re("<polyline id=\"" + id + "\"[^>]* points=\"([^\"]*)\"");
    std::smatch m;
    std::vector<std::pair<double, double>> pts;
    if (!std::regex_search(svg, m, re))
        return pts;
    std::istringstream in(m[1].str());
    std::string pair;
    while (in >> pair) {
        const auto comma = pair.find(',');
        pts.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
    }
    return pts;
}

std::vector<AdaptRecord> synthetic_records(int n, bool with_errors)
{
    std::vector<AdaptRecord> out;
    for (int k = 0; k < n; ++k) {
        AdaptRecord r;
        r.iter = k;
        r.n_elements = 8L << k;
        r.n_dofs = 5L << k;
        r.eta_y = 1.0 / std::sqrt(static_cast<double>(r.n_dofs));
        r.eta_p = 0.1 * r.eta_y;
        r.eta_total = std::hypot(r.eta_y, r.eta_p);
        r.osc_total = 0.01 * r.eta_total;
        r.marked_count = k + 1 < n ? 3 + k : 0;
        if (with_errors) {
            r.err_y = 0.2 * r.eta_y;
            r.err_p = 0.02 * r.eta_y;
            r.err_yp = std::hypot(*r.err_y, *r.err_p);
            r.err_u = 1.0 / static_cast<double>(r.n_dofs);
        }
        out.push_back(r);
    }
    return out;
}

} // namespace

TEST_CASE("Example 1 data")
{
    const ExampleSpec ex = example1();
    const ExactSolution& exact = *ex.prob.exact;
    CHECK(ex.prob.alpha == 0.1);
    CHECK(ex.prob.lower == -0.3);
    CHECK(ex.prob.upper == 1.0);
    CHECK(ex.domain.kind == DomainKind::ThreeQuarterDisk);

    SUBCASE("state and adjoint vanish on the boundary")
    {
        for (int k = 0; k <= 20; ++k) {
            const double theta = 1.5 * pi * k / 20.0;
            CHECK(std::abs(exact.y.value(polar(1.0, theta))) <= 1e-14);
            CHECK(std::abs(exact.p.value(polar(1.0, theta))) <= 1e-14);
            const double r = 0.05 * (k + 0.5);
            CHECK(std::abs(exact.y.value(polar(r, 0.0))) <= 1e-14);
            CHECK(std::abs(exact.y.value({0.0, -r})) <= 1e-14);
            CHECK(std::abs(exact.p.value({0.0, -r})) <= 1e-14);
        }
    }
    SUBCASE("closed-form Laplacian against a five-point stencil")
    {
        const Point x = polar(0.5, pi / 2);
        const double closed = -(ex.prob.f_extra(x) + exact.u(x));
        CHECK(std::abs(laplacian_fd(exact.y.value, x, 1e-4) - closed) <= 1e-6);
    }
    SUBCASE("manufactured optimality system at random points")
    {
        std::mt19937 rng(2026);
        std::uniform_real_distribution<double> r(0.05, 0.95), t(0.05, 1.5 * pi - 0.05);
        for (int k = 0; k < 1000; ++k) {
            const Point x = polar(r(rng), t(rng));
            CHECK(std::abs(exact.u(x) - project_control(exact.p.value(x), ex.prob.alpha, -0.3, 1.0)) <= 1e-8);
            if (k % 10 == 0) {
                // -Laplace p = y - y_d and -Laplace y = f + u.
                CHECK(-laplacian_fd(exact.p.value, x, 1e-4) ==
                      doctest::Approx(exact.y.value(x) - ex.prob.y_d(x)).epsilon(1e-4).scale(1.0));
                CHECK(-laplacian_fd(exact.y.value, x, 1e-4) ==
                      doctest::Approx(ex.prob.f_extra(x) + exact.u(x)).epsilon(1e-4).scale(1.0));
            }
            // Gradient against central differences.
            if (k % 50 == 0) {
                const double h = 1e-6;
                const Point g = exact.y.gradient(x);
                CHECK(g.x == doctest::Approx((exact.y.value({x.x + h, x.y}) - exact.y.value({x.x - h, x.y})) / (2 * h)).epsilon(1e-6));
                CHECK(g.y == doctest::Approx((exact.y.value({x.x, x.y + h}) - exact.y.value({x.x, x.y - h})) / (2 * h)).epsilon(1e-6));
            }
        }
        // The lower bound is active around the bisector of the sector.
        CHECK(exact.u(polar(0.5, 0.75 * pi)) == -0.3);
    }
    SUBCASE("angle convention")
    {
        CHECK(sector_angle({1.0, 0.0}) == doctest::Approx(0.0));
        CHECK(sector_angle({0.0, -1.0}) == doctest::Approx(1.5 * pi));
        CHECK(sector_angle({-1.0, 0.0}) == doctest::Approx(pi));
        CHECK(sector_angle({1.0, -1.0}) == doctest::Approx(-0.25 * pi));
    }
}

TEST_CASE("Example 2 data")
{
    const ExampleSpec ex = example2();
    CHECK(ex.prob.alpha == 1e-3);
    CHECK(ex.prob.lower == -10.0);
    CHECK(ex.prob.upper == 10.0);
    CHECK(ex.prob.y_d({0.5, 0.5}) == 10.0);
    CHECK(ex.prob.y_d({-0.5, 0.5}) == 1.0);
    CHECK(ex.prob.y_d({-0.5, -0.5}) == -10.0);
    CHECK(ex.prob.y_d({0.5, -0.5}) == -1.0);
    CHECK_FALSE(ex.has_exact);
    CHECK(ex.default_theta == 0.5);
}

TEST_CASE("Example 3 data")
{
    const ExampleSpec ex = example3();
    CHECK(ex.prob.alpha == 1e-2);
    CHECK(ex.prob.lower == 0.0);
    CHECK(ex.prob.upper == 8.0);
    for (Point x : {Point{0.3, 0.2}, Point{-0.9, -0.9}, Point{-0.1, 0.7}})
        CHECK(ex.prob.y_d(x) == 2.0);
    CHECK_FALSE(domain_contains(ex.domain, {0.5, -0.5}));
    CHECK(domain_contains(ex.domain, {-0.5, -0.5}));
    CHECK(domain_contains(ex.domain, {0.5, 0.5}));
    CHECK(ex.default_theta == 0.4);
    CHECK_THROWS_AS(make_example("4"), std::invalid_argument);
    CHECK(make_example("smoke").has_exact);
}

TEST_CASE("control error is insensitive to the quadrature")
{
    const ExampleSpec ex = example1();
    Mesh mesh = make_initial_mesh(ex.domain);
    for (int k = 0; k < 3; ++k) {
        std::vector<int> all(mesh.element_count());
        std::iota(all.begin(), all.end(), 0);
        mesh = refine(mesh, all, 2).mesh;
    }
    const P1Space space(mesh);
    const OcpSolution sol = solve_ocp(space, ex.prob);
    const double coarse = l2_norm_error(mesh, sol.control_function(mesh), ex.prob.exact->u, degree5_rule());
    const double fine = l2_norm_error(mesh, sol.control_function(mesh), ex.prob.exact->u, subdivided(degree5_rule(), 3));
    CHECK(coarse == doctest::Approx(fine).epsilon(1e-3));
}

TEST_CASE("CSV")
{
    const auto recs = synthetic_records(2, true);
    std::ostringstream out;
    write_csv(out, recs);
    std::istringstream lines(out.str());
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(lines, line))
        rows.push_back(line);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == kCsvHeader);

    std::istringstream in(out.str());
    const auto back = read_csv(in);
    REQUIRE(back.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(back[k].n_dofs == recs[k].n_dofs);
        CHECK(back[k].eta_total == recs[k].eta_total);
        CHECK(*back[k].err_u == *recs[k].err_u);
        CHECK(back[k].marked_count == recs[k].marked_count);
    }

    std::ostringstream no_exact;
    write_csv(no_exact, synthetic_records(1, false));
    CHECK(no_exact.str().substr(no_exact.str().size() - 5) == ",,,,\n");
    std::istringstream in2(no_exact.str());
    CHECK_FALSE(read_csv(in2)[0].err_yp.has_value());

    std::istringstream bad("iter,foo\n1,2\n");
    CHECK_THROWS_AS(read_csv(bad), std::runtime_error);
}

TEST_CASE("SVG")
{
    const auto recs = synthetic_records(8, true);
    std::ostringstream out;
    write_svg(out, recs, "synthetic");
    const std::string svg = out.str();
    CHECK(svg.find("<svg") != std::string::npos);

    for (const char* id : {"eta_total", "err_yp", "err_u"}) {
        CAPTURE(id);
        const auto pts = polyline_points(svg, id);
        REQUIRE(pts.size() == 8);
        for (std::size_t k = 1; k < pts.size(); ++k) {
            CHECK(pts[k].first > pts[k - 1].first);   // more DOFs to the right
            CHECK(pts[k].second > pts[k - 1].second);  // smaller errors further down
        }
    }

    const auto guide = polyline_points(svg, "slope-guide");
    const auto eta = polyline_points(svg, "eta_total");
    REQUIRE(guide.size() == 2);
    CHECK(guide.back().first == doctest::Approx(eta.back().first).epsilon(1e-6));
    CHECK(guide.back().second == doctest::Approx(eta.back().second).epsilon(1e-6));
    auto series = convergence_series(recs);
    series.push_back(slope_guide(series.front()));
    const LogLogFrame f = make_frame(series);
    const double slope = std::log(f.data_y(guide[1].second) / f.data_y(guide[0].second)) /
                         std::log(f.data_x(guide[1].first) / f.data_x(guide[0].first));
    CHECK(slope == doctest::Approx(-0.5).epsilon(1e-3));
}

TEST_CASE("VTK")
{
    const Mesh m = make_initial_mesh({DomainKind::Square2});
    std::ostringstream out;
    write_vtk(out, m, {{"y_h", std::vector<double>(m.vertex_count(), 1.0)}},
              {{"eta_sq", std::vector<double>(m.element_count(), 2.0)}});
    const std::string vtk = out.str();
    CHECK(vtk.rfind("# vtk DataFile Version 3.0", 0) == 0);
    CHECK(vtk.find("POINTS 9 double") != std::string::npos);
    CHECK(vtk.find("CELLS 8 32") != std::string::npos);
    CHECK(vtk.find("POINT_DATA 9") != std::string::npos);
    CHECK(vtk.find("CELL_DATA 8") != std::string::npos);
    CHECK(vtk.find("SCALARS eta_sq double 1") != std::string::npos);
}

TEST_CASE("command line")
{
    const auto dir = std::filesystem::temp_directory_path() / "afem_cli_test";
    std::filesystem::remove_all(dir);
    std::string text;

    CHECK(cli({}, &text) == 1);
    CHECK(cli({"--example", "1", "--theta", "1.5"}) == 1);
    CHECK(cli({"--example", "1", "--theta", "0"}) == 1);
    CHECK(cli({"--example", "7"}) == 1);
    CHECK(cli({"--example", "1", "--mode", "sideways"}) == 1);
    CHECK(cli({"--help"}) == 0);

    const auto start = std::chrono::steady_clock::now();
    REQUIRE(cli({"--example", "smoke", "--out", dir.string(), "--vtk", "--max-dofs", "3000", "--gamma-scan"}, &text) == 0);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(seconds < 5.0);
    CHECK(std::filesystem::exists(dir / "records.csv"));
    CHECK(std::filesystem::exists(dir / "convergence.svg"));
    CHECK(std::filesystem::exists(dir / "mesh_000.vtk"));
    CHECK(text.find("slope") != std::string::npos);
    CHECK(text.find("gamma scan") != std::string::npos);

    std::ifstream csv(dir / "records.csv");
    const auto recs = read_csv(csv);
    REQUIRE(recs.size() > 3);
    CHECK(recs.back().n_dofs >= 3000);
    CHECK(std::filesystem::exists(dir / ("mesh_" + std::string(recs.size() - 1 < 10 ? "00" : "0") +
                                         std::to_string(recs.size() - 1) + ".vtk")));

    // Solver failure still writes the partial CSV.
    const auto fail_dir = dir / "fail";
    CHECK(cli({"--example", "2", "--out", fail_dir.string(), "--max-outer", "1"}) == 2);
    std::ifstream partial(fail_dir / "records.csv");
    std::string header;
    std::getline(partial, header);
    CHECK(header == kCsvHeader);
    CHECK(cli({"--example", "2", "--damping", "2"}) == 1);

    if (const char* exe = std::getenv("AFEM_CLI")) {
        const std::string cmd = std::string(exe) + " --example smoke --max-dofs 200 --out " + (dir / "bin").string() +
                                " > " + (dir / "bin.log").string() + " 2>&1";
        CHECK(std::system(cmd.c_str()) == 0);
        CHECK(std::system((std::string(exe) + " > /dev/null 2>&1").c_str()) != 0);
    }
    std::filesystem::remove_all(dir);
}
