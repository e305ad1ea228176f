#include "afem/cli.hpp"

#include "afem/adapt.hpp"
#include "afem/examples.hpp"
#include "afem/reports.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace afem {

namespace {

struct CliOptions
{
    std::string example;
    double theta = -1.0;  // < 0: example default
    std::string mode = "adaptive";
    long max_dofs = 30000;
    int max_iters = 100;
    std::string out_dir = "afem_out";
    bool vtk = false;
    bool gamma_scan = false;
    std::uint64_t seed = 1;
    bool no_snap = false;
    double nu1 = 2.5;
    double nu2 = 2.5;
    std::string linear_solver = "cholesky";
    SolverOptions solver;
};

void print_slope(std::ostream& out, const std::vector<AdaptRecord>& records, const char* name,
                 const std::function<double(const AdaptRecord&)>& field, std::size_t window)
{
    std::vector<AdaptRecord> usable;
    for (const auto& r : records)
        if (r.n_dofs > 0 && field(r) > 0.0)
            usable.push_back(r);
    if (usable.size() < 2)
        return;
    const std::size_t n = std::min(window, usable.size());
    out << "slope " << std::left << std::setw(9) << name << " (last " << n << "): " << std::fixed
        << std::setprecision(3) << fit_slope(usable, field, n) << std::defaultfloat << '\n';
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CliOptions o;
    CLI::App app{"Adaptive finite elements for box-constrained elliptic optimal control"};
    app.add_option("--example", o.example, "Problem: 1, 2, 3 or smoke")->required()->check(CLI::IsMember({"1", "2", "3", "smoke"}));
    app.add_option("--theta", o.theta, "Dorfler parameter in (0,1)");
    app.add_option("--mode", o.mode, "adaptive or uniform")->check(CLI::IsMember({"adaptive", "uniform"}));
    app.add_option("--max-dofs", o.max_dofs, "Stop once a mesh reaches this many DOFs");
    app.add_option("--max-iters", o.max_iters, "Maximum number of refinement steps");
    app.add_option("--out", o.out_dir, "Output directory");
    app.add_flag("--vtk", o.vtk, "Write mesh_NNN.vtk for every iteration");
    app.add_flag("--gamma-scan", o.gamma_scan, "Scan quasi-error contraction over gamma (exact solution needed)");
    app.add_option("--seed", o.seed, "Seed for the KKT gradient check directions");
    app.add_flag("--no-snap", o.no_snap, "Example 1: keep refined arc midpoints on the initial polygon");
    app.add_option("--nu1", o.nu1, "Example 1: state exponent");
    app.add_option("--nu2", o.nu2, "Example 1: adjoint exponent");
    app.add_option("--linear-solver", o.linear_solver, "cholesky or cg")->check(CLI::IsMember({"cholesky", "cg"}));
    app.add_option("--tol", o.solver.tol, "Outer solver tolerance (relative to max(1, |u|))");
    app.add_option("--max-outer", o.solver.max_outer, "Outer solver iteration limit");
    app.add_option("--damping", o.solver.damping, "Initial outer step fraction in (0, 1]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    ExampleSpec ex = o.example == "1" ? example1(o.nu1, o.nu2, !o.no_snap) : make_example(o.example);
    const double theta = o.theta < 0.0 ? ex.default_theta : o.theta;
    if (!(theta > 0.0 && theta < 1.0)) {
        err << "error: --theta must lie in (0, 1)\n";
        return 1;
    }
    if (o.max_dofs < 1 || o.max_iters < 0) {
        err << "error: --max-dofs must be >= 1 and --max-iters >= 0\n";
        return 1;
    }
    try {
        o.solver.validate();
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    AdaptConfig config;
    config.theta = theta;
    config.mode = o.mode == "uniform" ? RefinementMode::Uniform : RefinementMode::Adaptive;
    config.stop.max_dofs = o.max_dofs;
    config.stop.max_iters = o.max_iters;
    config.solver = o.solver;
    config.solver.linear_solver = o.linear_solver == "cg" ? LinearSolverKind::Cg : LinearSolverKind::Cholesky;

    const std::filesystem::path dir(o.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        err << "error: cannot create " << dir << ": " << ec.message() << '\n';
        return 1;
    }

    out << "example " << ex.id << ", " << domain_name(ex.domain.kind) << ", theta " << theta << ", "
        << o.mode << ", max dofs " << o.max_dofs << '\n';

    KktDiagnostics kkt;
    double worst_vi = 0.0, worst_grad = 0.0;
    auto observer = [&](const IterationView& view) {
        kkt = check_kkt(view.space, ex.prob, view.solution, o.seed + static_cast<std::uint64_t>(view.iter), 3, 1e-5,
                        config.solver);
        worst_vi = std::min(worst_vi, kkt.variational_min);
        worst_grad = std::max(worst_grad, kkt.gradient_rel_error);
        const auto& r = view.record;
        out << "iter " << std::setw(3) << r.iter << "  elements " << std::setw(7) << r.n_elements << "  dofs "
            << std::setw(7) << r.n_dofs << "  eta " << std::scientific << std::setprecision(4) << r.eta_total;
        if (r.err_yp)
            out << "  err_yp " << *r.err_yp << "  err_u " << *r.err_u;
        out << "  grad-check " << kkt.gradient_rel_error << std::defaultfloat << "  outer " << r.outer_iterations
            << '\n';
        if (o.vtk) {
            char name[32];
            std::snprintf(name, sizeof name, "mesh_%03d.vtk", view.iter);
            FieldMap cells{{"eta_sq", view.indicators.eta_sq},
                           {"eta_y_sq", view.indicators.eta_y_sq},
                           {"eta_p_sq", view.indicators.eta_p_sq}};
            std::vector<double> marked(view.mesh.element_count(), 0.0);
            for (int t : view.marked)
                marked[static_cast<std::size_t>(t)] = 1.0;
            cells.emplace("marked", std::move(marked));
            write_vtk(dir / name, view.mesh, {{"y_h", view.solution.y}, {"p_h", view.solution.p}}, cells);
        }
    };

    const auto start = std::chrono::steady_clock::now();
    std::vector<AdaptRecord> records;
    int code = 0;
    try {
        records = run_adaptive(ex.prob, make_initial_mesh(ex.domain), config, observer).records;
    } catch (const AdaptError& e) {
        err << "solver failure: " << e.what() << '\n';
        records = e.partial_records();
        code = 2;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    write_csv(dir / "records.csv", records);
    write_svg(dir / "convergence.svg", records, "Example " + ex.id + " (" + o.mode + ")");
    if (code != 0)
        return code;

    const std::size_t window = 6;
    print_slope(out, records, "eta_total", [](const AdaptRecord& r) { return r.eta_total; }, window);
    if (ex.has_exact) {
        print_slope(out, records, "err_yp", [](const AdaptRecord& r) { return *r.err_yp; }, window);
        print_slope(out, records, "err_u", [](const AdaptRecord& r) { return *r.err_u; }, window);
    }
    if (config.mode == RefinementMode::Adaptive)
        out << "cardinality constant: " << cardinality_constant(records) << '\n';
    out << "kkt: min variational residual " << worst_vi << ", max gradient check error " << worst_grad << '\n';

    if (o.gamma_scan) {
        if (!ex.has_exact) {
            out << "gamma scan skipped: example has no exact solution\n";
        } else {
            const auto gammas = log_spaced(1e-3, 10.0, 13);
            const auto scan = scan_contraction(records, gammas, 2);
            out << "gamma scan (steps after the second): best gamma " << scan.best_gamma << ", "
                << scan.best_below_one << " ratios < 1, max ratio " << scan.best_max_ratio
                << (scan.all_contract ? " (contracts at every step)" : "") << '\n';
        }
    }
    out << "wrote " << (dir / "records.csv").string() << " and " << (dir / "convergence.svg").string() << " in "
        << std::fixed << std::setprecision(2) << seconds << " s\n"
        << std::defaultfloat;
    return 0;
}

} // namespace afem
