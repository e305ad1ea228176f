#pragma once

#include "afem/estimate.hpp"
#include "afem/mesh.hpp"
#include "afem/ocp.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace afem {

enum class RefinementMode { Adaptive, Uniform };

struct StopRule
{
    int max_iters = std::numeric_limits<int>::max();  // refinement steps
    long max_dofs = 30000;                            // stop once a solved mesh reaches this
    double eta_tol = 0.0;

    /// Throws std::invalid_argument unless at least one bound is finite.
    void validate() const;
};

struct AdaptRecord
{
    int iter = 0;
    long n_elements = 0;
    long n_dofs = 0;
    double eta_y = 0.0;
    double eta_p = 0.0;
    double eta_total = 0.0;
    double osc_total = 0.0;
    long marked_count = 0;
    long refined_count = 0;
    std::optional<double> err_y;
    std::optional<double> err_p;
    std::optional<double> err_yp;
    std::optional<double> err_u;
    int outer_iterations = 0;
    double kkt_residual = 0.0;

    /// ||(y - y_h, p - p_h)||_a^2 + gamma * eta^2. Requires exact errors.
    double quasi_error(double gamma) const;
};

struct AdaptConfig
{
    double theta = 0.4;
    RefinementMode mode = RefinementMode::Adaptive;
    StopRule stop;
    SolverOptions solver;
    bool warm_start = true;
};

/// Everything known at the end of ESTIMATE/MARK of one iteration. `marked` is empty on the
/// final iteration, which is not refined.
struct IterationView
{
    int iter;
    const Mesh& mesh;
    const P1Space& space;
    const OcpSolution& solution;
    const Indicators& indicators;
    const std::vector<int>& marked;
    const AdaptRecord& record;
};

using IterationObserver = std::function<void(const IterationView&)>;

struct AdaptResult
{
    std::vector<AdaptRecord> records;
    Mesh final_mesh;
    OcpSolution final_solution;
};

class AdaptError : public std::runtime_error
{
public:
    AdaptError(const std::string& what, std::vector<AdaptRecord> partial)
        : std::runtime_error(what)
        , partial_(std::move(partial))
    {}
    const std::vector<AdaptRecord>& partial_records() const { return partial_; }

private:
    std::vector<AdaptRecord> partial_;
};

/// SOLVE -> ESTIMATE -> MARK -> REFINE. Adaptive mode marks by Dorfler with one bisection
/// per marked element; uniform mode marks every element and bisects it twice.
AdaptResult run_adaptive(const OcpProblem& prob, const Mesh& initial, const AdaptConfig& config,
                         const IterationObserver& observer = {});

/// Least-squares slope of log(y) against log(x). Throws on non-positive data or < 2 points.
double fit_slope(std::span<const double> x, std::span<const double> y);

/// Slope of a record field against n_dofs over the last `window` records (0 = all).
double fit_slope(std::span<const AdaptRecord> records, const std::function<double(const AdaptRecord&)>& field,
                 std::size_t window = 0);

struct ContractionScan
{
    std::vector<double> gammas;
    std::vector<std::vector<double>> ratios;  // per gamma, Q_{k+1}/Q_k for k >= first_step
    std::vector<int> below_one;
    std::vector<double> max_ratio;
    double best_gamma = 0.0;
    int best_below_one = 0;
    double best_max_ratio = 0.0;
    bool all_contract = false;  // some gamma has every ratio < 1
};

/// Scans quasi-error contraction over gamma; best = most ratios below one, then smallest
/// maximum ratio. Ratios start at step `first_step` (k -> k+1).
ContractionScan scan_contraction(std::span<const AdaptRecord> records, std::span<const double> gammas,
                                 std::size_t first_step = 0);

std::vector<double> log_spaced(double lo, double hi, int count);

/// Cardinality constant (#T_n - #T_0) / sum of marked counts.
double cardinality_constant(std::span<const AdaptRecord> records);

} // namespace afem
