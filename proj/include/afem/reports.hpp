#pragma once

#include "afem/adapt.hpp"
#include "afem/mesh.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace afem {

inline constexpr const char* kCsvHeader =
    "iter,n_elements,n_dofs,eta_y,eta_p,eta_total,osc_total,marked,err_y,err_p,err_yp,err_u";

/// One row per record, 17 significant digits, empty error fields without an exact solution.
void write_csv(std::ostream& out, std::span<const AdaptRecord> records);
void write_csv(const std::filesystem::path& path, std::span<const AdaptRecord> records);
/// Parses the columns written by write_csv. Throws std::runtime_error on malformed input.
std::vector<AdaptRecord> read_csv(std::istream& in);

/// Log-log plotting frame on an 800x600 canvas.
struct LogLogFrame
{
    double width = 800.0;
    double height = 600.0;
    double left = 80.0, right = 180.0, top = 30.0, bottom = 60.0;
    double log_x_min = 0.0, log_x_max = 1.0;
    double log_y_min = 0.0, log_y_max = 1.0;

    double px(double x) const;
    double py(double y) const;
    double data_x(double px) const;
    double data_y(double py) const;
};

struct PlotSeries
{
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Series plotted for a record list: estimators always, errors when present.
std::vector<PlotSeries> convergence_series(std::span<const AdaptRecord> records);

/// Reference line of slope -1/2 through the last point of `anchor`, spanning its x range.
PlotSeries slope_guide(const PlotSeries& anchor, double slope = -0.5);

LogLogFrame make_frame(std::span<const PlotSeries> series);

/// SVG 1.1 with one polyline per series (id = series name), a dashed slope guide
/// (id "slope-guide") and a legend.
void write_svg(std::ostream& out, std::span<const AdaptRecord> records, const std::string& title);
void write_svg(const std::filesystem::path& path, std::span<const AdaptRecord> records, const std::string& title);

using FieldMap = std::map<std::string, std::vector<double>>;

/// VTK legacy ASCII 3.0 unstructured grid of triangles with point and cell scalars.
void write_vtk(std::ostream& out, const Mesh& mesh, const FieldMap& point_data = {}, const FieldMap& cell_data = {});
void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const FieldMap& point_data = {},
               const FieldMap& cell_data = {});

} // namespace afem
