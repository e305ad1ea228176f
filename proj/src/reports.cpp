#include "afem/reports.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace afem {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << std::setprecision(17);
    return out;
}

void put_optional(std::ostream& out, const std::optional<double>& v)
{
    out << ',';
    if (v)
        out << *v;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ','))
        cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

double parse_double(const std::string& s)
{
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size())
        throw std::runtime_error("csv: bad number '" + s + "'");
    return v;
}

std::optional<double> parse_optional(const std::string& s)
{
    if (s.empty())
        return std::nullopt;
    return parse_double(s);
}

} // namespace

void write_csv(std::ostream& out, std::span<const AdaptRecord> records)
{
    const auto old_precision = out.precision(17);
    out << kCsvHeader << '\n';
    for (const auto& r : records) {
        out << r.iter << ',' << r.n_elements << ',' << r.n_dofs << ',' << r.eta_y << ',' << r.eta_p << ','
            << r.eta_total << ',' << r.osc_total << ',' << r.marked_count;
        put_optional(out, r.err_y);
        put_optional(out, r.err_p);
        put_optional(out, r.err_yp);
        put_optional(out, r.err_u);
        out << '\n';
    }
    out.precision(old_precision);
}

void write_csv(const std::filesystem::path& path, std::span<const AdaptRecord> records)
{
    auto out = open_for_write(path);
    write_csv(out, records);
}

std::vector<AdaptRecord> read_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw std::runtime_error("csv: missing or unexpected header");
    std::vector<AdaptRecord> records;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto c = split_csv_line(line);
        if (c.size() != 12)
            throw std::runtime_error("csv: expected 12 fields, got " + std::to_string(c.size()));
        try {
            AdaptRecord r;
            r.iter = std::stoi(c[0]);
            r.n_elements = std::stol(c[1]);
            r.n_dofs = std::stol(c[2]);
            r.eta_y = parse_double(c[3]);
            r.eta_p = parse_double(c[4]);
            r.eta_total = parse_double(c[5]);
            r.osc_total = parse_double(c[6]);
            r.marked_count = std::stol(c[7]);
            r.err_y = parse_optional(c[8]);
            r.err_p = parse_optional(c[9]);
            r.err_yp = parse_optional(c[10]);
            r.err_u = parse_optional(c[11]);
            records.push_back(r);
        } catch (const std::logic_error& e) {
            throw std::runtime_error(std::string("csv: ") + e.what());
        }
    }
    return records;
}

// --- SVG --------------------------------------------------------------------

double LogLogFrame::px(double x) const
{
    return left + (std::log10(x) - log_x_min) / (log_x_max - log_x_min) * (width - left - right);
}

double LogLogFrame::py(double y) const
{
    return height - bottom - (std::log10(y) - log_y_min) / (log_y_max - log_y_min) * (height - top - bottom);
}

double LogLogFrame::data_x(double p) const
{
    return std::pow(10.0, log_x_min + (p - left) / (width - left - right) * (log_x_max - log_x_min));
}

double LogLogFrame::data_y(double p) const
{
    return std::pow(10.0, log_y_min + (height - bottom - p) / (height - top - bottom) * (log_y_max - log_y_min));
}

std::vector<PlotSeries> convergence_series(std::span<const AdaptRecord> records)
{
    std::vector<PlotSeries> out;
    auto add = [&](const std::string& name, auto get) {
        PlotSeries s{name, {}, {}};
        for (const auto& r : records) {
            const std::optional<double> v = get(r);
            if (v && *v > 0.0 && r.n_dofs > 0) {
                s.x.push_back(static_cast<double>(r.n_dofs));
                s.y.push_back(*v);
            }
        }
        if (!s.x.empty())
            out.push_back(std::move(s));
    };
    add("eta_total", [](const AdaptRecord& r) { return std::optional<double>(r.eta_total); });
    add("eta_y", [](const AdaptRecord& r) { return std::optional<double>(r.eta_y); });
    add("eta_p", [](const AdaptRecord& r) { return std::optional<double>(r.eta_p); });
    add("err_yp", [](const AdaptRecord& r) { return r.err_yp; });
    add("err_u", [](const AdaptRecord& r) { return r.err_u; });
    return out;
}

PlotSeries slope_guide(const PlotSeries& anchor, double slope)
{
    PlotSeries g{"slope-guide", {}, {}};
    if (anchor.x.empty())
        return g;
    const double x1 = anchor.x.back(), y1 = anchor.y.back();
    const double x0 = anchor.x.front();
    g.x = {x0, x1};
    g.y = {y1 * std::pow(x0 / x1, slope), y1};
    return g;
}

LogLogFrame make_frame(std::span<const PlotSeries> series)
{
    double xmin = std::numeric_limits<double>::max(), xmax = std::numeric_limits<double>::lowest();
    double ymin = xmin, ymax = xmax;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, std::log10(s.x[i]));
            xmax = std::max(xmax, std::log10(s.x[i]));
            ymin = std::min(ymin, std::log10(s.y[i]));
            ymax = std::max(ymax, std::log10(s.y[i]));
        }
    LogLogFrame f;
    if (xmin > xmax) {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    f.log_x_min = std::floor(xmin);
    f.log_x_max = std::max(std::ceil(xmax), f.log_x_min + 1.0);
    f.log_y_min = std::floor(ymin);
    f.log_y_max = std::max(std::ceil(ymax), f.log_y_min + 1.0);
    return f;
}

void write_svg(std::ostream& out, std::span<const AdaptRecord> records, const std::string& title)
{
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};
    auto series = convergence_series(records);
    std::vector<PlotSeries> all = series;
    if (!series.empty())
        all.push_back(slope_guide(series.front()));
    const LogLogFrame f = make_frame(all);
    const double plot_right = f.width - f.right;
    const double plot_bottom = f.height - f.bottom;

    out << std::fixed << std::setprecision(3);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << f.width << "\" height=\""
        << f.height << "\" viewBox=\"0 0 " << f.width << ' ' << f.height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << f.left << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n"
        << "<rect x=\"" << f.left << "\" y=\"" << f.top << "\" width=\"" << plot_right - f.left << "\" height=\""
        << plot_bottom - f.top << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double e = f.log_x_min; e <= f.log_x_max + 1e-9; e += 1.0) {
        const double x = f.px(std::pow(10.0, e));
        out << "<line x1=\"" << x << "\" y1=\"" << f.top << "\" x2=\"" << x << "\" y2=\"" << plot_bottom
            << "\" stroke=\"#dddddd\"/>\n"
            << "<text x=\"" << x << "\" y=\"" << plot_bottom + 18 << "\" font-family=\"sans-serif\" font-size=\"12\" "
            << "text-anchor=\"middle\">1e" << static_cast<int>(e) << "</text>\n";
    }
    for (double e = f.log_y_min; e <= f.log_y_max + 1e-9; e += 1.0) {
        const double y = f.py(std::pow(10.0, e));
        out << "<line x1=\"" << f.left << "\" y1=\"" << y << "\" x2=\"" << plot_right << "\" y2=\"" << y
            << "\" stroke=\"#dddddd\"/>\n"
            << "<text x=\"" << f.left - 6 << "\" y=\"" << y + 4 << "\" font-family=\"sans-serif\" font-size=\"12\" "
            << "text-anchor=\"end\">1e" << static_cast<int>(e) << "</text>\n";
    }
    out << "<text x=\"" << 0.5 * (f.left + plot_right) << "\" y=\"" << f.height - 15
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">degrees of freedom</text>\n";

    auto polyline = [&](const PlotSeries& s, const char* color, const char* extra) {
        out << "<polyline id=\"" << s.name << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << extra
            << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << (i ? " " : "") << f.px(s.x[i]) << ',' << f.py(s.y[i]);
        out << "\"/>\n";
    };
    for (std::size_t k = 0; k < series.size(); ++k)
        polyline(series[k], colors[k % 5], "");
    if (!series.empty())
        polyline(all.back(), "black", " stroke-dasharray=\"6,4\"");

    double ly = f.top + 10;
    for (std::size_t k = 0; k <= series.size() && !series.empty(); ++k) {
        const bool guide = k == series.size();
        const std::string name = guide ? "slope -1/2" : series[k].name;
        const char* color = guide ? "black" : colors[k % 5];
        out << "<line x1=\"" << plot_right + 15 << "\" y1=\"" << ly << "\" x2=\"" << plot_right + 45 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << (guide ? " stroke-dasharray=\"6,4\"" : "")
            << "/>\n<text x=\"" << plot_right + 52 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << name << "</text>\n";
        ly += 20;
    }
    out << "</svg>\n";
}

void write_svg(const std::filesystem::path& path, std::span<const AdaptRecord> records, const std::string& title)
{
    auto out = open_for_write(path);
    write_svg(out, records, title);
}

// --- VTK --------------------------------------------------------------------

void write_vtk(std::ostream& out, const Mesh& mesh, const FieldMap& point_data, const FieldMap& cell_data)
{
    const auto old_precision = out.precision(17);
    const std::size_t nv = mesh.vertex_count(), ne = mesh.element_count();
    out << "# vtk DataFile Version 3.0\nafem-ocp mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << nv << " double\n";
    for (const auto& v : mesh.vertices())
        out << v.x << ' ' << v.y << " 0\n";
    out << "CELLS " << ne << ' ' << 4 * ne << '\n';
    for (const auto& el : mesh.elements())
        out << "3 " << el.v[0] << ' ' << el.v[1] << ' ' << el.v[2] << '\n';
    out << "CELL_TYPES " << ne << '\n';
    for (std::size_t t = 0; t < ne; ++t)
        out << "5\n";

    auto write_fields = [&](const char* section, std::size_t n, const FieldMap& fields) {
        if (fields.empty())
            return;
        out << section << ' ' << n << '\n';
        for (const auto& [name, values] : fields) {
            if (values.size() != n)
                throw std::invalid_argument("vtk: field '" + name + "' has the wrong length");
            out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (double v : values)
                out << v << '\n';
        }
    };
    write_fields("POINT_DATA", nv, point_data);
    write_fields("CELL_DATA", ne, cell_data);
    out.precision(old_precision);
}

void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const FieldMap& point_data,
               const FieldMap& cell_data)
{
    auto out = open_for_write(path);
    write_vtk(out, mesh, point_data, cell_data);
}

} // namespace afem
