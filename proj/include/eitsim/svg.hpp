#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "eitsim/csv.hpp"
#include "eitsim/errors.hpp"

// Deterministic SVG renders: line plots and heatmaps with fixed viewbox and
// unit-labelled axes. No interactivity, no external assets.

namespace eitsim::svg {

constexpr int kWidth = 800;
constexpr int kHeight = 560;
constexpr int kMargin = 70;

struct PlotSpec {
    std::string x_column;
    std::string y_column;          // line plots
    std::string value_column;      // heatmaps (z)
    std::string y_axis_column;     // heatmaps (second axis)
    std::string title;
};

namespace detail {

inline size_t column_index(const csv::Table& t, const std::string& name) {
    auto it = std::find(t.columns.begin(), t.columns.end(), name);
    if (it == t.columns.end()) {
        throw ConfigError("csv missing column '" + name + "'");
    }
    return size_t(std::distance(t.columns.begin(), it));
}

inline std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

inline void axes(std::ostringstream& out, double x0, double x1, double y0,
                 double y1, const std::string& xlabel,
                 const std::string& ylabel, const std::string& title) {
    const int w = kWidth, h = kHeight, m = kMargin;
    out << "<rect x='" << m << "' y='" << m << "' width='" << w - 2 * m
        << "' height='" << h - 2 * m
        << "' fill='none' stroke='black' stroke-width='1'/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = m + (w - 2.0 * m) * i / 4.0;
        const double fy = h - m + 18;
        out << "<text x='" << fx << "' y='" << fy
            << "' font-size='12' text-anchor='middle'>"
            << fmt(x0 + (x1 - x0) * i / 4.0) << "</text>\n";
        const double gy = h - m - (h - 2.0 * m) * i / 4.0;
        out << "<text x='" << m - 6 << "' y='" << gy + 4
            << "' font-size='12' text-anchor='end'>"
            << fmt(y0 + (y1 - y0) * i / 4.0) << "</text>\n";
    }
    out << "<text x='" << w / 2 << "' y='" << h - 14
        << "' font-size='14' text-anchor='middle'>" << xlabel << "</text>\n";
    out << "<text x='18' y='" << h / 2
        << "' font-size='14' text-anchor='middle' transform='rotate(-90 18 "
        << h / 2 << ")'>" << ylabel << "</text>\n";
    out << "<text x='" << w / 2
        << "' y='30' font-size='16' text-anchor='middle'>" << title
        << "</text>\n";
}

} // namespace detail

inline void write_line_plot(const std::string& csv_path,
                            const PlotSpec& spec,
                            const std::string& svg_path) {
    const csv::Table t = csv::read(csv_path);
    if (t.rows.empty()) throw ConfigError("empty csv: " + csv_path);
    const size_t cx = detail::column_index(t, spec.x_column);
    const size_t cy = detail::column_index(t, spec.y_column);
    double x0 = t.rows[0][cx], x1 = x0, y0 = t.rows[0][cy], y1 = y0;
    for (const auto& r : t.rows) {
        x0 = std::min(x0, r[cx]); x1 = std::max(x1, r[cx]);
        y0 = std::min(y0, r[cy]); y1 = std::max(y1, r[cy]);
    }
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' viewBox='0 0 " << kWidth
        << " " << kHeight << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    detail::axes(out, x0, x1, y0, y1, spec.x_column, spec.y_column, spec.title);
    out << "<polyline fill='none' stroke='#1f5fa8' stroke-width='1.5' points='";
    for (const auto& r : t.rows) {
        const double px =
            kMargin + (kWidth - 2.0 * kMargin) * (r[cx] - x0) / (x1 - x0);
        const double py = kHeight - kMargin -
                          (kHeight - 2.0 * kMargin) * (r[cy] - y0) / (y1 - y0);
        out << detail::fmt(px) << "," << detail::fmt(py) << " ";
    }
    out << "'/>\n</svg>\n";
    std::ofstream f(svg_path);
    if (!f) throw ConfigError("cannot open for writing: " + svg_path);
    f << out.str();
}

inline void write_heatmap(const std::string& csv_path, const PlotSpec& spec,
                          const std::string& svg_path) {
    const csv::Table t = csv::read(csv_path);
    if (t.rows.empty()) throw ConfigError("empty csv: " + csv_path);
    const size_t cx = detail::column_index(t, spec.x_column);
    const size_t cy = detail::column_index(t, spec.y_axis_column);
    const size_t cv = detail::column_index(t, spec.value_column);
    std::vector<double> xs, ys;
    for (const auto& r : t.rows) {
        xs.push_back(r[cx]);
        ys.push_back(r[cy]);
    }
    auto uniq = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    const std::vector<double> ux = uniq(xs), uy = uniq(ys);
    if (ux.size() < 2 || uy.size() < 2) {
        throw ConfigError("heatmap needs a 2D grid in " + csv_path);
    }
    double v0 = t.rows[0][cv], v1 = v0;
    for (const auto& r : t.rows) {
        v0 = std::min(v0, r[cv]);
        v1 = std::max(v1, r[cv]);
    }
    if (v1 == v0) v1 = v0 + 1;
    const double cell_w = (kWidth - 2.0 * kMargin) / double(ux.size());
    const double cell_h = (kHeight - 2.0 * kMargin) / double(uy.size());
    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' viewBox='0 0 " << kWidth
        << " " << kHeight << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    detail::axes(out, ux.front(), ux.back(), uy.front(), uy.back(),
                 spec.x_column, spec.y_axis_column, spec.title);
    auto idx_of = [](const std::vector<double>& u, double v) {
        return size_t(std::distance(
            u.begin(), std::lower_bound(u.begin(), u.end(), v)));
    };
    for (const auto& r : t.rows) {
        const size_t ix = idx_of(ux, r[cx]);
        const size_t iy = idx_of(uy, r[cy]);
        const double f = (r[cv] - v0) / (v1 - v0);
        const int red = int(255 * f);
        const int blue = int(255 * (1.0 - f));
        out << "<rect x='" << detail::fmt(kMargin + ix * cell_w) << "' y='"
            << detail::fmt(kHeight - kMargin - (iy + 1) * cell_h) << "' width='"
            << detail::fmt(cell_w + 0.5) << "' height='"
            << detail::fmt(cell_h + 0.5) << "' fill='rgb(" << red << ",0,"
            << blue << ")'/>\n";
    }
    out << "</svg>\n";
    std::ofstream f(svg_path);
    if (!f) throw ConfigError("cannot open for writing: " + svg_path);
    f << out.str();
}

} // namespace eitsim::svg
