#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "motorsig/error.hpp"
#include "motorsig/numio.hpp"
#include "motorsig/similarity.hpp"
#include "motorsig/trajectory.hpp"

// Report emitters: CSV tables are the authoritative outputs (full 17-digit
// precision); SVGs are static displays of the same data. Everything here is
// deterministic so identical inputs produce byte-identical files.

namespace motorsig::report {

namespace fs = std::filesystem;

inline void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw io_error("write failed: " + path.string());
}

// Collects every file a command writes; dumped as manifest.json next to them.
class OutputManifest {
public:
    explicit OutputManifest(fs::path root) : root_(std::move(root)) {}

    void write(const fs::path& relative, const std::string& content) {
        write_file(root_ / relative, content);
        files_.push_back(relative.generic_string());
    }

    void finish() {
        std::sort(files_.begin(), files_.end());
        nlohmann::json j;
        j["files"] = files_;
        write_file(root_ / "manifest.json", j.dump(2) + "\n");
    }

    const fs::path& root() const { return root_; }

private:
    fs::path root_;
    std::vector<std::string> files_;
};

// One embedded trial: identity plus its 2-D coordinates in a plane.
struct PlaneRow {
    std::string person_label;
    Source source = Source::human;
    int trial_index = 0;
    double x = 0.0, y = 0.0;
};

inline std::string plane_csv(const std::vector<PlaneRow>& rows) {
    std::string out = "person,source,trial,x,y\n";
    for (const auto& r : rows) {
        out += r.person_label;
        out += ',';
        out += to_string(r.source);
        out += ',';
        out += std::to_string(r.trial_index);
        out += ',';
        out += format_g17(r.x);
        out += ',';
        out += format_g17(r.y);
        out += '\n';
    }
    return out;
}

struct EllipseRow {
    std::string person_label;
    Source source = Source::human;
    int n_points = 0;
    similarity::CovarianceEllipse ellipse;
};

inline std::string ellipse_csv(const std::vector<EllipseRow>& rows) {
    std::string out =
        "person,source,n_points,center_x,center_y,semi_major,semi_minor,orientation_rad,"
        "radius_r,degenerate\n";
    for (const auto& r : rows) {
        out += r.person_label;
        out += ',';
        out += to_string(r.source);
        out += ',';
        out += std::to_string(r.n_points);
        out += ',';
        out += format_g17(r.ellipse.center[0]);
        out += ',';
        out += format_g17(r.ellipse.center[1]);
        out += ',';
        out += format_g17(r.ellipse.semi_axes[0]);
        out += ',';
        out += format_g17(r.ellipse.semi_axes[1]);
        out += ',';
        out += format_g17(r.ellipse.orientation);
        out += ',';
        out += format_g17(r.ellipse.radius_r);
        out += ',';
        out += (r.ellipse.degenerate ? "1" : "0");
        out += '\n';
    }
    return out;
}

// persons x targets matrix, e.g. overlap of each person against each model.
inline std::string heatmap_csv(const std::vector<std::string>& row_labels,
                               const std::vector<std::string>& col_labels,
                               const std::vector<std::vector<double>>& values) {
    std::string out = "person";
    for (const auto& c : col_labels) {
        out += ',';
        out += c;
    }
    out += '\n';
    for (std::size_t i = 0; i < row_labels.size(); ++i) {
        out += row_labels[i];
        for (std::size_t j = 0; j < col_labels.size(); ++j) {
            out += ',';
            out += format_g17(values[i][j]);
        }
        out += '\n';
    }
    return out;
}

struct DiagonalRow {
    std::string person_label;
    double delta_model = 0.0, delta_oscillator = 0.0;
    double overlap_model = 0.0, overlap_oscillator = 0.0;
};

inline std::string diagonal_csv(const std::vector<DiagonalRow>& rows) {
    std::string out = "person,delta_model,delta_oscillator,overlap_model,overlap_oscillator\n";
    for (const auto& r : rows) {
        out += r.person_label;
        out += ',';
        out += format_g17(r.delta_model);
        out += ',';
        out += format_g17(r.delta_oscillator);
        out += ',';
        out += format_g17(r.overlap_model);
        out += ',';
        out += format_g17(r.overlap_oscillator);
        out += '\n';
    }
    return out;
}

// Long-format profile overlay: one row per (person, bin).
struct ProfileOverlay {
    std::string person_label;
    similarity::VelocityProfile human, generated, oscillator;
};

inline std::string overlay_csv(const std::vector<ProfileOverlay>& overlays) {
    std::string out = "person,bin_center_cm_s,human,generated,oscillator\n";
    for (const auto& o : overlays) {
        for (int b = 0; b < similarity::kProfileBins; ++b) {
            out += o.person_label;
            out += ',';
            out += format_g17(similarity::VelocityProfile::bin_center(b));
            out += ',';
            out += format_g17(o.human.mass[static_cast<std::size_t>(b)]);
            out += ',';
            out += format_g17(o.generated.mass[static_cast<std::size_t>(b)]);
            out += ',';
            out += format_g17(o.oscillator.mass[static_cast<std::size_t>(b)]);
            out += '\n';
        }
    }
    return out;
}

// --------------------------------------------------------------------------
// Minimal SVG scatter plot with optional covariance ellipses. Colors cycle a
// fixed palette in series order, so output depends only on the input data.

struct SvgSeries {
    std::string name;
    std::vector<std::array<double, 2>> points;
    std::optional<similarity::CovarianceEllipse> ellipse;
    int marker = 0;  // 0 circle, 1 square, 2 triangle
};

namespace detail {

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                   "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};
    return colors[i % 10];
}

struct Mapper {
    double xmin, xmax, ymin, ymax;
    double px0, px1, py0, py1;  // pixel box; py0 is the TOP edge

    double x(double v) const { return px0 + (v - xmin) / (xmax - xmin) * (px1 - px0); }
    double y(double v) const { return py1 - (v - ymin) / (ymax - ymin) * (py1 - py0); }
};

inline void ellipse_path(std::string& svg, const similarity::CovarianceEllipse& e,
                         const Mapper& m, const char* color) {
    // Boundary sampled in data space so unequal axis scales stay correct.
    svg += "<path d=\"";
    const int segments = 128;
    for (int k = 0; k <= segments; ++k) {
        const double t = 2.0 * M_PI * k / segments;
        const double u = e.semi_axes[0] * std::cos(t);
        const double v = e.semi_axes[1] * std::sin(t);
        const double x = e.center[0] + u * std::cos(e.orientation) - v * std::sin(e.orientation);
        const double y = e.center[1] + u * std::sin(e.orientation) + v * std::cos(e.orientation);
        svg += (k == 0 ? "M" : "L");
        svg += format_g6(m.x(x));
        svg += ' ';
        svg += format_g6(m.y(y));
    }
    svg += "Z\" fill=\"";
    svg += color;
    svg += "\" fill-opacity=\"0.12\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"1.2\"/>\n";
}

inline void marker(std::string& svg, double cx, double cy, int kind, const char* color) {
    if (kind == 1) {
        svg += "<rect x=\"" + format_g6(cx - 3.0) + "\" y=\"" + format_g6(cy - 3.0) +
               "\" width=\"6\" height=\"6\" fill=\"" + color + "\"/>\n";
    } else if (kind == 2) {
        svg += "<path d=\"M" + format_g6(cx) + " " + format_g6(cy - 3.6) + "L" +
               format_g6(cx - 3.2) + " " + format_g6(cy + 2.6) + "L" + format_g6(cx + 3.2) + " " +
               format_g6(cy + 2.6) + "Z\" fill=\"" + color + "\"/>\n";
    } else {
        svg += "<circle cx=\"" + format_g6(cx) + "\" cy=\"" + format_g6(cy) +
               "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
}

}  // namespace detail

inline std::string scatter_svg(const std::string& title, const std::string& xlabel,
                               const std::string& ylabel, const std::vector<SvgSeries>& series) {
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    bool any = false;
    auto grow = [&](double x, double y) {
        if (!any) {
            xmin = xmax = x;
            ymin = ymax = y;
            any = true;
        } else {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    };
    for (const auto& s : series) {
        for (const auto& p : s.points) grow(p[0], p[1]);
        if (s.ellipse) {
            const auto& e = *s.ellipse;
            const double reach = std::max(e.semi_axes[0], e.semi_axes[1]);
            grow(e.center[0] - reach, e.center[1] - reach);
            grow(e.center[0] + reach, e.center[1] + reach);
        }
    }
    if (!any) grow(0.0, 0.0);
    // Pad the data box so markers never sit on the frame.
    const double xpad = (xmax - xmin) > 0 ? 0.06 * (xmax - xmin) : 1.0;
    const double ypad = (ymax - ymin) > 0 ? 0.06 * (ymax - ymin) : 1.0;

    detail::Mapper m{xmin - xpad, xmax + xpad, ymin - ypad, ymax + ypad, 70.0, 640.0, 40.0, 430.0};

    std::string svg =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"820\" height=\"480\" "
        "viewBox=\"0 0 820 480\">\n<rect width=\"820\" height=\"480\" fill=\"white\"/>\n";
    svg += "<text x=\"355\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">" + title + "</text>\n";
    svg += "<rect x=\"70\" y=\"40\" width=\"570\" height=\"390\" fill=\"none\" "
           "stroke=\"#333\" stroke-width=\"1\"/>\n";

    // Corner tick labels give the data range without a full axis framework.
    svg += "<text x=\"70\" y=\"446\" font-family=\"sans-serif\" font-size=\"11\">" +
           format_g6(m.xmin) + "</text>\n";
    svg += "<text x=\"640\" y=\"446\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + format_g6(m.xmax) + "</text>\n";
    svg += "<text x=\"64\" y=\"430\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + format_g6(m.ymin) + "</text>\n";
    svg += "<text x=\"64\" y=\"50\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + format_g6(m.ymax) + "</text>\n";
    svg += "<text x=\"355\" y=\"468\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">" + xlabel + "</text>\n";
    svg += "<text x=\"18\" y=\"235\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\" transform=\"rotate(-90 18 235)\">" + ylabel + "</text>\n";

    double legend_y = 56.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = detail::palette(i);
        if (series[i].ellipse) detail::ellipse_path(svg, *series[i].ellipse, m, color);
        for (const auto& p : series[i].points)
            detail::marker(svg, m.x(p[0]), m.y(p[1]), series[i].marker, color);
        detail::marker(svg, 660.0, legend_y - 4.0, series[i].marker, color);
        svg += "<text x=\"670\" y=\"" + format_g6(legend_y) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + series[i].name + "</text>\n";
        legend_y += 18.0;
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace motorsig::report
