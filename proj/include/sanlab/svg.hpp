#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sanlab/tensor.hpp"

namespace sanlab::svg {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

/// Minimal SVG document builder; output is self-contained markup with no
/// external renderer or font dependencies beyond generic sans-serif.
class Document {
public:
    Document(double width, double height) : width_(width), height_(height) {
        body_ << "<rect x=\"0\" y=\"0\" width=\"" << fmt(width_)
              << "\" height=\"" << fmt(height_) << "\" fill=\"white\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2,
              const std::string& stroke, double stroke_width = 1.0) {
        body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1)
              << "\" x2=\"" << fmt(x2) << "\" y2=\"" << fmt(y2)
              << "\" stroke=\"" << stroke << "\" stroke-width=\""
              << fmt(stroke_width) << "\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& points,
                  const std::string& stroke, double stroke_width = 1.0,
                  double opacity = 1.0) {
        if (points.empty()) return;
        body_ << "<polyline fill=\"none\" stroke=\"" << stroke
              << "\" stroke-width=\"" << fmt(stroke_width)
              << "\" stroke-opacity=\"" << fmt(opacity) << "\" points=\"";
        for (const auto& [x, y] : points)
            body_ << fmt(x) << "," << fmt(y) << " ";
        body_ << "\"/>\n";
    }

    void rect(double x, double y, double w, double h,
              const std::string& fill) {
        body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y)
              << "\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
              << "\" fill=\"" << fill << "\"/>\n";
    }

    void circle(double x, double y, double r, const std::string& fill) {
        body_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y)
              << "\" r=\"" << fmt(r) << "\" fill=\"" << fill << "\"/>\n";
    }

    void text(double x, double y, const std::string& content,
              double size = 12.0, const std::string& fill = "black") {
        body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y)
              << "\" font-family=\"sans-serif\" font-size=\"" << fmt(size)
              << "\" fill=\"" << fill << "\">" << content << "</text>\n";
    }

    std::string str() const {
        std::ostringstream out;
        out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
            << fmt(width_) << "\" height=\"" << fmt(height_)
            << "\" viewBox=\"0 0 " << fmt(width_) << " " << fmt(height_)
            << "\">\n"
            << body_.str() << "</svg>\n";
        return out.str();
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw io_error("cannot open SVG file for writing: " + path);
        out << str();
        if (!out) throw io_error("failed writing SVG file: " + path);
    }

private:
    double width_;
    double height_;
    std::ostringstream body_;
};

/// Axis-free panel mapping data coordinates into a viewport rectangle.
struct Panel {
    double x0, y0, width, height; // viewport
    double lo, hi;                // data value range (vertical)
    std::size_t n;                // sample count (horizontal)

    double map_x(double t) const {
        return n <= 1 ? x0 + width / 2
                      : x0 + width * t / static_cast<double>(n - 1);
    }
    double map_y(double v) const {
        const double span = hi > lo ? hi - lo : 1.0;
        return y0 + height - height * (v - lo) / span;
    }
};

inline std::pair<double, double> value_range(
    const std::vector<const std::vector<double>*>& series) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto* s : series) {
        for (double v : *s) {
            if (first) {
                lo = hi = v;
                first = false;
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (lo == hi) {
        lo -= 1.0;
        hi += 1.0;
    }
    return {lo, hi};
}

inline void draw_series(Document& doc, const Panel& panel,
                        const std::vector<double>& y,
                        const std::string& stroke, double width = 1.0,
                        double opacity = 1.0) {
    std::vector<std::pair<double, double>> points;
    points.reserve(y.size());
    for (std::size_t t = 0; t < y.size(); ++t)
        points.emplace_back(panel.map_x(static_cast<double>(t)),
                            panel.map_y(y[t]));
    doc.polyline(points, stroke, width, opacity);
}

/// Vertical stems from zero; suited to sparse activation maps.
inline void draw_stems(Document& doc, const Panel& panel,
                       const std::vector<double>& y,
                       const std::string& stroke) {
    const double zero = panel.map_y(0.0);
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (y[t] == 0.0) continue;
        const double x = panel.map_x(static_cast<double>(t));
        doc.line(x, zero, x, panel.map_y(y[t]), stroke, 1.0);
        doc.circle(x, panel.map_y(y[t]), 1.6, stroke);
    }
}

/// Gray heatmap of a rank-2 tensor: the minimum maps to white and the
/// maximum to black.
inline void draw_heatmap(Document& doc, double x0, double y0, double width,
                         double height, const Tensor& t) {
    const std::size_t nr = t.extent(0), nc = t.extent(1);
    double lo = t[0], hi = t[0];
    for (std::size_t i = 0; i < t.size(); ++i) {
        lo = std::min(lo, t[i]);
        hi = std::max(hi, t[i]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    const double cw = width / static_cast<double>(nc);
    const double ch = height / static_cast<double>(nr);
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t c = 0; c < nc; ++c) {
            const double v = (t.at(r, c) - lo) / span;
            const int g = static_cast<int>(std::lround(255.0 * (1.0 - v)));
            std::ostringstream fill;
            fill << "rgb(" << g << "," << g << "," << g << ")";
            doc.rect(x0 + cw * static_cast<double>(c),
                     y0 + ch * static_cast<double>(r), cw + 0.05, ch + 0.05,
                     fill.str());
        }
    }
}

} // namespace sanlab::svg
