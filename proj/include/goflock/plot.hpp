#pragma once
/**
 * @file plot.hpp
 * @brief Dependency-free SVG plots of runs and batches.
 *
 *   - trajectory_svg:  top-down XY view with obstacle footprints, one polyline
 *                      per agent, start and goal markers
 *   - metrics_svg:     D(t) and C(t) stacked time plots
 *   - batch_paths_svg: overlaid centroid paths of several runs
 *
 * Output bytes depend only on the input record (fixed number formatting).
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "goflock/metrics.hpp"
#include "goflock/sim.hpp"

namespace goflock {

/// Nothing to draw (no frames or no agents).
struct PlotError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    if (std::string_view(buf) == "-0.00") return "0.00";
    return buf;
}

inline const char* palette(std::size_t i) {
    static constexpr const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                             "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % 10];
}

/// Maps world XY into a fixed-size canvas, preserving aspect ratio.
struct XYMapper {
    double x0, y0, scale;
    double height;
    double margin{40.0};

    XYMapper(const AxisAlignedBox& bounds, double width_px, double height_px) : height(height_px) {
        const double w = std::max(bounds.extent().x, 1e-9);
        const double h = std::max(bounds.extent().y, 1e-9);
        scale = std::min((width_px - 2 * margin) / w, (height_px - 2 * margin) / h);
        x0 = bounds.min.x;
        y0 = bounds.min.y;
    }
    double px(double x) const { return margin + (x - x0) * scale; }
    double py(double y) const { return height - margin - (y - y0) * scale; }  // y up
};

inline std::string svg_open(double w, double h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
           "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline std::string obstacle_footprints(const ObstacleSet& obs, const XYMapper& m) {
    std::string s;
    for (const auto& prim : obs.primitives) {
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, AxisAlignedBox>) {
                    s += "<rect x=\"" + fmt(m.px(p.min.x)) + "\" y=\"" + fmt(m.py(p.max.y)) + "\" width=\"" +
                         fmt((p.max.x - p.min.x) * m.scale) + "\" height=\"" + fmt((p.max.y - p.min.y) * m.scale) +
                         "\" fill=\"#888\" fill-opacity=\"0.6\"/>\n";
                } else if constexpr (std::is_same_v<T, VerticalCylinder>) {
                    s += "<circle cx=\"" + fmt(m.px(p.cx)) + "\" cy=\"" + fmt(m.py(p.cy)) + "\" r=\"" +
                         fmt(p.radius * m.scale) + "\" fill=\"#6b4f2a\" fill-opacity=\"0.8\"/>\n";
                } else {
                    s += "<circle cx=\"" + fmt(m.px(p.center.x)) + "\" cy=\"" + fmt(m.py(p.center.y)) + "\" r=\"" +
                         fmt(p.radius * m.scale) + "\" fill=\"#3a7d3a\" fill-opacity=\"0.25\"/>\n";
                }
            },
            prim);
    }
    return s;
}

inline std::string polyline(const std::vector<std::pair<double, double>>& pts, const char* color, double width) {
    std::string s = "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"" + fmt(width) +
                    "\" points=\"";
    for (std::size_t k = 0; k < pts.size(); ++k) {
        if (k) s += ' ';
        s += fmt(pts[k].first) + "," + fmt(pts[k].second);
    }
    s += "\"/>\n";
    return s;
}

inline std::string text(double x, double y, const std::string& str, int size = 12, const char* anchor = "start") {
    return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-family=\"sans-serif\" font-size=\"" +
           std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + str + "</text>\n";
}

/// Every `stride`-th frame plus the last, to keep files small.
inline std::vector<std::size_t> sample_frames(std::size_t n, std::size_t max_points = 600) {
    std::vector<std::size_t> idx;
    const std::size_t stride = std::max<std::size_t>(1, (n + max_points - 1) / max_points);
    for (std::size_t k = 0; k < n; k += stride) idx.push_back(k);
    if (!idx.empty() && idx.back() != n - 1) idx.push_back(n - 1);
    return idx;
}

inline void require_plottable(const RunRecord& rec) {
    if (rec.frames.empty() || rec.agent_count() == 0) throw PlotError("nothing to plot: empty run record");
}

}  // namespace detail

/// Top-down XY trajectories with obstacle footprints. The goal marker is
/// omitted when `show_goal` is false (records read back from CSV carry no goal).
inline std::string trajectory_svg(const RunRecord& rec, double width = 800, double height = 600,
                                  bool show_goal = true) {
    detail::require_plottable(rec);
    const detail::XYMapper m(rec.obstacles.world_bounds, width, height);
    std::string s = detail::svg_open(width, height);
    const auto& wb = rec.obstacles.world_bounds;
    s += "<rect x=\"" + detail::fmt(m.px(wb.min.x)) + "\" y=\"" + detail::fmt(m.py(wb.max.y)) + "\" width=\"" +
         detail::fmt(wb.extent().x * m.scale) + "\" height=\"" + detail::fmt(wb.extent().y * m.scale) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    s += detail::obstacle_footprints(rec.obstacles, m);
    const auto idx = detail::sample_frames(rec.frames.size());
    for (std::size_t i = 0; i < rec.agent_count(); ++i) {
        std::vector<std::pair<double, double>> pts;
        for (auto k : idx) pts.emplace_back(m.px(rec.frames[k].positions[i].x), m.py(rec.frames[k].positions[i].y));
        s += detail::polyline(pts, detail::palette(i), 1.5);
        s += "<circle cx=\"" + detail::fmt(pts.front().first) + "\" cy=\"" + detail::fmt(pts.front().second) +
             "\" r=\"3\" fill=\"" + detail::palette(i) + "\"/>\n";
    }
    if (show_goal) {
        s += "<circle cx=\"" + detail::fmt(m.px(rec.goal.x)) + "\" cy=\"" + detail::fmt(m.py(rec.goal.y)) +
             "\" r=\"6\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n";
    }
    s += detail::text(m.margin, 20, "run " + std::to_string(rec.run_id) + "  " + to_string(rec.controller) + "  " +
                                        to_string(rec.outcome));
    s += "</svg>\n";
    return s;
}

/// D(t) (top) and C(t) (bottom) against time.
inline std::string metrics_svg(const RunRecord& rec, double width = 800, double height = 500) {
    detail::require_plottable(rec);
    const MetricSeries ms = evaluate(rec);
    const double margin = 50.0;
    const double panel_h = (height - 3 * margin) / 2.0;
    const double t_end = std::max(rec.frames.back().t, 1e-9);
    const double d_max = std::max(1.0, *std::max_element(ms.dispersion.begin(), ms.dispersion.end()));
    auto px = [&](double t) { return margin + t / t_end * (width - 2 * margin); };

    std::string s = detail::svg_open(width, height);
    const auto idx = detail::sample_frames(rec.frames.size(), 1500);
    auto panel = [&](double top, double lo, double hi, const std::string& label, auto value_at, const char* color) {
        s += "<rect x=\"" + detail::fmt(margin) + "\" y=\"" + detail::fmt(top) + "\" width=\"" +
             detail::fmt(width - 2 * margin) + "\" height=\"" + detail::fmt(panel_h) +
             "\" fill=\"none\" stroke=\"black\"/>\n";
        auto py = [&](double v) { return top + panel_h - (v - lo) / (hi - lo) * panel_h; };
        std::vector<std::pair<double, double>> pts;
        for (auto k : idx) {
            const auto v = value_at(k);
            if (v) {
                pts.emplace_back(px(rec.frames[k].t), py(*v));
            } else if (!pts.empty()) {
                s += detail::polyline(pts, color, 1.5);
                pts.clear();
            }
        }
        if (!pts.empty()) s += detail::polyline(pts, color, 1.5);
        s += detail::text(margin - 5, top + 10, detail::fmt(hi), 10, "end");
        s += detail::text(margin - 5, top + panel_h, detail::fmt(lo), 10, "end");
        s += detail::text(margin + 5, top - 5, label);
    };
    panel(margin, 0.0, d_max, "D(t) [m]", [&](std::size_t k) { return std::optional<double>(ms.dispersion[k]); },
          "#1f77b4");
    panel(2 * margin + panel_h, -1.0, 1.0, "C(t)", [&](std::size_t k) { return ms.cosine[k]; }, "#d62728");
    s += detail::text(width - margin, height - 15, "t [s], end " + detail::fmt(t_end), 12, "end");
    s += "</svg>\n";
    return s;
}

/// Centroid paths of several runs over the first run's obstacles.
inline std::string batch_paths_svg(std::span<const RunRecord> runs, double width = 800, double height = 600) {
    if (runs.empty()) throw PlotError("nothing to plot: empty batch");
    for (const auto& r : runs) detail::require_plottable(r);
    const detail::XYMapper m(runs.front().obstacles.world_bounds, width, height);
    std::string s = detail::svg_open(width, height);
    s += detail::obstacle_footprints(runs.front().obstacles, m);
    for (std::size_t r = 0; r < runs.size(); ++r) {
        std::vector<std::pair<double, double>> pts;
        for (auto k : detail::sample_frames(runs[r].frames.size())) {
            const Vec3 c = centroid(runs[r].frames[k].positions);
            pts.emplace_back(m.px(c.x), m.py(c.y));
        }
        s += detail::polyline(pts, detail::palette(r), 1.2);
    }
    s += detail::text(m.margin, 20, std::to_string(runs.size()) + " runs, centroid paths");
    s += "</svg>\n";
    return s;
}

}  // namespace goflock
