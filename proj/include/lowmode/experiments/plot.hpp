#pragma once

// Minimal SVG 1.1 line plots with log-log or semilog-y axes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lowmode/errors.hpp"
#include "lowmode/experiments/table.hpp"

namespace lowmode {

enum class AxisScale { log_log, semilog_y };

struct PlotSeries {
  std::string label;
  std::string x_column;
  std::string y_column;
  std::string filter_column;  // optional: keep rows whose text cell equals filter_value
  std::string filter_value;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  AxisScale scale = AxisScale::log_log;
  std::vector<PlotSeries> series;
  std::optional<double> guide_slope;  // dashed reference line through the first point of series 0
  std::string guide_label;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    switch (ch) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += ch;
    }
  }
  return o;
}

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Points {
  std::vector<double> x, y;
};

inline Points series_points(const ResultTable& t, const PlotSeries& s, AxisScale scale) {
  Points p;
  const std::size_t cx = t.column_index(s.x_column), cy = t.column_index(s.y_column);
  for (std::size_t r = 0; r < t.size(); ++r) {
    if (!s.filter_column.empty()) {
      const auto* v = std::get_if<std::string>(&t.rows()[r][t.column_index(s.filter_column)]);
      if (!v || *v != s.filter_value) continue;
    }
    const double x = t.real(r, t.columns()[cx].name), y = t.real(r, t.columns()[cy].name);
    if (!std::isfinite(x) || !std::isfinite(y) || y <= 0.0) continue;
    if (scale == AxisScale::log_log && x <= 0.0) continue;
    p.x.push_back(x);
    p.y.push_back(y);
  }
  return p;
}

}  // namespace detail

/// Renders the plot as an SVG document.
inline std::string render_svg(const ResultTable& t, const PlotSpec& spec) {
  using namespace detail;
  const double W = 640, H = 480, L = 80, R = 170, T = 40, B = 60;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::vector<Points> pts;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const PlotSeries& s : spec.series) {
    pts.push_back(series_points(t, s, spec.scale));
    for (double x : pts.back().x) xmin = std::min(xmin, x), xmax = std::max(xmax, x);
    for (double y : pts.back().y) ymin = std::min(ymin, y), ymax = std::max(ymax, y);
  }
  const bool have = std::isfinite(xmin);
  if (!have) xmin = 1, xmax = 10, ymin = 1, ymax = 10;
  const bool logx = spec.scale == AxisScale::log_log;
  auto tx = [&](double x) { return logx ? std::log10(x) : x; };
  double x0 = tx(xmin), x1 = tx(xmax), y0 = std::floor(std::log10(ymin)), y1 = std::ceil(std::log10(ymax));
  if (x1 <= x0) x0 -= 0.5, x1 += 0.5;
  if (y1 <= y0) y1 = y0 + 1;
  const double pad = 0.05 * (x1 - x0);
  x0 -= pad;
  x1 += pad;
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (std::log10(y) - y0) / (y1 - y0) * (H - T - B); };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
  s += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt("%.1f", (L + W - R) / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
       xml_escape(spec.title) + "</text>\n";
  s += "<rect x=\"" + fmt("%.1f", L) + "\" y=\"" + fmt("%.1f", T) + "\" width=\"" + fmt("%.1f", W - L - R) + "\" height=\"" +
       fmt("%.1f", H - T - B) + "\" fill=\"none\" stroke=\"black\"/>\n";

  // y decades
  for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); ++e) {
    const double y = py(std::pow(10.0, e));
    s += "<line x1=\"" + fmt("%.1f", L) + "\" y1=\"" + fmt("%.1f", y) + "\" x2=\"" + fmt("%.1f", W - R) + "\" y2=\"" +
         fmt("%.1f", y) + "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + fmt("%.1f", L - 6) + "\" y=\"" + fmt("%.1f", y + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" + std::to_string(e) + "</text>\n";
  }
  // x ticks at the data abscissae
  std::vector<double> xs;
  for (const Points& p : pts) xs.insert(xs.end(), p.x.begin(), p.x.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double x : xs) {
    s += "<text x=\"" + fmt("%.1f", px(x)) + "\" y=\"" + fmt("%.1f", H - B + 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt("%g", x) + "</text>\n";
  }
  s += "<text x=\"" + fmt("%.1f", (L + W - R) / 2) + "\" y=\"" + fmt("%.1f", H - 18) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + xml_escape(spec.x_label) + "</text>\n";
  s += "<text x=\"18\" y=\"" + fmt("%.1f", (T + H - B) / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 " +
       fmt("%.1f", (T + H - B) / 2) + ")\">" + xml_escape(spec.y_label) + "</text>\n";

  int legend = 0;
  auto legend_entry = [&](const std::string& label, const char* color, bool dashed) {
    const double y = T + 14 + 18 * legend++;
    s += "<line x1=\"" + fmt("%.1f", W - R + 10) + "\" y1=\"" + fmt("%.1f", y) + "\" x2=\"" + fmt("%.1f", W - R + 34) +
         "\" y2=\"" + fmt("%.1f", y) + "\" stroke=\"" + color + "\" stroke-width=\"2\"" +
         (dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
    s += "<text x=\"" + fmt("%.1f", W - R + 40) + "\" y=\"" + fmt("%.1f", y + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + xml_escape(label) + "</text>\n";
  };

  for (std::size_t i = 0; i < pts.size(); ++i) {
    const char* c = colors[i % 6];
    if (pts[i].x.empty()) continue;
    std::string path;
    for (std::size_t k = 0; k < pts[i].x.size(); ++k)
      path += fmt("%.2f", px(pts[i].x[k])) + "," + fmt("%.2f", py(pts[i].y[k])) + " ";
    s += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" stroke-width=\"2\" points=\"" + path + "\"/>\n";
    for (std::size_t k = 0; k < pts[i].x.size(); ++k)
      s += "<circle cx=\"" + fmt("%.2f", px(pts[i].x[k])) + "\" cy=\"" + fmt("%.2f", py(pts[i].y[k])) + "\" r=\"3\" fill=\"" + c +
           "\"/>\n";
    legend_entry(spec.series[i].label, c, false);
  }

  if (spec.guide_slope && !pts.empty() && pts[0].x.size() >= 2) {
    const double xa = pts[0].x.front(), ya = pts[0].y.front(), xb = pts[0].x.back();
    const double yb = ya * std::pow(xb / xa, *spec.guide_slope);
    s += "<line x1=\"" + fmt("%.2f", px(xa)) + "\" y1=\"" + fmt("%.2f", py(ya)) + "\" x2=\"" + fmt("%.2f", px(xb)) + "\" y2=\"" +
         fmt("%.2f", py(yb)) + "\" stroke=\"#555555\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
    legend_entry(spec.guide_label.empty() ? "slope " + fmt("%g", *spec.guide_slope) : spec.guide_label, "#555555", true);
  }
  s += "</svg>\n";
  return s;
}

inline void emit_plot(const ResultTable& t, const PlotSpec& spec, const std::string& path) {
  write_text_file(path, render_svg(t, spec));
}

}  // namespace lowmode
