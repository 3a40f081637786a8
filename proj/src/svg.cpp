// SPDX-License-Identifier: Apache-2.0
#include "finsler/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace finsler {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double map(double v) const {
    const double t = log ? std::log10(v) : v;
    return (t - lo) / (hi - lo);
  }
};

Axis make_axis(const std::vector<double>& values, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v) || (log && v <= 0)) continue;
    const double t = log ? std::log10(v) : v;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12 * (1 + std::abs(hi))) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  a.lo = lo - pad;
  a.hi = hi + pad;
  return a;
}

bool drawable(const Axis& ax, const Axis& ay, double x, double y) {
  return std::isfinite(x) && std::isfinite(y) && !(ax.log && x <= 0) && !(ay.log && y <= 0);
}

}  // namespace

std::string render_svg(const Plot& plot) {
  std::vector<double> xs, ys;
  for (const auto& s : plot.series)
    for (const auto& [x, y] : s.points) {
      xs.push_back(x);
      ys.push_back(y);
    }
  const Axis ax = make_axis(xs, plot.log_x), ay = make_axis(ys, plot.log_y);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + pw * ax.map(x); };
  auto py = [&](double y) { return kTop + ph * (1.0 - ay.map(y)); };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%g", kWidth) + "\" height=\"" +
         fmt("%g", kHeight) + "\" viewBox=\"0 0 " + fmt("%g", kWidth) + " " + fmt("%g", kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt("%g", kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         escape(plot.title) + "</text>\n";
  out += "<rect x=\"" + fmt("%g", kLeft) + "\" y=\"" + fmt("%g", kTop) + "\" width=\"" + fmt("%g", pw) + "\" height=\"" +
         fmt("%g", ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double t = i / 4.0;
    const double xv = ax.lo + t * (ax.hi - ax.lo), yv = ay.lo + t * (ay.hi - ay.lo);
    const double xl = ax.log ? std::pow(10.0, xv) : xv, yl = ay.log ? std::pow(10.0, yv) : yv;
    const double gx = kLeft + pw * t, gy = kTop + ph * (1 - t);
    out += "<line x1=\"" + fmt("%.2f", gx) + "\" y1=\"" + fmt("%.2f", kTop + ph) + "\" x2=\"" + fmt("%.2f", gx) + "\" y2=\"" +
           fmt("%.2f", kTop + ph + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt("%.2f", gx) + "\" y=\"" + fmt("%.2f", kTop + ph + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt("%.4g", xl) + "</text>\n";
    out += "<line x1=\"" + fmt("%.2f", kLeft - 5) + "\" y1=\"" + fmt("%.2f", gy) + "\" x2=\"" + fmt("%.2f", kLeft) + "\" y2=\"" +
           fmt("%.2f", gy) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt("%.2f", kLeft - 8) + "\" y=\"" + fmt("%.2f", gy + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt("%.4g", yl) + "</text>\n";
  }
  out += "<text x=\"" + fmt("%.2f", kLeft + pw / 2) + "\" y=\"" + fmt("%.2f", kHeight - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + escape(plot.x_label) + "</text>\n";
  out += "<text x=\"16\" y=\"" + fmt("%.2f", kTop + ph / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 " +
         fmt("%.2f", kTop + ph / 2) + ")\">" + escape(plot.y_label) + "</text>\n";

  for (std::size_t s = 0; s < plot.series.size(); ++s) {
    const auto& series = plot.series[s];
    const char* color = kColors[s % (sizeof kColors / sizeof *kColors)];
    std::string pts;
    double prev_y = 0;
    bool first = true;
    for (const auto& [x, y] : series.points) {
      if (!drawable(ax, ay, x, y)) continue;
      if (series.step && !first) pts += fmt("%.2f", px(x)) + "," + fmt("%.2f", py(prev_y)) + " ";
      pts += fmt("%.2f", px(x)) + "," + fmt("%.2f", py(y)) + " ";
      prev_y = y;
      first = false;
    }
    if (!pts.empty()) {
      pts.pop_back();
      out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    }
    if (series.markers)
      for (const auto& [x, y] : series.points)
        if (drawable(ax, ay, x, y))
          out += "<circle cx=\"" + fmt("%.2f", px(x)) + "\" cy=\"" + fmt("%.2f", py(y)) + "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
    if (!series.label.empty()) {
      const double ly = kTop + 16 + 16 * static_cast<double>(s);
      out += "<line x1=\"" + fmt("%.2f", kLeft + 10) + "\" y1=\"" + fmt("%.2f", ly - 4) + "\" x2=\"" + fmt("%.2f", kLeft + 30) +
             "\" y2=\"" + fmt("%.2f", ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
      out += "<text x=\"" + fmt("%.2f", kLeft + 36) + "\" y=\"" + fmt("%.2f", ly) + "\" font-family=\"sans-serif\" font-size=\"11\">" +
             escape(series.label) + "</text>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

Plot eigenvalue_staircase(const std::vector<double>& lambdas, const std::string& title) {
  Plot p;
  p.title = title;
  p.x_label = "k";
  p.y_label = "lambda_k";
  PlotSeries s;
  s.label = "lambda_k";
  s.step = true;
  for (std::size_t i = 0; i < lambdas.size(); ++i) s.points.emplace_back(static_cast<double>(i + 1), lambdas[i]);
  p.series.push_back(std::move(s));
  return p;
}

Plot counting_function_plot(const std::vector<double>& lambdas, const std::string& title) {
  Plot p;
  p.title = title;
  p.x_label = "lambda";
  p.y_label = "N(lambda)";
  std::vector<double> sorted = lambdas;
  std::sort(sorted.begin(), sorted.end());
  PlotSeries s;
  s.label = "N(lambda)";
  s.step = true;
  s.markers = false;
  const double top = sorted.empty() ? 1.0 : sorted.back() * 1.1 + 0.1;
  s.points.emplace_back(sorted.empty() ? 0.0 : std::min(0.0, sorted.front()), 0.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // N jumps just after each eigenvalue; equal values collapse into one jump.
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    s.points.emplace_back(sorted[i], static_cast<double>(i + 1));
  }
  s.points.emplace_back(top, static_cast<double>(sorted.size()));
  p.series.push_back(std::move(s));
  return p;
}

}  // namespace finsler
