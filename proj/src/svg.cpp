#include "mmkit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace mmkit {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#17becf", "#bcbd22"};

const char* color(std::size_t i) { return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))]; }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Roughly five "nice" tick values spanning [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double stepv = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      stepv = m * mag;
      break;
    }
  }
  std::vector<double> out;
  for (double v = std::ceil(lo / stepv) * stepv; v <= hi + 1e-9 * span; v += stepv) out.push_back(v);
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double left, top, w, h;
  double px(double x) const { return left + (x - x0) / (x1 - x0) * w; }
  double py(double y) const { return top + h - (y - y0) / (y1 - y0) * h; }
};

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series, int width, int height) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  if (x1 - x0 < 1e-12) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const Frame f{x0, x1, y0, y1, 70.0, 40.0, width - 190.0, height - 90.0};
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
  out << "<rect x=\"" << f.left << "\" y=\"" << f.top << "\" width=\"" << f.w << "\" height=\"" << f.h
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ticks(x0, x1)) {
    out << "<line x1=\"" << f.px(t) << "\" y1=\"" << f.top + f.h << "\" x2=\"" << f.px(t) << "\" y2=\""
        << f.top + f.h + 5 << "\" stroke=\"black\"/>";
    out << "<text x=\"" << f.px(t) << "\" y=\"" << f.top + f.h + 18 << "\" text-anchor=\"middle\">" << std::setprecision(3)
        << std::defaultfloat << t << std::fixed << std::setprecision(2) << "</text>\n";
  }
  for (double t : ticks(y0, y1)) {
    out << "<line x1=\"" << f.left - 5 << "\" y1=\"" << f.py(t) << "\" x2=\"" << f.left + f.w << "\" y2=\""
        << f.py(t) << "\" stroke=\"#dddddd\"/>";
    out << "<text x=\"" << f.left - 8 << "\" y=\"" << f.py(t) + 4 << "\" text-anchor=\"end\">" << std::setprecision(3)
        << std::defaultfloat << t << std::fixed << std::setprecision(2) << "</text>\n";
  }
  out << "<text x=\"" << f.left + f.w / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  out << "<text transform=\"translate(16," << f.top + f.h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    out << "<polyline fill=\"none\" stroke=\"" << color(i) << "\" stroke-width=\"1.5\" points=\"";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    // Thin very long series; the figure cannot show more than a few px per point anyway.
    const std::size_t stride = std::max<std::size_t>(1, n / 2000);
    for (std::size_t k = 0; k < n; k += stride) out << f.px(s.x[k]) << ',' << f.py(s.y[k]) << ' ';
    if (n > 0 && (n - 1) % stride != 0) out << f.px(s.x[n - 1]) << ',' << f.py(s.y[n - 1]);
    out << "\"/>\n";
    const double ly = f.top + 14.0 + 18.0 * static_cast<double>(i);
    out << "<line x1=\"" << f.left + f.w + 12 << "\" y1=\"" << ly << "\" x2=\"" << f.left + f.w + 32 << "\" y2=\""
        << ly << "\" stroke=\"" << color(i) << "\" stroke-width=\"2\"/>";
    out << "<text x=\"" << f.left + f.w + 38 << "\" y=\"" << ly + 4 << "\">" << escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string svg_grid(const GridMap& map, const std::vector<GridOverlay>& paths, int cell_px) {
  const int w = map.width() * cell_px;
  const int h = map.height() * cell_px;
  const auto cx = [&](const Cell& c) { return (c.x + 0.5) * cell_px; };
  const auto cy = [&](const Cell& c) { return (map.height() - 1 - c.y + 0.5) * cell_px; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h + 24 * paths.size() + 8
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\" stroke=\"black\"/>\n";
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (!map.occupied({x, y})) continue;
      out << "<rect x=\"" << x * cell_px << "\" y=\"" << (map.height() - 1 - y) * cell_px << "\" width=\"" << cell_px
          << "\" height=\"" << cell_px << "\" fill=\"#333333\"/>\n";
    }
  }
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& p = paths[i];
    if (p.cells.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << color(i) << "\" stroke-width=\"" << std::max(1, cell_px / 3)
        << "\" points=\"";
    for (const Cell& c : p.cells) out << cx(c) << ',' << cy(c) << ' ';
    out << "\"/>\n";
    out << "<circle cx=\"" << cx(p.cells.front()) << "\" cy=\"" << cy(p.cells.front()) << "\" r=\"" << cell_px
        << "\" fill=\"#2ca02c\"/>";
    out << "<circle cx=\"" << cx(p.cells.back()) << "\" cy=\"" << cy(p.cells.back()) << "\" r=\"" << cell_px
        << "\" fill=\"#d62728\"/>\n";
    out << "<text x=\"4\" y=\"" << h + 18 + 24 * i << "\" fill=\"" << color(i) << "\">" << escape(p.label)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string svg_base_run(const TimedPath& path, const std::vector<BaseLogRow>& log) {
  PlotSeries ref{"reference", {}, {}};
  for (const auto& wp : path.waypoints) {
    ref.x.push_back(wp.x);
    ref.y.push_back(wp.y);
  }
  PlotSeries driven{"driven", {}, {}};
  for (const auto& row : log) {
    driven.x.push_back(row.x);
    driven.y.push_back(row.y);
  }
  return svg_line_plot("Base path", "x [m]", "y [m]", {ref, driven});
}

std::vector<std::pair<std::string, std::string>> svg_tracking_figures(const TrackingLog& log) {
  std::vector<std::pair<std::string, std::string>> out;
  if (log.samples.empty()) return out;
  const auto n = log.samples.front().q_ref.size();
  std::vector<double> t;
  for (const auto& s : log.samples) t.push_back(s.t);

  const auto figure = [&](const char* title, const char* unit, auto pick) {
    std::vector<PlotSeries> series;
    for (Eigen::Index j = 0; j < n; ++j) {
      PlotSeries s{"joint " + std::to_string(j), t, {}};
      for (const auto& sample : log.samples) s.y.push_back(pick(sample, j));
      series.push_back(std::move(s));
    }
    return svg_line_plot(title, "t [s]", unit, series);
  };
  out.emplace_back("positions", figure("Joint positions", "q [rad]", [](const TrackingSample& s, Eigen::Index j) {
                     return s.q_act[j];
                   }));
  out.emplace_back("velocities", figure("Joint velocities", "v [rad/s]", [](const TrackingSample& s, Eigen::Index j) {
                     return s.v_act[j];
                   }));
  out.emplace_back("efforts", figure("Joint efforts", "tau [N m]", [](const TrackingSample& s, Eigen::Index j) {
                     return s.tau[j];
                   }));
  return out;
}

}  // namespace mmkit
