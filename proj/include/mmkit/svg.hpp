#pragma once

#include "mmkit/control.hpp"
#include "mmkit/diffdrive.hpp"
#include "mmkit/grid_planner.hpp"

#include <string>
#include <vector>

namespace mmkit {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Axes, ticks, legend and one polyline per series.
std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series, int width = 720, int height = 420);

struct GridOverlay {
  std::string label;
  std::vector<Cell> cells;
};

/// Occupancy grid with planned paths drawn over it (top row of the image is the largest y).
std::string svg_grid(const GridMap& map, const std::vector<GridOverlay>& paths, int cell_px = 6);

/// Planned reference polyline against the driven trajectory, in world coordinates.
std::string svg_base_run(const TimedPath& path, const std::vector<BaseLogRow>& log);

/// Joint positions, velocities and torques of a tracking log, one figure each.
std::vector<std::pair<std::string, std::string>> svg_tracking_figures(const TrackingLog& log);

}  // namespace mmkit
