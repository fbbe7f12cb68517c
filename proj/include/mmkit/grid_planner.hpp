#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace mmkit {

struct Cell {
  int x = 0;  // column
  int y = 0;  // row
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Occupancy grid. Cell (0, 0) sits at `origin`; cell (x, y) at
/// origin + resolution * (x, y).
class GridMap {
 public:
  GridMap(int width, int height, double resolution, double origin_x = 0.0, double origin_y = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  double originX() const { return origin_x_; }
  double originY() const { return origin_y_; }

  bool inBounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool occupied(Cell c) const;
  void setOccupied(Cell c, bool value = true);
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }

  double worldX(Cell c) const { return origin_x_ + resolution_ * c.x; }
  double worldY(Cell c) const { return origin_y_ + resolution_ * c.y; }
  /// Nearest cell to a world point, nullopt outside the grid.
  std::optional<Cell> cellAt(double wx, double wy) const;

 private:
  int width_;
  int height_;
  double resolution_;
  double origin_x_;
  double origin_y_;
  std::vector<std::uint8_t> occupancy_;
};

/**
 * Reads the map file format: a one-line JSON header
 * `{"schema_version": 1, "resolution": r, "origin": [x, y]}` followed by grid
 * rows of `#` (occupied) and `.` (free). The first grid line is the top row
 * (largest y). Throws ConfigError on malformed input.
 */
GridMap parse_map(std::istream& in, const std::string& source_name = "map");

enum class Connectivity { Four, Eight };
enum class Heuristic { Manhattan, Euclidean };

struct PlanResult {
  std::vector<Cell> path;
  /// In cell units: axis steps cost 1, diagonal steps sqrt(2).
  double cost = 0.0;
  std::size_t nodes_expanded = 0;
  bool found = false;
  /// Closed-set insertion order, filled only when requested.
  std::vector<Cell> expansions;
};

double heuristic_value(Heuristic kind, Cell cell, Cell goal);

/**
 * A* with f = g + h. Ties on f go to the larger g, then to the smaller
 * row-major index. Diagonal moves are only allowed when both orthogonal
 * neighbours are free. Throws InvalidArgument if start or goal is out of
 * bounds or occupied.
 */
PlanResult astar(const GridMap& map, Cell start, Cell goal, Connectivity connectivity,
                 Heuristic heuristic, bool record_expansions = false);

/// Canonical cost of a cell path: axis steps + sqrt(2) * diagonal steps.
double path_cost(const std::vector<Cell>& path);

struct TimedWaypoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct TimedPath {
  std::vector<TimedWaypoint> waypoints;

  double duration() const { return waypoints.empty() ? 0.0 : waypoints.back().t; }
  /// Position and segment heading at time t, clamped to the ends.
  TimedWaypoint at(double t) const;
};

/**
 * Constant-speed timing of the cell polyline in world coordinates. Each
 * waypoint's heading points along its outgoing segment; the last one keeps
 * the heading of the segment into it unless `final_heading` is given.
 */
TimedPath time_parameterize(const PlanResult& result, const GridMap& map, double speed,
                            std::optional<double> final_heading = std::nullopt);

}  // namespace mmkit
