#include "mmkit/grid_planner.hpp"

#include "mmkit/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

namespace mmkit {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

struct OpenEntry {
  double f;
  double g;
  std::size_t index;
};

// priority_queue pops the "largest"; this orders the best entry last.
struct WorseEntry {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g < b.g;
    return a.index > b.index;
  }
};

struct Move {
  int dx, dy;
  double cost;
};

constexpr Move kFour[] = {{1, 0, 1.0}, {-1, 0, 1.0}, {0, 1, 1.0}, {0, -1, 1.0}};
constexpr Move kEight[] = {{1, 0, 1.0},     {-1, 0, 1.0},     {0, 1, 1.0},      {0, -1, 1.0},
                           {1, 1, kSqrt2}, {1, -1, kSqrt2}, {-1, 1, kSqrt2}, {-1, -1, kSqrt2}};

double wrapAngle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace

GridMap::GridMap(int width, int height, double resolution, double origin_x, double origin_y)
    : width_(width), height_(height), resolution_(resolution), origin_x_(origin_x), origin_y_(origin_y) {
  if (width < 1 || height < 1) throw InvalidArgument("grid map needs at least one cell");
  if (!(std::isfinite(resolution) && resolution > 0.0)) throw InvalidArgument("grid resolution must be positive");
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) throw InvalidArgument("grid origin is not finite");
  occupancy_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

bool GridMap::occupied(Cell c) const {
  if (!inBounds(c)) throw InvalidArgument("cell out of bounds");
  return occupancy_[index(c)] != 0;
}

void GridMap::setOccupied(Cell c, bool value) {
  if (!inBounds(c)) throw InvalidArgument("cell out of bounds");
  occupancy_[index(c)] = value ? 1 : 0;
}

std::optional<Cell> GridMap::cellAt(double wx, double wy) const {
  const Cell c{static_cast<int>(std::lround((wx - origin_x_) / resolution_)),
               static_cast<int>(std::lround((wy - origin_y_) / resolution_))};
  if (!inBounds(c)) return std::nullopt;
  return c;
}

GridMap parse_map(std::istream& in, const std::string& source_name) {
  std::string header;
  if (!std::getline(in, header)) throw ConfigError(source_name + ":1: missing JSON header line");

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(header);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(source_name + ":1: header is not valid JSON (" + e.what() + ")");
  }
  if (!meta.is_object()) throw ConfigError(source_name + ":1: header must be a JSON object");
  if (!meta.contains("schema_version") || meta["schema_version"] != 1) {
    throw ConfigError(source_name + ":1: schema_version: expected 1");
  }
  if (!meta.contains("resolution") || !meta["resolution"].is_number()) {
    throw ConfigError(source_name + ":1: resolution: expected a number");
  }
  const double resolution = meta["resolution"].get<double>();
  double ox = 0.0, oy = 0.0;
  if (meta.contains("origin")) {
    const auto& o = meta["origin"];
    if (!o.is_array() || o.size() != 2 || !o[0].is_number() || !o[1].is_number()) {
      throw ConfigError(source_name + ":1: origin: expected [x, y]");
    }
    ox = o[0].get<double>();
    oy = o[1].get<double>();
  }

  std::vector<std::string> rows;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] != '#' && line[i] != '.') {
        throw ConfigError(source_name + ":" + std::to_string(line_no) + ": unexpected character '" +
                          std::string(1, line[i]) + "' at column " + std::to_string(i + 1));
      }
    }
    if (!rows.empty() && line.size() != rows.front().size()) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": row width " +
                        std::to_string(line.size()) + " differs from " + std::to_string(rows.front().size()));
    }
    rows.push_back(line);
  }
  if (rows.empty()) throw ConfigError(source_name + ": no grid rows");

  GridMap map(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()), resolution, ox, oy);
  const int h = map.height();
  for (int r = 0; r < h; ++r) {
    for (int x = 0; x < map.width(); ++x) {
      if (rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(x)] == '#') map.setOccupied({x, h - 1 - r});
    }
  }
  return map;
}

double heuristic_value(Heuristic kind, Cell cell, Cell goal) {
  const double dx = std::abs(cell.x - goal.x);
  const double dy = std::abs(cell.y - goal.y);
  return kind == Heuristic::Manhattan ? dx + dy : std::sqrt(dx * dx + dy * dy);
}

double path_cost(const std::vector<Cell>& path) {
  long axis = 0, diagonal = 0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const bool diag = path[i].x != path[i - 1].x && path[i].y != path[i - 1].y;
    (diag ? diagonal : axis) += 1;
  }
  return static_cast<double>(axis) + kSqrt2 * static_cast<double>(diagonal);
}

PlanResult astar(const GridMap& map, Cell start, Cell goal, Connectivity connectivity,
                 Heuristic heuristic, bool record_expansions) {
  if (!map.inBounds(start) || !map.inBounds(goal)) throw InvalidArgument("astar: start or goal out of bounds");
  if (map.occupied(start) || map.occupied(goal)) throw InvalidArgument("astar: start or goal is occupied");

  const std::size_t cells = static_cast<std::size_t>(map.width()) * static_cast<std::size_t>(map.height());
  std::vector<double> g(cells, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(cells, cells);
  std::vector<std::uint8_t> closed(cells, 0);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, WorseEntry> open;

  const auto cellOf = [&](std::size_t idx) {
    return Cell{static_cast<int>(idx % static_cast<std::size_t>(map.width())),
                static_cast<int>(idx / static_cast<std::size_t>(map.width()))};
  };

  const std::size_t start_idx = map.index(start);
  const std::size_t goal_idx = map.index(goal);
  g[start_idx] = 0.0;
  open.push({heuristic_value(heuristic, start, goal), 0.0, start_idx});

  const Move* moves = connectivity == Connectivity::Four ? kFour : kEight;
  const std::size_t move_count = connectivity == Connectivity::Four ? 4 : 8;

  PlanResult result;
  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    if (closed[top.index] || top.g > g[top.index]) continue;
    closed[top.index] = 1;
    ++result.nodes_expanded;
    const Cell cur = cellOf(top.index);
    if (record_expansions) result.expansions.push_back(cur);
    if (top.index == goal_idx) {
      result.found = true;
      break;
    }
    for (std::size_t m = 0; m < move_count; ++m) {
      const Move& mv = moves[m];
      const Cell next{cur.x + mv.dx, cur.y + mv.dy};
      if (!map.inBounds(next) || map.occupied(next)) continue;
      if (mv.dx != 0 && mv.dy != 0 &&
          (map.occupied({cur.x + mv.dx, cur.y}) || map.occupied({cur.x, cur.y + mv.dy}))) {
        continue;
      }
      const std::size_t ni = map.index(next);
      if (closed[ni]) continue;
      const double ng = top.g + mv.cost;
      if (ng < g[ni]) {
        g[ni] = ng;
        parent[ni] = top.index;
        open.push({ng + heuristic_value(heuristic, next, goal), ng, ni});
      }
    }
  }

  if (result.found) {
    for (std::size_t idx = goal_idx; idx != cells; idx = parent[idx]) result.path.push_back(cellOf(idx));
    std::reverse(result.path.begin(), result.path.end());
    result.cost = path_cost(result.path);
  }
  return result;
}

TimedWaypoint TimedPath::at(double t) const {
  if (waypoints.empty()) throw InvalidArgument("TimedPath::at: empty path");
  if (t <= waypoints.front().t) return {t, waypoints.front().x, waypoints.front().y, waypoints.front().heading};
  if (t >= waypoints.back().t) return {t, waypoints.back().x, waypoints.back().y, waypoints.back().heading};
  const auto it = std::upper_bound(waypoints.begin(), waypoints.end(), t,
                                   [](double v, const TimedWaypoint& w) { return v < w.t; });
  const TimedWaypoint& b = *it;
  const TimedWaypoint& a = *(it - 1);
  const double s = (t - a.t) / (b.t - a.t);
  return {t, a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), a.heading};
}

TimedPath time_parameterize(const PlanResult& result, const GridMap& map, double speed,
                            std::optional<double> final_heading) {
  if (!result.found || result.path.empty()) throw InvalidArgument("time_parameterize: empty path");
  if (!(std::isfinite(speed) && speed > 0.0)) throw InvalidArgument("time_parameterize: speed must be positive");

  TimedPath out;
  const auto& cells = result.path;
  out.waypoints.reserve(cells.size());
  double t = 0.0;
  double heading = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double x = map.worldX(cells[i]);
    const double y = map.worldY(cells[i]);
    if (i > 0) {
      const double px = map.worldX(cells[i - 1]);
      const double py = map.worldY(cells[i - 1]);
      t += std::hypot(x - px, y - py) / speed;
    }
    if (i + 1 < cells.size()) {
      heading = std::atan2(map.worldY(cells[i + 1]) - y, map.worldX(cells[i + 1]) - x);
    }
    out.waypoints.push_back({t, x, y, heading});
  }
  if (final_heading) out.waypoints.back().heading = wrapAngle(*final_heading);
  return out;
}

}  // namespace mmkit
