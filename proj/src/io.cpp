#include "mmkit/io.hpp"

#include "mmkit/errors.hpp"
#include "mmkit/svg.hpp"

#include <fstream>
#include <numbers>
#include <sstream>

namespace mmkit {

namespace {

using nlohmann::json;

// Field accessors that report "<source>: <path>: <problem>".
class Reader {
 public:
  Reader(const json& node, std::string source, std::string path = "")
      : node_(node), source_(std::move(source)), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ConfigError(source_ + ": " + join(field) + ": " + what);
  }

  bool has(const std::string& key) const { return node_.is_object() && node_.contains(key); }

  const json& at(const std::string& key) const {
    if (!node_.is_object()) fail("", "expected an object");
    if (!node_.contains(key)) fail(key, "missing required field");
    return node_.at(key);
  }

  Reader child(const std::string& key) const { return {at(key), source_, join(key)}; }
  Reader element(const json& node, const std::string& key, std::size_t i) const {
    return {node, source_, join(key) + "[" + std::to_string(i) + "]"};
  }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::string string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::size_t> expected = std::nullopt) const {
    const json& v = at(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    if (expected && v.size() != *expected) {
      fail(key, "expected " + std::to_string(*expected) + " entries, got " + std::to_string(v.size()));
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(key + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  Eigen::VectorXd vector(const std::string& key, std::size_t expected) const {
    const auto v = numbers(key, expected);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  const std::string& source() const { return source_; }
  std::string join(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  const json& node_;
  std::string source_;
  std::string path_;
};

void requireSchema(const Reader& r) {
  if (!r.has("schema_version")) r.fail("schema_version", "missing required field");
  const double v = r.number("schema_version");
  if (v != kSchemaVersion) {
    r.fail("schema_version", "unsupported version " + std::to_string(static_cast<long>(v)) + " (expected " +
                                 std::to_string(kSchemaVersion) + ")");
  }
}

RigidTransform poseFrom(const Reader& r) {
  const auto xyz = r.numbers("xyz", 3);
  const auto rpy = r.has("rpy") ? r.numbers("rpy", 3) : std::vector<double>{0.0, 0.0, 0.0};
  return RigidTransform::fromXyzRpy({xyz[0], xyz[1], xyz[2]}, {rpy[0], rpy[1], rpy[2]});
}

BaseGoal goalFrom(const Reader& r) { return {r.number("x"), r.number("y"), r.number("theta", 0.0)}; }

std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json stateJson(const TaskState& s) {
  return {{"phase", to_string(s.phase)}, {"reason", to_string(s.reason)}};
}

json vectorJson(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void writeText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path.string() + ": cannot write file");
  out << text;
}

}  // namespace

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
  }
}

json read_json_file(const std::filesystem::path& path) { return parse_json_text(readFile(path), path.string()); }

void RobotDescription::validate() const {
  const std::size_t n = model.size();
  const auto sized = [n](const Eigen::VectorXd& v) { return static_cast<std::size_t>(v.size()) == n; };
  if (!sized(velocity_limits) || !sized(acceleration_limits) || !sized(effort_limits) || !sized(tuck)) {
    throw ConfigError("robot: per-joint vectors must have one entry per joint");
  }
  if (!(velocity_limits.array() > 0.0).all() || !(acceleration_limits.array() > 0.0).all() ||
      !(effort_limits.array() > 0.0).all()) {
    throw ConfigError("robot: velocity, acceleration and effort limits must be positive");
  }
  arm_gains.validate(n);
  base.validate();
  if (!(gripper.max_opening > 0.0) || !(gripper.max_effort >= 0.0)) throw ConfigError("robot: invalid gripper");
}

RobotDescription parse_robot(const json& doc, const std::string& source) {
  const Reader r(doc, source);
  requireSchema(r);

  const json& dh = r.at("dh");
  if (!dh.is_array() || dh.empty()) r.fail("dh", "expected a non-empty array");
  const std::size_t n = dh.size();

  std::vector<DHRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const Reader row = r.element(dh[i], "dh", i);
    DHRow out;
    out.d = row.number("d");
    out.theta_offset = row.number("theta_offset");
    out.a = row.number("a");
    out.alpha = row.number("alpha");
    const std::string kind = row.has("kind") ? row.string("kind") : "revolute";
    if (kind == "revolute") {
      out.kind = JointKind::Revolute;
    } else if (kind == "prismatic") {
      out.kind = JointKind::Prismatic;
    } else {
      row.fail("kind", "expected \"revolute\" or \"prismatic\"");
    }
    rows.push_back(out);
  }

  const json& lim = r.at("limits");
  if (!lim.is_array() || lim.size() != n) r.fail("limits", "expected " + std::to_string(n) + " [min, max] pairs");
  std::vector<JointLimit> limits;
  for (std::size_t i = 0; i < n; ++i) {
    const json& p = lim[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      r.fail("limits[" + std::to_string(i) + "]", "expected [min, max]");
    }
    limits.push_back({p[0].get<double>(), p[1].get<double>()});
    if (!(limits.back().min < limits.back().max)) r.fail("limits[" + std::to_string(i) + "]", "min must be < max");
  }

  const RigidTransform base = r.has("base_frame") ? poseFrom(r.child("base_frame")) : RigidTransform::identity();

  const json& inertial = r.at("inertial");
  if (!inertial.is_array() || inertial.size() != n) {
    r.fail("inertial", "expected one entry per joint (" + std::to_string(n) + ")");
  }
  std::vector<LinkInertia> inertias;
  for (std::size_t i = 0; i < n; ++i) {
    const Reader link = r.element(inertial[i], "inertial", i);
    LinkInertia li;
    li.mass = link.number("mass");
    const auto com = link.numbers("com", 3);
    li.com = {com[0], com[1], com[2]};
    const auto in = link.numbers("inertia", 6);  // ixx iyy izz ixy ixz iyz
    li.inertia << in[0], in[3], in[4],
                  in[3], in[1], in[5],
                  in[4], in[5], in[2];
    try {
      li.validate();
    } catch (const InvalidArgument& e) {
      link.fail("", e.what());
    }
    inertias.push_back(li);
  }

  Eigen::Vector3d gravity(0.0, 0.0, -9.81);
  if (r.has("gravity")) {
    const auto g = r.numbers("gravity", 3);
    gravity = {g[0], g[1], g[2]};
  }

  std::optional<KinematicChain> chain;
  try {
    chain.emplace(rows, limits, base);
  } catch (const InvalidArgument& e) {
    r.fail("dh", e.what());
  }
  const auto nn = static_cast<Eigen::Index>(n);

  RobotDescription robot{
      r.has("name") ? r.string("name") : std::string("robot"),
      DynamicModel(*chain, inertias, gravity),
      r.has("velocity_limits") ? r.vector("velocity_limits", n) : Eigen::VectorXd::Constant(nn, 1.0),
      r.has("acceleration_limits") ? r.vector("acceleration_limits", n) : Eigen::VectorXd::Constant(nn, 2.0),
      r.has("effort_limits") ? r.vector("effort_limits", n) : Eigen::VectorXd::Constant(nn, 1000.0),
      r.has("tuck") ? r.vector("tuck", n) : chain->clampToLimits(Eigen::VectorXd::Zero(nn)),
      PidGains::uniform(n, 100.0, 20.0, 0.0),
      BaseParams{},
      GripperParams{},
  };

  if (r.has("arm_gains")) {
    const Reader g = r.child("arm_gains");
    robot.arm_gains.kp = g.vector("kp", n);
    robot.arm_gains.kv = g.vector("kv", n);
    robot.arm_gains.ki = g.has("ki") ? g.vector("ki", n) : Eigen::VectorXd::Zero(nn);
    robot.arm_gains.integral_limit =
        g.has("integral_limit") ? g.vector("integral_limit", n) : Eigen::VectorXd::Constant(nn, 2.0);
  }
  if (r.has("base")) {
    const Reader b = r.child("base");
    robot.base.wheel_radius = b.number("wheel_radius", robot.base.wheel_radius);
    robot.base.track_width = b.number("track_width", robot.base.track_width);
    robot.base.v_max = b.number("v_max", robot.base.v_max);
    robot.base.w_max = b.number("w_max", robot.base.w_max);
    robot.base.a_max = b.number("a_max", robot.base.a_max);
  }
  if (r.has("gripper")) {
    const Reader g = r.child("gripper");
    robot.gripper.max_opening = g.number("max_opening", robot.gripper.max_opening);
    robot.gripper.max_effort = g.number("max_effort", robot.gripper.max_effort);
  }

  try {
    robot.validate();
  } catch (const std::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!robot.chain().withinLimits(robot.tuck)) r.fail("tuck", "outside joint limits");
  return robot;
}

RobotDescription load_robot(const std::filesystem::path& path) {
  return parse_robot(read_json_file(path), path.string());
}

GridMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  return parse_map(in, path.string());
}

Scenario load_scenario(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  const Reader r(doc, path.string());
  requireSchema(r);
  const auto dir = path.parent_path();

  Scenario sc(load_robot(dir / r.string("robot")), load_map(dir / r.string("map")));
  sc.name = r.has("name") ? r.string("name") : path.stem().string();
  const Reader start = r.child("start");
  sc.start.x = start.number("x");
  sc.start.y = start.number("y");
  sc.start.theta = start.number("theta", 0.0);
  sc.pick_base = goalFrom(r.child("pick_base"));
  sc.place_base = goalFrom(r.child("place_base"));
  sc.pick_pose = poseFrom(r.child("pick_pose"));
  sc.place_pose = poseFrom(r.child("place_pose"));
  const Reader obj = r.child("object");
  sc.object.width = obj.number("width");
  sc.object.required_effort = obj.number("required_effort");

  if (r.has("base_gains")) {
    const Reader g = r.child("base_gains");
    sc.base_gains.kp_dist = g.number("kp_dist", sc.base_gains.kp_dist);
    sc.base_gains.ki_dist = g.number("ki_dist", sc.base_gains.ki_dist);
    sc.base_gains.kd_dist = g.number("kd_dist", sc.base_gains.kd_dist);
    sc.base_gains.kp_head = g.number("kp_head", sc.base_gains.kp_head);
    sc.base_gains.ki_head = g.number("ki_head", sc.base_gains.ki_head);
    sc.base_gains.kd_head = g.number("kd_head", sc.base_gains.kd_head);
  }
  sc.base_speed = r.number("base_speed", sc.base_speed);
  sc.grasp_effort = r.number("grasp_effort", sc.robot.gripper.max_effort);
  if (r.has("seed")) {
    const json& s = r.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      r.fail("seed", "expected a non-negative integer");
    }
    sc.seed = s.get<std::uint64_t>();
  }
  if (r.has("planner")) {
    const Reader p = r.child("planner");
    if (p.has("connectivity")) {
      const auto c = p.string("connectivity");
      if (c != "four" && c != "eight") p.fail("connectivity", "expected \"four\" or \"eight\"");
      sc.connectivity = c == "four" ? Connectivity::Four : Connectivity::Eight;
    }
    if (p.has("heuristic")) {
      const auto h = p.string("heuristic");
      if (h != "manhattan" && h != "euclidean") p.fail("heuristic", "expected \"manhattan\" or \"euclidean\"");
      sc.heuristic = h == "manhattan" ? Heuristic::Manhattan : Heuristic::Euclidean;
    }
  }
  if (r.has("ik")) {
    const Reader ik = r.child("ik");
    sc.ik_time_budget = ik.number("time_budget", sc.ik_time_budget);
    if (ik.has("iteration_budget")) {
      const double it = ik.number("iteration_budget");
      if (!(it >= 0.0)) ik.fail("iteration_budget", "expected a non-negative integer");
      sc.ik_iteration_budget = static_cast<std::size_t>(it);
    }
  }
  sc.base_timeout = r.number("base_timeout", sc.base_timeout);

  try {
    sc.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return sc;
}

json pose_to_json(const RigidTransform& t) {
  const Eigen::Vector3d rpy = t.rpy();
  return {{"xyz", {t.translation.x(), t.translation.y(), t.translation.z()}}, {"rpy", {rpy.x(), rpy.y(), rpy.z()}}};
}

RigidTransform pose_from_json(const json& j, const std::string& field) { return poseFrom(Reader(j, field)); }

json to_json(const IkResult& r) {
  json j{{"schema_version", kSchemaVersion},
         {"status", to_string(r.status)},
         {"solver", to_string(r.solver)},
         {"iterations", r.iterations},
         {"restarts", r.restarts},
         {"elapsed", r.elapsed},
         {"final_ss", std::isfinite(r.final_ss) ? json(r.final_ss) : json(nullptr)}};
  j["solution"] = r.solution ? vectorJson(*r.solution) : json(nullptr);
  return j;
}

json to_json(const PlanResult& r, bool include_path) {
  json j{{"found", r.found}, {"cost", r.cost}, {"nodes_expanded", r.nodes_expanded}};
  if (include_path) {
    json cells = json::array();
    for (const Cell& c : r.path) cells.push_back({c.x, c.y});
    j["path"] = std::move(cells);
  }
  return j;
}

json to_json(const TaskReport& r) {
  json events = json::array();
  for (TaskEvent e : r.events) events.push_back(to_string(e));

  json legs = json::array();
  for (const BaseLeg& leg : r.base_legs) {
    json l{{"name", leg.name}, {"t_start", leg.t_start}, {"plan", to_json(leg.plan, false)}};
    if (leg.path) l["reference_duration"] = leg.path->duration();
    if (leg.run) {
      l["sim_time"] = leg.run->sim_time;
      l["at_goal"] = leg.run->at_goal;
      l["max_constraint_residual"] = leg.run->max_constraint_residual;
      l["final"] = {{"x", leg.run->final_state.x}, {"y", leg.run->final_state.y},
                    {"theta", leg.run->final_state.theta}};
    }
    legs.push_back(std::move(l));
  }

  json arms = json::array();
  for (const ArmPhase& phase : r.arm_phases) {
    json a{{"name", phase.name}, {"t_start", phase.t_start}};
    if (phase.ik) a["ik"] = to_json(*phase.ik);
    if (phase.trajectory) a["duration"] = phase.trajectory->duration();
    if (phase.tracking) {
      a["max_abs_error"] = phase.tracking->maxAbsError();
      a["saturation_events"] = phase.tracking->saturation_events;
      a["samples"] = phase.tracking->samples.size();
    }
    arms.push_back(std::move(a));
  }

  json j{{"schema_version", kSchemaVersion},
         {"final_state", stateJson(r.final_state)},
         {"events", std::move(events)},
         {"warnings", r.warnings},
         {"sim_time", r.sim_time},
         {"base_legs", std::move(legs)},
         {"arm_phases", std::move(arms)},
         {"gripper",
          {{"opening", r.gripper.opening}, {"applied_effort", r.gripper.applied_effort}, {"holding", r.gripper.holding}}},
         {"base_final", {{"x", r.base_final.x}, {"y", r.base_final.y}, {"theta", r.base_final.theta}}},
         {"arm_final", vectorJson(r.arm_final)}};
  j["object_final"] = r.object_final ? json{r.object_final->x(), r.object_final->y(), r.object_final->z()}
                                     : json(nullptr);
  return j;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void write_task_outputs(const TaskReport& report, const Scenario& scenario, const std::filesystem::path& dir,
                        bool svg) {
  std::filesystem::create_directories(dir);
  writeText(dir / "report.json", dump_json(to_json(report)));

  std::vector<GridOverlay> overlays;
  for (const BaseLeg& leg : report.base_legs) {
    if (leg.run) {
      std::ostringstream csv;
      write_base_log_csv(csv, leg.run->log);
      writeText(dir / ("base_" + leg.name + ".csv"), csv.str());
      if (svg && leg.path) {
        writeText(dir / ("base_" + leg.name + ".svg"), svg_base_run(*leg.path, leg.run->log));
      }
    }
    if (leg.plan.found) overlays.push_back({leg.name, leg.plan.path});
  }
  for (const ArmPhase& phase : report.arm_phases) {
    if (!phase.tracking) continue;
    std::ostringstream csv;
    write_tracking_csv(csv, *phase.tracking);
    writeText(dir / ("arm_" + phase.name + ".csv"), csv.str());
    if (svg) {
      for (const auto& [suffix, text] : svg_tracking_figures(*phase.tracking)) {
        writeText(dir / ("arm_" + phase.name + "_" + suffix + ".svg"), text);
      }
    }
  }
  if (svg) writeText(dir / "map_paths.svg", svg_grid(scenario.map, overlays));
}

}  // namespace mmkit
