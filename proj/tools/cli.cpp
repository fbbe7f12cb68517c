#include "cli.hpp"

#include "mmkit/control.hpp"
#include "mmkit/diffdrive.hpp"
#include "mmkit/errors.hpp"
#include "mmkit/grid_planner.hpp"
#include "mmkit/ik.hpp"
#include "mmkit/io.hpp"
#include "mmkit/kinematics.hpp"
#include "mmkit/svg.hpp"
#include "mmkit/task.hpp"
#include "mmkit/traj.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace mmkit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

Eigen::VectorXd toVector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> toStd(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

JointVector jointArg(const std::vector<double>& v, const KinematicChain& chain, const std::string& name) {
  if (v.size() != chain.size()) {
    throw ConfigError("--" + name + ": expected " + std::to_string(chain.size()) + " values, got " +
                      std::to_string(v.size()));
  }
  return toVector(v);
}

void writeFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path.string() + ": cannot write file");
  out << text;
}

void ensureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError(dir.string() + ": cannot create directory: " + ec.message());
}

Cell worldCell(const GridMap& map, const std::vector<double>& xy, const std::string& name) {
  if (xy.size() < 2) throw ConfigError("--" + name + ": expected x,y");
  const auto cell = map.cellAt(xy[0], xy[1]);
  if (!cell) throw ConfigError("--" + name + ": point outside the map");
  return *cell;
}

std::string_view name(Heuristic h) { return h == Heuristic::Manhattan ? "manhattan" : "euclidean"; }
std::string_view name(Connectivity c) { return c == Connectivity::Four ? "four" : "eight"; }

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

json latencyJson(const std::vector<double>& ms) {
  double mean = 0.0;
  for (double x : ms) mean += x;
  if (!ms.empty()) mean /= static_cast<double>(ms.size());
  return {{"mean", mean},
          {"p50", percentile(ms, 50)},
          {"p90", percentile(ms, 90)},
          {"p99", percentile(ms, 99)},
          {"max", ms.empty() ? 0.0 : *std::max_element(ms.begin(), ms.end())}};
}

// ---------------------------------------------------------------------------

struct FkArgs {
  std::string robot;
  std::vector<double> q;
};

int cmdFk(const FkArgs& a, std::ostream& out) {
  const auto robot = load_robot(a.robot);
  const JointVector q = jointArg(a.q, robot.chain(), "q");
  const auto frames = forward_kinematics(robot.chain(), q);
  json jf = json::array();
  for (const auto& f : frames) jf.push_back(pose_to_json(f));
  out << dump_json({{"schema_version", kSchemaVersion},
                    {"q", toStd(q)},
                    {"end_effector", pose_to_json(frames.back())},
                    {"frames", jf}});
  return kExitOk;
}

struct IkArgs {
  std::string robot;
  std::vector<double> xyz;
  std::vector<double> rpy{0.0, 0.0, 0.0};
  std::vector<double> seed_q;
  std::string solver = "race";
  std::string mode = "threaded";
  double budget = 0.05;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
};

int cmdIk(const IkArgs& a, std::ostream& out) {
  const auto robot = load_robot(a.robot);
  IkRequest req;
  req.target = RigidTransform::fromXyzRpy(Eigen::Vector3d(a.xyz[0], a.xyz[1], a.xyz[2]),
                                          Eigen::Vector3d(a.rpy[0], a.rpy[1], a.rpy[2]));
  req.seed = a.seed_q.empty() ? robot.tuck : jointArg(a.seed_q, robot.chain(), "seed-q");
  req.time_budget = a.budget;
  req.iteration_budget = a.iterations;
  req.rng_seed = a.seed;
  IkResult r;
  if (a.solver == "pinv") {
    r = solve_pinv(robot.chain(), req);
  } else if (a.solver == "sqp") {
    r = solve_sqp_ss(robot.chain(), req);
  } else {
    r = solve_race(robot.chain(), req, a.mode == "sequential" ? RaceMode::Sequential : RaceMode::Threaded);
  }
  json j = to_json(r);
  j["schema_version"] = kSchemaVersion;
  out << dump_json(j);
  return r.status == IkStatus::Converged ? kExitOk : kExitDomainFailure;
}

struct PlanArmArgs {
  std::string robot;
  std::vector<double> start;
  std::vector<double> goal;
  std::optional<double> duration;
  double dt = 0.01;
  std::string out;
};

int cmdPlanArm(const PlanArmArgs& a, std::ostream& out) {
  const auto robot = load_robot(a.robot);
  const JointVector q0 = a.start.empty() ? robot.tuck : jointArg(a.start, robot.chain(), "start");
  const JointVector q1 = jointArg(a.goal, robot.chain(), "goal");
  const auto traj = plan_joint_trajectory(robot.chain(), q0, q1, a.duration, robot.velocity_limits,
                                          robot.acceleration_limits);
  if (a.out.empty()) {
    write_trajectory_csv(out, traj, a.dt);
    return kExitOk;
  }
  std::ofstream csv(a.out);
  if (!csv) throw ConfigError(a.out + ": cannot write file");
  write_trajectory_csv(csv, traj, a.dt);
  json peaks = json::array();
  for (const auto& s : traj.segments) {
    peaks.push_back({{"velocity", peak_abs_velocity(s)}, {"acceleration", peak_abs_acceleration(s)}});
  }
  out << dump_json({{"schema_version", kSchemaVersion}, {"duration", traj.duration()}, {"peaks", peaks}});
  return kExitOk;
}

struct TrackArmArgs {
  std::string robot;
  std::vector<double> start;
  std::vector<double> goal;
  double duration = 2.0;
  double dt = 1e-3;
  bool no_gravity_comp = false;
  std::string out;
  bool svg = false;
};

int cmdTrackArm(const TrackArmArgs& a, std::ostream& out) {
  const auto robot = load_robot(a.robot);
  const JointVector q0 = a.start.empty() ? robot.tuck : jointArg(a.start, robot.chain(), "start");
  const JointVector q1 = jointArg(a.goal, robot.chain(), "goal");
  const auto traj = plan_joint_trajectory(robot.chain(), q0, q1, a.duration, robot.velocity_limits,
                                          robot.acceleration_limits);
  TrackOptions opts;
  opts.gravity_compensation = !a.no_gravity_comp;
  opts.torque_limits = robot.effort_limits;

  TrackingLog log;
  bool diverged = false;
  try {
    log = track(robot.model, traj, robot.arm_gains, a.dt, opts);
  } catch (const DivergedError& e) {
    log = e.log();
    diverged = true;
  }
  ensureDir(a.out);
  std::ofstream csv(fs::path(a.out) / "tracking.csv");
  write_tracking_csv(csv, log);
  if (a.svg) {
    for (const auto& [tag, text] : svg_tracking_figures(log)) writeFile(fs::path(a.out) / ("tracking_" + tag + ".svg"), text);
  }
  Eigen::VectorXd max_err = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(robot.chain().size()));
  for (const auto& s : log.samples) max_err = max_err.cwiseMax(s.error.cwiseAbs());
  out << dump_json({{"schema_version", kSchemaVersion},
                    {"diverged", diverged},
                    {"duration", traj.duration()},
                    {"samples", log.samples.size()},
                    {"saturation_events", log.saturation_events},
                    {"max_abs_error", toStd(max_err)}});
  return diverged ? kExitDomainFailure : kExitOk;
}

struct PlanBaseArgs {
  std::string map;
  std::vector<double> start;
  std::vector<double> goal;
  std::string connectivity = "eight";
  std::string out;
  bool svg = false;
};

int cmdPlanBase(const PlanBaseArgs& a, std::ostream& out) {
  const auto map = load_map(a.map);
  const Cell s = worldCell(map, a.start, "start");
  const Cell g = worldCell(map, a.goal, "goal");
  const Connectivity conn = a.connectivity == "four" ? Connectivity::Four : Connectivity::Eight;

  json results = json::array();
  std::vector<GridOverlay> overlays;
  std::ostringstream table;
  table << "| heuristic | connectivity | found | nodes expanded | cost (cells) | cost (m) |\n"
        << "|---|---|---|---|---|---|\n";
  bool all_found = true;
  for (Heuristic h : {Heuristic::Manhattan, Heuristic::Euclidean}) {
    const auto r = astar(map, s, g, conn, h);
    all_found = all_found && r.found;
    json j = to_json(r, false);
    j["heuristic"] = name(h);
    j["connectivity"] = name(conn);
    j["cost_m"] = r.cost * map.resolution();
    results.push_back(j);
    table << "| " << name(h) << " | " << name(conn) << " | " << (r.found ? "yes" : "no") << " | "
          << r.nodes_expanded << " | " << r.cost << " | " << r.cost * map.resolution() << " |\n";
    if (!a.out.empty()) {
      ensureDir(a.out);
      std::ofstream csv(fs::path(a.out) / ("path_" + std::string(name(h)) + ".csv"));
      csv << "step,cell_x,cell_y,x,y\n";
      for (std::size_t i = 0; i < r.path.size(); ++i) {
        csv << i << ',' << r.path[i].x << ',' << r.path[i].y << ',' << map.worldX(r.path[i]) << ','
            << map.worldY(r.path[i]) << '\n';
      }
    }
    overlays.push_back({std::string(name(h)), r.path});
  }
  if (!a.out.empty()) {
    writeFile(fs::path(a.out) / "comparison.md", table.str());
    if (a.svg) writeFile(fs::path(a.out) / "paths.svg", svg_grid(map, overlays));
  }
  out << dump_json({{"schema_version", kSchemaVersion},
                    {"start", {s.x, s.y}},
                    {"goal", {g.x, g.y}},
                    {"results", results}});
  return all_found ? kExitOk : kExitDomainFailure;
}

struct FollowBaseArgs {
  std::string map;
  std::string robot;
  std::vector<double> start;
  std::vector<double> goal;
  double speed = 0.5;
  double dt = 0.01;
  double timeout = 120.0;
  std::string out;
  bool svg = false;
};

int cmdFollowBase(const FollowBaseArgs& a, std::ostream& out) {
  const auto map = load_map(a.map);
  const BaseParams params = a.robot.empty() ? BaseParams{} : load_robot(a.robot).base;
  if (a.start.size() < 2) throw ConfigError("--start: expected x,y[,theta]");
  const Cell s = worldCell(map, a.start, "start");
  const Cell g = worldCell(map, a.goal, "goal");
  const auto plan = astar(map, s, g, Connectivity::Eight, Heuristic::Euclidean);
  if (!plan.found) {
    out << dump_json({{"schema_version", kSchemaVersion}, {"found", false}});
    return kExitDomainFailure;
  }
  std::optional<double> heading;
  if (a.goal.size() >= 3) heading = a.goal[2];
  const auto path = time_parameterize(plan, map, a.speed, heading);
  BaseState init;
  init.x = a.start[0];
  init.y = a.start[1];
  init.theta = a.start.size() >= 3 ? a.start[2] : path.waypoints.front().heading;
  const auto run = simulate_follow(init, path, BaseGains{}, params, a.dt, a.timeout);

  double sum_sq = 0.0, max_ct = 0.0;
  for (const auto& row : run.log) {
    const double e = cross_track_error(path, row.x, row.y);
    sum_sq += e * e;
    max_ct = std::max(max_ct, e);
  }
  const double rms = run.log.empty() ? 0.0 : std::sqrt(sum_sq / static_cast<double>(run.log.size()));
  const auto& end = path.waypoints.back();
  const double final_err = std::hypot(run.final_state.x - end.x, run.final_state.y - end.y);

  if (!a.out.empty()) {
    ensureDir(a.out);
    std::ofstream csv(fs::path(a.out) / "base_log.csv");
    write_base_log_csv(csv, run.log);
    if (a.svg) writeFile(fs::path(a.out) / "base_run.svg", svg_base_run(path, run.log));
  }
  out << dump_json({{"schema_version", kSchemaVersion},
                    {"found", true},
                    {"at_goal", run.at_goal},
                    {"sim_time", run.sim_time},
                    {"path_duration", path.duration()},
                    {"rms_cross_track", rms},
                    {"max_cross_track", max_ct},
                    {"final_error", final_err},
                    {"max_constraint_residual", run.max_constraint_residual}});
  return run.at_goal ? kExitOk : kExitDomainFailure;
}

struct RunTaskArgs {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool svg = false;
};

int cmdRunTask(const RunTaskArgs& a, std::ostream& out) {
  Scenario sc = load_scenario(a.scenario);
  if (a.seed) sc.seed = *a.seed;
  const auto report = run_scenario(sc);
  ensureDir(a.out);
  write_task_outputs(report, sc, a.out, a.svg);
  json events = json::array();
  for (auto e : report.events) events.push_back(to_string(e));
  out << dump_json({{"schema_version", kSchemaVersion},
                    {"phase", to_string(report.final_state.phase)},
                    {"reason", to_string(report.final_state.reason)},
                    {"sim_time", report.sim_time},
                    {"events", events}});
  return report.final_state.phase == TaskPhase::Done ? kExitOk : kExitDomainFailure;
}

struct BenchIkArgs {
  std::string robot;
  std::size_t n = 500;
  double budget = 0.05;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmdBenchIk(const BenchIkArgs& a, std::ostream& out) {
  const auto robot = load_robot(a.robot);
  const auto& chain = robot.chain();
  std::mt19937_64 rng(a.seed);
  auto sample = [&] {
    JointVector q(static_cast<Eigen::Index>(chain.size()));
    for (std::size_t i = 0; i < chain.size(); ++i) {
      std::uniform_real_distribution<double> u(chain.limits()[i].min, chain.limits()[i].max);
      q[static_cast<Eigen::Index>(i)] = u(rng);
    }
    return q;
  };

  struct Stats {
    std::size_t ok = 0;
    std::size_t iterations = 0;
    std::vector<double> ms;
  };
  Stats pinv, sqp, race;
  std::size_t race_pinv_wins = 0, race_sqp_wins = 0;
  auto record = [&](Stats& s, const IkResult& r) {
    if (r.status == IkStatus::Converged) ++s.ok;
    s.iterations += r.iterations;
    s.ms.push_back(r.elapsed * 1e3);
  };
  for (std::size_t k = 0; k < a.n; ++k) {
    IkRequest req;
    req.target = end_effector(chain, sample());
    req.seed = sample();
    req.time_budget = a.budget;
    req.iteration_budget = a.iterations;
    req.rng_seed = a.seed + k;
    record(pinv, solve_pinv(chain, req));
    record(sqp, solve_sqp_ss(chain, req));
    const auto r = solve_race(chain, req);
    record(race, r);
    if (r.status == IkStatus::Converged) {
      ++(r.solver == IkSolverKind::Pseudoinverse ? race_pinv_wins : race_sqp_wins);
    }
  }
  const double n = a.n == 0 ? 1.0 : static_cast<double>(a.n);
  auto stats = [&](const Stats& s) {
    return json{{"success_rate", static_cast<double>(s.ok) / n},
                {"mean_iterations", static_cast<double>(s.iterations) / n},
                {"latency_ms", latencyJson(s.ms)}};
  };
  json race_json = stats(race);
  race_json["wins"] = {{"pseudoinverse", race_pinv_wins}, {"sqp_ss", race_sqp_wins}};
  const json report{{"schema_version", kSchemaVersion},
                    {"poses", a.n},
                    {"time_budget_s", a.budget},
                    {"iteration_budget", a.iterations},
                    {"seed", a.seed},
                    {"solvers", {{"pseudoinverse", stats(pinv)}, {"sqp_ss", stats(sqp)}, {"race", race_json}}}};
  if (!a.out.empty()) writeFile(a.out, dump_json(report));
  out << dump_json(report);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mobile manipulator kinematics, planning and simulation toolkit", "mmkit"};
  app.require_subcommand(1);
  app.fallthrough(false);

  FkArgs fk;
  auto* fk_cmd = app.add_subcommand("fk", "End-effector pose for a joint vector");
  fk_cmd->add_option("--robot", fk.robot, "Robot JSON")->required();
  fk_cmd->add_option("--q", fk.q, "Joint values, comma separated")->required()->delimiter(',');

  IkArgs ik;
  auto* ik_cmd = app.add_subcommand("ik", "Solve inverse kinematics for a target pose");
  ik_cmd->add_option("--robot", ik.robot, "Robot JSON")->required();
  ik_cmd->add_option("--xyz", ik.xyz, "Target position in the world frame")->required()->delimiter(',')->expected(3);
  ik_cmd->add_option("--rpy", ik.rpy, "Target roll,pitch,yaw")->delimiter(',')->expected(3);
  ik_cmd->add_option("--seed-q", ik.seed_q, "Seed configuration (default: tuck)")->delimiter(',');
  ik_cmd->add_option("--solver", ik.solver, "race, pinv or sqp")->check(CLI::IsMember({"race", "pinv", "sqp"}));
  ik_cmd->add_option("--mode", ik.mode, "Race mode")->check(CLI::IsMember({"threaded", "sequential"}));
  ik_cmd->add_option("--budget", ik.budget, "Time budget in seconds")->check(CLI::PositiveNumber);
  ik_cmd->add_option("--iterations", ik.iterations, "Per-solver iteration budget, 0 for none");
  ik_cmd->add_option("--seed", ik.seed, "RNG seed for restarts");

  PlanArmArgs pa;
  auto* pa_cmd = app.add_subcommand("plan-arm", "Quintic joint trajectory to CSV");
  pa_cmd->add_option("--robot", pa.robot, "Robot JSON")->required();
  pa_cmd->add_option("--start", pa.start, "Start configuration (default: tuck)")->delimiter(',');
  pa_cmd->add_option("--goal", pa.goal, "Goal configuration")->required()->delimiter(',');
  pa_cmd->add_option("--duration", pa.duration, "Duration in seconds")->check(CLI::PositiveNumber);
  pa_cmd->add_option("--dt", pa.dt, "Sample period")->check(CLI::PositiveNumber);
  pa_cmd->add_option("--out", pa.out, "CSV file (default: stdout)");

  TrackArmArgs ta;
  auto* ta_cmd = app.add_subcommand("track-arm", "Simulate PID tracking of a quintic trajectory");
  ta_cmd->add_option("--robot", ta.robot, "Robot JSON")->required();
  ta_cmd->add_option("--start", ta.start, "Start configuration (default: tuck)")->delimiter(',');
  ta_cmd->add_option("--goal", ta.goal, "Goal configuration")->required()->delimiter(',');
  ta_cmd->add_option("--duration", ta.duration, "Duration in seconds")->check(CLI::PositiveNumber);
  ta_cmd->add_option("--dt", ta.dt, "Control and integration period")->check(CLI::PositiveNumber);
  ta_cmd->add_flag("--no-gravity-comp", ta.no_gravity_comp, "Disable gravity feedforward");
  ta_cmd->add_option("--out", ta.out, "Output directory")->required();
  ta_cmd->add_flag("--svg", ta.svg, "Also write SVG plots");

  PlanBaseArgs pb;
  auto* pb_cmd = app.add_subcommand("plan-base", "A* on an occupancy map with both heuristics");
  pb_cmd->add_option("--map", pb.map, "Map file")->required();
  pb_cmd->add_option("--start", pb.start, "Start x,y in metres")->required()->delimiter(',');
  pb_cmd->add_option("--goal", pb.goal, "Goal x,y in metres")->required()->delimiter(',');
  pb_cmd->add_option("--connectivity", pb.connectivity, "four or eight")->check(CLI::IsMember({"four", "eight"}));
  pb_cmd->add_option("--out", pb.out, "Output directory for path CSVs and the comparison table");
  pb_cmd->add_flag("--svg", pb.svg, "Also write an SVG of both paths");

  FollowBaseArgs fb;
  auto* fb_cmd = app.add_subcommand("follow-base", "Plan a base path and simulate following it");
  fb_cmd->add_option("--map", fb.map, "Map file")->required();
  fb_cmd->add_option("--robot", fb.robot, "Robot JSON for base parameters");
  fb_cmd->add_option("--start", fb.start, "Start x,y[,theta]")->required()->delimiter(',');
  fb_cmd->add_option("--goal", fb.goal, "Goal x,y[,theta]")->required()->delimiter(',');
  fb_cmd->add_option("--speed", fb.speed, "Reference speed")->check(CLI::PositiveNumber);
  fb_cmd->add_option("--dt", fb.dt, "Integration period")->check(CLI::PositiveNumber);
  fb_cmd->add_option("--timeout", fb.timeout, "Simulated time limit")->check(CLI::PositiveNumber);
  fb_cmd->add_option("--out", fb.out, "Output directory");
  fb_cmd->add_flag("--svg", fb.svg, "Also write an SVG of the run");

  RunTaskArgs rt;
  auto* rt_cmd = app.add_subcommand("run-task", "Run the pick-and-place scenario");
  rt_cmd->add_option("--scenario", rt.scenario, "Scenario JSON")->required();
  rt_cmd->add_option("--out", rt.out, "Output directory")->required();
  rt_cmd->add_option("--seed", rt.seed, "Override the scenario seed");
  rt_cmd->add_flag("--svg", rt.svg, "Also write SVG figures");

  BenchIkArgs bi;
  auto* bi_cmd = app.add_subcommand("bench-ik", "Compare IK solvers on random reachable poses");
  bi_cmd->add_option("--robot", bi.robot, "Robot JSON")->required();
  bi_cmd->add_option("--n", bi.n, "Number of poses");
  bi_cmd->add_option("--budget", bi.budget, "Time budget per solve")->check(CLI::PositiveNumber);
  bi_cmd->add_option("--iterations", bi.iterations, "Per-solver iteration budget, 0 for none");
  bi_cmd->add_option("--seed", bi.seed, "RNG seed");
  bi_cmd->add_option("--out", bi.out, "Also write the JSON report to this file");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (fk_cmd->parsed()) return cmdFk(fk, out);
    if (ik_cmd->parsed()) return cmdIk(ik, out);
    if (pa_cmd->parsed()) return cmdPlanArm(pa, out);
    if (ta_cmd->parsed()) return cmdTrackArm(ta, out);
    if (pb_cmd->parsed()) return cmdPlanBase(pb, out);
    if (fb_cmd->parsed()) return cmdFollowBase(fb, out);
    if (rt_cmd->parsed()) return cmdRunTask(rt, out);
    if (bi_cmd->parsed()) return cmdBenchIk(bi, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainFailure;
  }
  err << app.help();
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mmkit::cli
