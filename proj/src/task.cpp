#include "mmkit/task.hpp"

#include "mmkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mmkit {

namespace {

struct Entry {
  TaskPhase from;
  TaskEvent event;
  TaskPhase to;
};

constexpr Entry kTable[] = {
    {TaskPhase::CheckStatus, TaskEvent::StatusOk, TaskPhase::PlanBasePath},
    {TaskPhase::PlanBasePath, TaskEvent::PathFound, TaskPhase::MoveBaseToPick},
    {TaskPhase::MoveBaseToPick, TaskEvent::BaseArrived, TaskPhase::PlanArmToGrasp},
    {TaskPhase::PlanArmToGrasp, TaskEvent::IkSolved, TaskPhase::ExecuteArmTrajectory},
    {TaskPhase::ExecuteArmTrajectory, TaskEvent::ArmDone, TaskPhase::CloseGripper},
    {TaskPhase::CloseGripper, TaskEvent::GraspSecured, TaskPhase::TuckArm},
    {TaskPhase::TuckArm, TaskEvent::ArmDone, TaskPhase::MoveBaseToPlace},
    {TaskPhase::MoveBaseToPlace, TaskEvent::BaseArrived, TaskPhase::ExtendArm},
    {TaskPhase::ExtendArm, TaskEvent::ArmDone, TaskPhase::OpenGripper},
    {TaskPhase::OpenGripper, TaskEvent::ReleaseDone, TaskPhase::Done},
};

RigidTransform basePose(const BaseState& s) {
  return RigidTransform::fromXyzRpy({s.x, s.y, 0.0}, {0.0, 0.0, s.theta});
}

// Sequential orchestration of the phases; owns the simulated world.
class Runner {
 public:
  explicit Runner(const Scenario& sc) : sc_(sc), base_(sc.start), q_(sc.robot.tuck) {
    base_.theta = normalize_angle(base_.theta);
    gripper_.opening = sc.robot.gripper.max_opening;
  }

  TaskReport run() {
    TaskState state;
    while (!state.terminal()) {
      const TaskEvent ev = act(state.phase);
      report_.events.push_back(ev);
      state = transition(state, ev, &report_.warnings);
    }
    report_.final_state = state;
    report_.sim_time = t_;
    report_.gripper = gripper_;
    report_.base_final = base_;
    report_.arm_final = q_;
    return std::move(report_);
  }

 private:
  TaskEvent act(TaskPhase phase) {
    switch (phase) {
      case TaskPhase::CheckStatus: return checkStatus();
      case TaskPhase::PlanBasePath: return planBase("to_pick", sc_.pick_base);
      case TaskPhase::MoveBaseToPick: return driveBase(sc_.pick_base);
      case TaskPhase::PlanArmToGrasp: return solveIk("grasp", sc_.pick_pose);
      case TaskPhase::ExecuteArmTrajectory: return moveArm(*ik_goal_);
      case TaskPhase::CloseGripper: return closeGripper();
      case TaskPhase::TuckArm: return moveArm(sc_.robot.tuck, "tuck");
      case TaskPhase::MoveBaseToPlace: {
        const TaskEvent planned = planBase("to_place", sc_.place_base);
        if (planned != TaskEvent::PathFound) return planned;
        return driveBase(sc_.place_base);
      }
      case TaskPhase::ExtendArm: {
        const TaskEvent solved = solveIk("place", sc_.place_pose);
        if (solved != TaskEvent::IkSolved) return solved;
        return moveArm(*ik_goal_);
      }
      case TaskPhase::OpenGripper: return openGripper();
      case TaskPhase::Done:
      case TaskPhase::Failed: break;
    }
    throw std::logic_error("terminal phase has no action");
  }

  TaskEvent checkStatus() {
    // Scenario::validate already rejected anything that would make this fail.
    return TaskEvent::StatusOk;
  }

  TaskEvent planBase(const std::string& name, const BaseGoal& goal) {
    BaseLeg leg;
    leg.name = name;
    leg.t_start = t_;
    const auto start = sc_.map.cellAt(base_.x, base_.y);
    const auto target = sc_.map.cellAt(goal.x, goal.y);
    if (start && target && !sc_.map.occupied(*start) && !sc_.map.occupied(*target)) {
      leg.plan = astar(sc_.map, *start, *target, sc_.connectivity, sc_.heuristic);
    }
    const bool found = leg.plan.found;
    if (found) {
      TimedPath path = time_parameterize(leg.plan, sc_.map, sc_.base_speed, goal.theta);
      // The plan starts at the nearest cell; start the reference where the base actually is.
      path.waypoints.front().x = base_.x;
      path.waypoints.front().y = base_.y;
      if (path.waypoints.size() == 1) {
        path.waypoints.push_back(path.waypoints.front());
        path.waypoints.back().x = goal.x;
        path.waypoints.back().y = goal.y;
        path.waypoints.back().t = std::max(std::hypot(goal.x - base_.x, goal.y - base_.y) / sc_.base_speed, 1e-3);
      } else {
        path.waypoints.back().x = goal.x;
        path.waypoints.back().y = goal.y;
      }
      leg.path = std::move(path);
    }
    report_.base_legs.push_back(std::move(leg));
    return found ? TaskEvent::PathFound : TaskEvent::PathFailed;
  }

  TaskEvent driveBase(const BaseGoal& goal) {
    BaseLeg& leg = report_.base_legs.back();
    FollowerSettings settings;
    settings.goal_tolerance = sc_.arrive_distance;
    settings.heading_tolerance = sc_.arrive_heading;
    leg.run = simulate_follow(base_, *leg.path, sc_.base_gains, sc_.robot.base, sc_.base_dt, sc_.base_timeout,
                              settings);
    for (auto& row : leg.run->log) row.t += t_;
    t_ += leg.run->sim_time;
    base_ = leg.run->final_state;
    base_.v = base_.w = 0.0;

    const bool arrived = std::hypot(goal.x - base_.x, goal.y - base_.y) <= sc_.arrive_distance &&
                         std::abs(normalize_angle(goal.theta - base_.theta)) <= sc_.arrive_heading;
    return arrived ? TaskEvent::BaseArrived : TaskEvent::BaseTimeout;
  }

  TaskEvent solveIk(const std::string& name, const RigidTransform& world_target) {
    ArmPhase phase;
    phase.name = name;
    phase.t_start = t_;
    IkRequest req;
    req.target = basePose(base_).inverse() * world_target;
    req.seed = q_;
    req.time_budget = sc_.ik_time_budget;
    req.iteration_budget = sc_.ik_iteration_budget;
    req.rng_seed = sc_.seed;
    phase.ik = solve_race(sc_.robot.chain(), req, RaceMode::Sequential);
    // Wall-clock time is not part of the simulated record.
    phase.ik->elapsed = 0.0;
    const bool ok = phase.ik->status == IkStatus::Converged;
    if (ok) ik_goal_ = *phase.ik->solution;
    report_.arm_phases.push_back(std::move(phase));
    return ok ? TaskEvent::IkSolved : TaskEvent::IkFailed;
  }

  TaskEvent moveArm(const JointVector& goal, const std::string& name = "") {
    if (!name.empty()) {
      ArmPhase phase;
      phase.name = name;
      phase.t_start = t_;
      report_.arm_phases.push_back(std::move(phase));
    }
    ArmPhase& phase = report_.arm_phases.back();
    const RobotDescription& robot = sc_.robot;
    const JointVector start = robot.chain().clampToLimits(q_);
    phase.trajectory = plan_joint_trajectory(robot.chain(), start, goal, std::nullopt, robot.velocity_limits,
                                             robot.acceleration_limits, 0.0);
    TrackOptions opts;
    opts.gravity_compensation = true;
    opts.torque_limits = robot.effort_limits;
    opts.initial = JointState{q_, JointVector::Zero(q_.size())};
    try {
      phase.tracking = track(robot.model, *phase.trajectory, robot.arm_gains, sc_.arm_dt, opts);
    } catch (const DivergedError& e) {
      phase.tracking = e.log();
      t_ += phase.trajectory->duration();
      return TaskEvent::ArmDiverged;
    }
    for (auto& s : phase.tracking->samples) s.t += t_;
    t_ += phase.trajectory->duration();
    q_ = phase.tracking->samples.back().q_act;
    return TaskEvent::ArmDone;
  }

  RigidTransform endEffectorWorld() const { return basePose(base_) * end_effector(sc_.robot.chain(), q_); }

  TaskEvent closeGripper() {
    const double miss = (endEffectorWorld().translation - sc_.pick_pose.translation).norm();
    const bool between = miss <= sc_.grasp_capture_distance;
    gripper_ = gripper_command(gripper_, 0.0, sc_.grasp_effort, sc_.object, between, sc_.robot.gripper);
    return gripper_.holding ? TaskEvent::GraspSecured : TaskEvent::GraspSlipped;
  }

  TaskEvent openGripper() {
    report_.object_final = endEffectorWorld().translation;
    gripper_ = gripper_command(gripper_, sc_.robot.gripper.max_opening, 0.0, sc_.object, gripper_.holding,
                               sc_.robot.gripper);
    return TaskEvent::ReleaseDone;
  }

  const Scenario& sc_;
  TaskReport report_;
  BaseState base_;
  JointVector q_;
  std::optional<JointVector> ik_goal_;
  GripperState gripper_;
  double t_ = 0.0;
};

}  // namespace

std::string_view to_string(TaskPhase phase) {
  switch (phase) {
    case TaskPhase::CheckStatus: return "CheckStatus";
    case TaskPhase::PlanBasePath: return "PlanBasePath";
    case TaskPhase::MoveBaseToPick: return "MoveBaseToPick";
    case TaskPhase::PlanArmToGrasp: return "PlanArmToGrasp";
    case TaskPhase::ExecuteArmTrajectory: return "ExecuteArmTrajectory";
    case TaskPhase::CloseGripper: return "CloseGripper";
    case TaskPhase::TuckArm: return "TuckArm";
    case TaskPhase::MoveBaseToPlace: return "MoveBaseToPlace";
    case TaskPhase::ExtendArm: return "ExtendArm";
    case TaskPhase::OpenGripper: return "OpenGripper";
    case TaskPhase::Done: return "Done";
    case TaskPhase::Failed: return "Failed";
  }
  return "Unknown";
}

std::string_view to_string(TaskEvent event) {
  switch (event) {
    case TaskEvent::StatusOk: return "StatusOk";
    case TaskEvent::PathFound: return "PathFound";
    case TaskEvent::PathFailed: return "PathFailed";
    case TaskEvent::BaseArrived: return "BaseArrived";
    case TaskEvent::BaseTimeout: return "BaseTimeout";
    case TaskEvent::IkSolved: return "IkSolved";
    case TaskEvent::IkFailed: return "IkFailed";
    case TaskEvent::ArmDone: return "ArmDone";
    case TaskEvent::ArmDiverged: return "ArmDiverged";
    case TaskEvent::GraspSecured: return "GraspSecured";
    case TaskEvent::GraspSlipped: return "GraspSlipped";
    case TaskEvent::ReleaseDone: return "ReleaseDone";
  }
  return "Unknown";
}

std::string_view to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::None: return "none";
    case FailureReason::PathFailed: return "path_failed";
    case FailureReason::BaseTimeout: return "base_timeout";
    case FailureReason::IkFailed: return "ik_failed";
    case FailureReason::ArmDiverged: return "arm_diverged";
    case FailureReason::GraspSlipped: return "grasp_slipped";
  }
  return "unknown";
}

FailureReason failure_reason(TaskEvent event) {
  switch (event) {
    case TaskEvent::PathFailed: return FailureReason::PathFailed;
    case TaskEvent::BaseTimeout: return FailureReason::BaseTimeout;
    case TaskEvent::IkFailed: return FailureReason::IkFailed;
    case TaskEvent::ArmDiverged: return FailureReason::ArmDiverged;
    case TaskEvent::GraspSlipped: return FailureReason::GraspSlipped;
    default: return FailureReason::None;
  }
}

bool has_transition(const TaskState& state, TaskEvent event) {
  if (state.terminal()) return false;
  if (failure_reason(event) != FailureReason::None) return true;
  return std::any_of(std::begin(kTable), std::end(kTable),
                     [&](const Entry& e) { return e.from == state.phase && e.event == event; });
}

TaskState transition(const TaskState& state, TaskEvent event, std::vector<std::string>* warnings) {
  if (state.terminal()) return state;
  if (const FailureReason reason = failure_reason(event); reason != FailureReason::None) {
    return TaskState::failed(reason);
  }
  for (const Entry& e : kTable) {
    if (e.from == state.phase && e.event == event) return {e.to, FailureReason::None};
  }
  if (warnings) {
    warnings->push_back("ignored event " + std::string(to_string(event)) + " in state " +
                        std::string(to_string(state.phase)));
  }
  return state;
}

bool trace_follows_table(const std::vector<TaskEvent>& events) {
  TaskState s;
  for (TaskEvent e : events) {
    if (!has_transition(s, e)) return false;
    s = transition(s, e);
  }
  return true;
}

GripperState gripper_command(const GripperState& g, double target_opening, double max_effort,
                             const ObjectSpec& object, bool object_between, const GripperParams& params) {
  if (!(target_opening >= 0.0 && target_opening <= params.max_opening)) {
    throw InvalidArgument("gripper_command: target opening outside [0, max_opening]");
  }
  if (!(max_effort >= 0.0)) throw InvalidArgument("gripper_command: max_effort must be >= 0");
  GripperState out = g;
  const double target = target_opening;
  const double effort = max_effort;
  if (object_between && target < object.width) {
    out.opening = object.width;
    out.applied_effort = effort;
    out.holding = effort >= object.required_effort;
  } else {
    out.opening = target;
    out.applied_effort = 0.0;
    out.holding = false;
  }
  return out;
}

void Scenario::validate() const {
  robot.validate();
  if (!(object.width > 0.0 && object.width < robot.gripper.max_opening)) {
    throw ConfigError("scenario: object.width must be positive and below the gripper's max opening");
  }
  if (!(object.required_effort >= 0.0)) throw ConfigError("scenario: object.required_effort must be >= 0");
  const auto inMap = [&](double x, double y, const char* what) {
    if (!map.cellAt(x, y)) throw ConfigError(std::string("scenario: ") + what + " lies outside the map");
  };
  inMap(start.x, start.y, "start");
  inMap(pick_base.x, pick_base.y, "pick_base");
  inMap(place_base.x, place_base.y, "place_base");
  inMap(pick_pose.translation.x(), pick_pose.translation.y(), "pick_pose");
  inMap(place_pose.translation.x(), place_pose.translation.y(), "place_pose");
  if (map.occupied(*map.cellAt(start.x, start.y))) throw ConfigError("scenario: start cell is occupied");
  if (!pick_pose.isValid(1e-6) || !place_pose.isValid(1e-6)) {
    throw ConfigError("scenario: pick_pose and place_pose must be rigid transforms");
  }
  if (!(base_speed > 0.0) || !(base_dt > 0.0 && base_dt <= 0.05) || !(arm_dt > 0.0 && arm_dt <= 0.01) ||
      !(base_timeout > 0.0) || !(ik_time_budget > 0.0)) {
    throw ConfigError("scenario: timing parameters out of range");
  }
  base_gains.validate();
  if (!robot.chain().withinLimits(robot.tuck)) throw ConfigError("scenario: tuck pose outside joint limits");
}

TaskReport run_scenario(const Scenario& scenario) {
  scenario.validate();
  return Runner(scenario).run();
}

}  // namespace mmkit
