#pragma once

#include "mmkit/control.hpp"
#include "mmkit/diffdrive.hpp"
#include "mmkit/grid_planner.hpp"
#include "mmkit/ik.hpp"
#include "mmkit/robot.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmkit {

enum class TaskPhase {
  CheckStatus,
  PlanBasePath,
  MoveBaseToPick,
  PlanArmToGrasp,
  ExecuteArmTrajectory,
  CloseGripper,
  TuckArm,
  MoveBaseToPlace,
  ExtendArm,
  OpenGripper,
  Done,
  Failed,
};

enum class FailureReason { None, PathFailed, BaseTimeout, IkFailed, ArmDiverged, GraspSlipped };

struct TaskState {
  TaskPhase phase = TaskPhase::CheckStatus;
  FailureReason reason = FailureReason::None;

  bool terminal() const { return phase == TaskPhase::Done || phase == TaskPhase::Failed; }
  friend bool operator==(const TaskState&, const TaskState&) = default;

  static TaskState failed(FailureReason r) { return {TaskPhase::Failed, r}; }
};

enum class TaskEvent {
  StatusOk,
  PathFound,
  PathFailed,
  BaseArrived,
  BaseTimeout,
  IkSolved,
  IkFailed,
  ArmDone,
  ArmDiverged,
  GraspSecured,
  GraspSlipped,
  ReleaseDone,
};

inline constexpr TaskPhase kAllPhases[] = {
    TaskPhase::CheckStatus,  TaskPhase::PlanBasePath, TaskPhase::MoveBaseToPick, TaskPhase::PlanArmToGrasp,
    TaskPhase::ExecuteArmTrajectory, TaskPhase::CloseGripper, TaskPhase::TuckArm, TaskPhase::MoveBaseToPlace,
    TaskPhase::ExtendArm,    TaskPhase::OpenGripper,  TaskPhase::Done,           TaskPhase::Failed};

inline constexpr TaskEvent kAllEvents[] = {
    TaskEvent::StatusOk,  TaskEvent::PathFound,   TaskEvent::PathFailed,   TaskEvent::BaseArrived,
    TaskEvent::BaseTimeout, TaskEvent::IkSolved,  TaskEvent::IkFailed,     TaskEvent::ArmDone,
    TaskEvent::ArmDiverged, TaskEvent::GraspSecured, TaskEvent::GraspSlipped, TaskEvent::ReleaseDone};

/// Events the happy path fires, in order.
inline constexpr TaskEvent kHappyPath[] = {
    TaskEvent::StatusOk, TaskEvent::PathFound,    TaskEvent::BaseArrived, TaskEvent::IkSolved,
    TaskEvent::ArmDone,  TaskEvent::GraspSecured, TaskEvent::ArmDone,     TaskEvent::BaseArrived,
    TaskEvent::ArmDone,  TaskEvent::ReleaseDone};

std::string_view to_string(TaskPhase phase);
std::string_view to_string(TaskEvent event);
std::string_view to_string(FailureReason reason);

/// Failure reason an event carries, None for non-failure events.
FailureReason failure_reason(TaskEvent event);

/**
 * Pick-and-place transition table. Failure events move any live state to
 * Failed(reason); Done and Failed absorb everything; an event with no table
 * entry leaves the state unchanged and, when `warnings` is given, appends a
 * message to it.
 */
TaskState transition(const TaskState& state, TaskEvent event, std::vector<std::string>* warnings = nullptr);

/// True when (state, event) is a listed entry (including the failure rules).
bool has_transition(const TaskState& state, TaskEvent event);

struct ObjectSpec {
  double width = 0.05;           // m
  double required_effort = 30.0;  // N
};

struct GripperState {
  double opening = 0.0;
  double applied_effort = 0.0;
  bool holding = false;
};

/**
 * Moves the fingers toward target_opening. With the object between the
 * fingers and a target narrower than it, the fingers stop at the object width
 * and squeeze with max_effort; the object is held iff that reaches the
 * required effort.
 */
GripperState gripper_command(const GripperState& g, double target_opening, double max_effort,
                             const ObjectSpec& object, bool object_between, const GripperParams& params);

struct BaseGoal {
  double x = 0.0, y = 0.0, theta = 0.0;
};

struct Scenario {
  Scenario(RobotDescription robot_, GridMap map_) : robot(std::move(robot_)), map(std::move(map_)) {}

  std::string name = "scenario";
  RobotDescription robot;
  GridMap map;
  BaseState start;
  BaseGoal pick_base;
  BaseGoal place_base;
  RigidTransform pick_pose;
  RigidTransform place_pose;
  ObjectSpec object;
  BaseGains base_gains;
  double base_speed = 0.5;
  double base_dt = 0.01;
  double arm_dt = 1e-3;
  double base_timeout = 120.0;
  double arrive_distance = 0.05;
  double arrive_heading = 0.1;
  double grasp_effort = 60.0;
  /// End-effector distance from the pick pose within which the object counts as between the fingers.
  double grasp_capture_distance = 0.01;
  double ik_time_budget = 5.0;
  std::size_t ik_iteration_budget = 4000;
  Connectivity connectivity = Connectivity::Eight;
  Heuristic heuristic = Heuristic::Euclidean;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BaseLeg {
  std::string name;
  double t_start = 0.0;
  PlanResult plan;
  std::optional<TimedPath> path;
  std::optional<FollowRun> run;
};

struct ArmPhase {
  std::string name;
  double t_start = 0.0;
  std::optional<IkResult> ik;
  std::optional<JointTrajectory> trajectory;
  std::optional<TrackingLog> tracking;
};

struct TaskReport {
  TaskState final_state;
  std::vector<TaskEvent> events;
  std::vector<std::string> warnings;
  double sim_time = 0.0;
  std::vector<BaseLeg> base_legs;
  std::vector<ArmPhase> arm_phases;
  GripperState gripper;
  BaseState base_final;
  JointVector arm_final;
  /// World position of the object after release, when it was placed.
  std::optional<Eigen::Vector3d> object_final;
};

/// Runs the state machine to a terminal state. Failures end up in the report, never as exceptions.
TaskReport run_scenario(const Scenario& scenario);

/// True when `events` replayed from CheckStatus only uses table entries.
bool trace_follows_table(const std::vector<TaskEvent>& events);

}  // namespace mmkit
