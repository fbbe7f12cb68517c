#pragma once

#include "mmkit/grid_planner.hpp"

#include <ostream>
#include <vector>

namespace mmkit {

struct BaseParams {
  double wheel_radius = 0.0625;
  double track_width = 0.37;
  double v_max = 1.0;
  double w_max = 1.5;
  double a_max = 1.0;

  void validate() const;
};

/// Planar pose plus the twist applied over the last step.
struct BaseState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // (-pi, pi]
  double v = 0.0;
  double w = 0.0;
};

struct BaseGains {
  double kp_dist = 1.5, ki_dist = 0.0, kd_dist = 0.0;
  double kp_head = 4.0, ki_head = 0.0, kd_head = 0.5;

  void validate() const;
};

/// Wraps into (-pi, pi].
double normalize_angle(double a);

/// Exact constant-twist motion over dt, no saturation.
BaseState integrate_arc(const BaseState& state, double v, double w, double dt);

/**
 * Saturates (v, w) to the platform limits, rate-limits v by a_max, then
 * integrates the unicycle exactly along the resulting arc. dt must lie in
 * (0, 0.05].
 */
BaseState step(const BaseState& state, double v_cmd, double w_cmd, double dt, const BaseParams& params);

struct WheelSpeeds {
  double left = 0.0;   // rad/s
  double right = 0.0;  // rad/s
};

WheelSpeeds wheel_speeds(double v, double w, const BaseParams& params);

struct BodyTwist {
  double v = 0.0;
  double w = 0.0;
};

BodyTwist body_twist(const WheelSpeeds& wheels, const BaseParams& params);

/// |dx sin(theta_mid) - dy cos(theta_mid)| with theta_mid the heading halfway along the step's arc.
double constraint_residual(const BaseState& prev, const BaseState& next, double dt);

struct FollowerSettings {
  /// Below this distance the heading error tracks the reference heading instead of the bearing.
  double near_distance = 0.05;
  double integral_limit = 1.0;
  /// at_goal once the reference has ended and the base is this close.
  double goal_tolerance = 0.01;
  double heading_tolerance = 0.05;
};

struct FollowCommand {
  double v = 0.0;
  double w = 0.0;
  bool at_goal = false;
  double ref_x = 0.0;
  double ref_y = 0.0;
  double e_d = 0.0;
  double e_theta = 0.0;
};

/**
 * PID tracking of a time-parameterized path.
 *
 * The distance loop drives e_d (Euclidean distance to the reference point)
 * and is projected onto the current heading through cos(bearing error), so
 * the base never drives away from a reference behind it. The heading loop
 * chases the bearing to the reference, or the reference heading once within
 * near_distance. Once the path time has run out the reference stays at the
 * final waypoint until the base is within goal tolerance.
 */
class PathFollower {
 public:
  PathFollower(TimedPath path, BaseGains gains, FollowerSettings settings = {});

  FollowCommand command(const BaseState& state, double t_now, double dt);
  void reset();

  const TimedPath& path() const { return path_; }

 private:
  TimedPath path_;
  BaseGains gains_;
  FollowerSettings settings_;
  double int_d_ = 0.0, int_h_ = 0.0;
  double prev_d_ = 0.0, prev_h_ = 0.0;
  bool primed_ = false;
};

struct BaseLogRow {
  double t, x, y, theta, v, w, ref_x, ref_y, e_d, e_theta;
};

struct FollowRun {
  std::vector<BaseLogRow> log;
  BaseState final_state;
  bool at_goal = false;
  double sim_time = 0.0;
  double max_constraint_residual = 0.0;
};

/// Closed loop of PathFollower and step() until at_goal or `timeout` simulated seconds.
FollowRun simulate_follow(const BaseState& initial, const TimedPath& path, const BaseGains& gains,
                          const BaseParams& params, double dt, double timeout,
                          const FollowerSettings& settings = {});

/// Distance from (x, y) to the path polyline.
double cross_track_error(const TimedPath& path, double x, double y);

/// Header: t,x,y,theta,v,w,ref_x,ref_y,e_d,e_theta
void write_base_log_csv(std::ostream& out, const std::vector<BaseLogRow>& log);

}  // namespace mmkit
