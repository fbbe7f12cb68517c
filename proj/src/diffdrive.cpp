#include "mmkit/diffdrive.hpp"

#include "mmkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>

namespace mmkit {

void BaseParams::validate() const {
  const double vals[] = {wheel_radius, track_width, v_max, w_max, a_max};
  for (double v : vals) {
    if (!(std::isfinite(v) && v > 0.0)) throw InvalidArgument("base parameters must all be positive");
  }
}

void BaseGains::validate() const {
  const double vals[] = {kp_dist, ki_dist, kd_dist, kp_head, ki_head, kd_head};
  for (double v : vals) {
    if (!(std::isfinite(v) && v >= 0.0)) throw InvalidArgument("base gains must be non-negative");
  }
}

double normalize_angle(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::remainder(a, 2.0 * pi);
  return a <= -pi ? a + 2.0 * pi : a;
}

BaseState integrate_arc(const BaseState& s, double v, double w, double dt) {
  BaseState n = s;
  if (std::abs(w) > 1e-9) {
    n.x += (v / w) * (std::sin(s.theta + w * dt) - std::sin(s.theta));
    n.y -= (v / w) * (std::cos(s.theta + w * dt) - std::cos(s.theta));
  } else {
    n.x += v * dt * std::cos(s.theta);
    n.y += v * dt * std::sin(s.theta);
  }
  n.theta = normalize_angle(s.theta + w * dt);
  n.v = v;
  n.w = w;
  return n;
}

BaseState step(const BaseState& state, double v_cmd, double w_cmd, double dt, const BaseParams& params) {
  if (!(dt > 0.0 && dt <= 0.05)) throw InvalidArgument("diffdrive step: dt must lie in (0, 0.05]");
  if (!std::isfinite(v_cmd) || !std::isfinite(w_cmd)) throw InvalidArgument("diffdrive step: command is not finite");
  double v = std::clamp(v_cmd, -params.v_max, params.v_max);
  v = std::clamp(v, state.v - params.a_max * dt, state.v + params.a_max * dt);
  const double w = std::clamp(w_cmd, -params.w_max, params.w_max);
  return integrate_arc(state, v, w, dt);
}

WheelSpeeds wheel_speeds(double v, double w, const BaseParams& params) {
  const double half = 0.5 * params.track_width;
  return {(v - w * half) / params.wheel_radius, (v + w * half) / params.wheel_radius};
}

BodyTwist body_twist(const WheelSpeeds& wheels, const BaseParams& params) {
  const double r = params.wheel_radius;
  return {0.5 * r * (wheels.left + wheels.right), r * (wheels.right - wheels.left) / params.track_width};
}

double constraint_residual(const BaseState& prev, const BaseState& next, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("constraint_residual: dt must be positive");
  const double mid = prev.theta + 0.5 * next.w * dt;
  return std::abs((next.x - prev.x) * std::sin(mid) - (next.y - prev.y) * std::cos(mid));
}

PathFollower::PathFollower(TimedPath path, BaseGains gains, FollowerSettings settings)
    : path_(std::move(path)), gains_(gains), settings_(settings) {
  if (path_.waypoints.empty()) throw InvalidArgument("PathFollower: path is empty");
  gains_.validate();
}

void PathFollower::reset() {
  int_d_ = int_h_ = prev_d_ = prev_h_ = 0.0;
  primed_ = false;
}

FollowCommand PathFollower::command(const BaseState& state, double t_now, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("PathFollower: dt must be positive");
  const TimedWaypoint ref = path_.at(t_now);
  FollowCommand out;
  out.ref_x = ref.x;
  out.ref_y = ref.y;

  const double dx = ref.x - state.x;
  const double dy = ref.y - state.y;
  out.e_d = std::hypot(dx, dy);
  const double bearing_err = normalize_angle(std::atan2(dy, dx) - state.theta);
  const double heading_err = normalize_angle(ref.heading - state.theta);
  const bool ended = t_now >= path_.duration();
  const double switch_distance = ended ? settings_.goal_tolerance : settings_.near_distance;
  out.e_theta = out.e_d > switch_distance ? bearing_err : heading_err;

  if (ended && out.e_d <= settings_.goal_tolerance &&
      std::abs(heading_err) <= settings_.heading_tolerance) {
    out.at_goal = true;
    return out;
  }

  const double lim = settings_.integral_limit;
  int_d_ = std::clamp(int_d_ + out.e_d * dt, -lim, lim);
  int_h_ = std::clamp(int_h_ + out.e_theta * dt, -lim, lim);
  const double der_d = primed_ ? (out.e_d - prev_d_) / dt : 0.0;
  const double der_h = primed_ ? normalize_angle(out.e_theta - prev_h_) / dt : 0.0;
  prev_d_ = out.e_d;
  prev_h_ = out.e_theta;
  primed_ = true;

  const double dist_pid = gains_.kp_dist * out.e_d + gains_.ki_dist * int_d_ + gains_.kd_dist * der_d;
  out.v = std::max(0.0, dist_pid * std::cos(bearing_err));
  out.w = gains_.kp_head * out.e_theta + gains_.ki_head * int_h_ + gains_.kd_head * der_h;
  return out;
}

FollowRun simulate_follow(const BaseState& initial, const TimedPath& path, const BaseGains& gains,
                          const BaseParams& params, double dt, double timeout,
                          const FollowerSettings& settings) {
  params.validate();
  if (!(timeout > 0.0)) throw InvalidArgument("simulate_follow: timeout must be positive");
  PathFollower follower(path, gains, settings);
  FollowRun run;
  BaseState s = initial;
  s.theta = normalize_angle(s.theta);
  const auto steps = static_cast<long>(std::ceil(timeout / dt));
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const FollowCommand cmd = follower.command(s, t, dt);
    run.log.push_back({t, s.x, s.y, s.theta, s.v, s.w, cmd.ref_x, cmd.ref_y, cmd.e_d, cmd.e_theta});
    run.sim_time = t;
    if (cmd.at_goal) {
      run.at_goal = true;
      break;
    }
    if (k == steps) break;
    const BaseState next = step(s, cmd.v, cmd.w, dt, params);
    run.max_constraint_residual = std::max(run.max_constraint_residual, constraint_residual(s, next, dt));
    s = next;
  }
  run.final_state = s;
  return run;
}

double cross_track_error(const TimedPath& path, double x, double y) {
  if (path.waypoints.empty()) throw InvalidArgument("cross_track_error: empty path");
  const auto& w = path.waypoints;
  double best = std::hypot(x - w.front().x, y - w.front().y);
  for (std::size_t i = 1; i < w.size(); ++i) {
    const double ax = w[i - 1].x, ay = w[i - 1].y;
    const double bx = w[i].x - ax, by = w[i].y - ay;
    const double len2 = bx * bx + by * by;
    double s = len2 > 0.0 ? ((x - ax) * bx + (y - ay) * by) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    best = std::min(best, std::hypot(x - (ax + s * bx), y - (ay + s * by)));
  }
  return best;
}

void write_base_log_csv(std::ostream& out, const std::vector<BaseLogRow>& log) {
  out << "t,x,y,theta,v,w,ref_x,ref_y,e_d,e_theta\n" << std::setprecision(10);
  for (const auto& r : log) {
    out << r.t << ',' << r.x << ',' << r.y << ',' << r.theta << ',' << r.v << ',' << r.w << ','
        << r.ref_x << ',' << r.ref_y << ',' << r.e_d << ',' << r.e_theta << '\n';
  }
}

}  // namespace mmkit
