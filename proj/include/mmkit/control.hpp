#pragma once

#include "mmkit/dynamics.hpp"
#include "mmkit/traj.hpp"

#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace mmkit {

struct PidGains {
  Eigen::VectorXd kp;
  Eigen::VectorXd kv;
  Eigen::VectorXd ki;
  Eigen::VectorXd integral_limit;

  /// Same gains on every joint.
  static PidGains uniform(std::size_t joints, double kp, double kv, double ki, double integral_limit = 2.0);
  void validate(std::size_t joints) const;
};

/// kp * q_err + kv * v_err + ki * clamp(integral, +-integral_limit), per joint.
JointTorque pid_torque(const PidGains& gains, const JointVector& q_err, const JointVector& v_err,
                       const JointVector& integral);

struct TrackingSample {
  double t = 0.0;
  JointVector q_ref, q_act, v_ref, v_act, error, tau;
};

struct TrackingLog {
  std::vector<TrackingSample> samples;
  double dt = 0.0;
  /// Steps where at least one joint torque hit its limit.
  std::size_t saturation_events = 0;

  /// max over samples and joints of |q_ref - q_act|.
  double maxAbsError() const;
};

/// Thrown when the closed loop produces a non-finite state; carries the log up to that point.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& what, TrackingLog log) : std::runtime_error(what), log_(std::move(log)) {}
  const TrackingLog& log() const { return log_; }

 private:
  TrackingLog log_;
};

struct TrackOptions {
  bool gravity_compensation = true;
  /// Symmetric per-joint torque limits; unlimited when absent.
  std::optional<Eigen::VectorXd> torque_limits;
  /// Initial state, defaults to the trajectory start at rest.
  std::optional<JointState> initial;
};

/**
 * Closes the PID loop around the RK4 integrator at the control rate dt
 * (0 < dt <= 0.01). A sample is logged before every step and once after the
 * final one.
 */
TrackingLog track(const DynamicModel& model, const JointTrajectory& traj, const PidGains& gains, double dt,
                  const TrackOptions& options = {});

/// Header: t, then q_ref_i,q_act_i,v_ref_i,v_act_i,tau_i for each joint i.
void write_tracking_csv(std::ostream& out, const TrackingLog& log);

/// Column names of write_tracking_csv for n joints.
std::vector<std::string> tracking_csv_columns(std::size_t joints);

}  // namespace mmkit
