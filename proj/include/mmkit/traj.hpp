#pragma once

#include "mmkit/kinematics.hpp"

#include <array>
#include <optional>
#include <ostream>
#include <vector>

namespace mmkit {

/// Position, velocity and acceleration at both ends of one joint's motion.
struct BoundaryCondition {
  double q0 = 0.0, v0 = 0.0, a0 = 0.0;
  double qf = 0.0, vf = 0.0, af = 0.0;
  double t0 = 0.0, tf = 1.0;
};

/**
 * Fifth-order polynomial q(t) = sum_k coeffs[k] * (t - t0)^k on [t0, tf].
 *
 * Coefficients are stored relative to t0 so that long-running schedules do
 * not lose precision to large powers of absolute time. With t0 = 0 they are
 * the plain coefficients of q(t).
 */
struct QuinticSegment {
  std::array<double, 6> coeffs{};
  double t0 = 0.0;
  double tf = 1.0;

  double duration() const { return tf - t0; }
};

struct TrajectorySample {
  double q = 0.0;
  double v = 0.0;
  double a = 0.0;
  /// Set when the requested time was outside [t0, tf] and got clamped.
  bool clamped = false;
};

QuinticSegment quintic_coefficients(const BoundaryCondition& bc);

TrajectorySample evaluate(const QuinticSegment& seg, double t);

/// Third derivative; finite and continuous everywhere inside the segment.
double evaluate_jerk(const QuinticSegment& seg, double t);

/// max |v| and max |a| over [t0, tf]: dense sampling followed by root refinement.
double peak_abs_velocity(const QuinticSegment& seg);
double peak_abs_acceleration(const QuinticSegment& seg);

/// One synchronized segment per joint; every segment shares [t0, tf].
struct JointTrajectory {
  std::vector<QuinticSegment> segments;

  std::size_t joints() const { return segments.size(); }
  double startTime() const { return segments.front().t0; }
  double endTime() const { return segments.front().tf; }
  double duration() const { return endTime() - startTime(); }

  struct Sample {
    JointVector q, v, a;
  };
  Sample sample(double t) const;
};

/**
 * Rest-to-rest quintic per joint over a shared duration.
 *
 * Without an explicit duration the default is max_i |dq_i| / (0.5 vel_limit_i),
 * floored at kMinDefaultDuration. If any joint's peak speed or acceleration
 * exceeds its limit the whole motion is slowed down uniformly until every
 * limit holds. Throws JointLimitError when start or goal is outside the chain
 * limits.
 */
JointTrajectory plan_joint_trajectory(const KinematicChain& chain, const JointVector& q_start,
                                      const JointVector& q_goal, std::optional<double> duration,
                                      const Eigen::VectorXd& vel_limits,
                                      const Eigen::VectorXd& acc_limits, double t0 = 0.0);

inline constexpr double kMinDefaultDuration = 0.1;

/// `t,q0,v0,a0,q1,v1,a1,...` sampled every dt from start to end inclusive.
void write_trajectory_csv(std::ostream& out, const JointTrajectory& traj, double dt);

}  // namespace mmkit
