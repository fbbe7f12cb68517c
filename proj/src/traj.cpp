#include "mmkit/traj.hpp"

#include "mmkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <string>

namespace mmkit {

namespace {

constexpr int kPeakSamples = 1000;

double polyval(const std::array<double, 6>& c, double s) {
  return c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
}

double velocityAt(const std::array<double, 6>& c, double s) {
  return c[1] + s * (2 * c[2] + s * (3 * c[3] + s * (4 * c[4] + s * 5 * c[5])));
}

double accelerationAt(const std::array<double, 6>& c, double s) {
  return 2 * c[2] + s * (6 * c[3] + s * (12 * c[4] + s * 20 * c[5]));
}

double jerkAt(const std::array<double, 6>& c, double s) {
  return 6 * c[3] + s * (24 * c[4] + s * 60 * c[5]);
}

// Max |f| on [0, T] where df is the derivative of f. Extrema inside the
// interval are bracketed by sign changes of df on the sample grid and then
// bisected down to machine precision.
double peakAbs(const std::function<double(double)>& f, const std::function<double(double)>& df,
               double T) {
  double best = std::max(std::abs(f(0.0)), std::abs(f(T)));
  double prev_s = 0.0;
  double prev_d = df(0.0);
  for (int k = 1; k <= kPeakSamples; ++k) {
    const double s = T * static_cast<double>(k) / kPeakSamples;
    const double d = df(s);
    best = std::max(best, std::abs(f(s)));
    if ((prev_d < 0.0 && d > 0.0) || (prev_d > 0.0 && d < 0.0)) {
      double lo = prev_s, hi = s, dlo = prev_d;
      for (int it = 0; it < 100 && hi - lo > 1e-15 * std::max(1.0, T); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double dm = df(mid);
        if ((dm < 0.0) == (dlo < 0.0)) {
          lo = mid;
          dlo = dm;
        } else {
          hi = mid;
        }
      }
      best = std::max(best, std::abs(f(0.5 * (lo + hi))));
    }
    prev_s = s;
    prev_d = d;
  }
  return best;
}

}  // namespace

QuinticSegment quintic_coefficients(const BoundaryCondition& bc) {
  const double vals[] = {bc.q0, bc.v0, bc.a0, bc.qf, bc.vf, bc.af, bc.t0, bc.tf};
  for (double v : vals) {
    if (!std::isfinite(v)) throw InvalidArgument("quintic_coefficients: boundary condition is not finite");
  }
  if (!(bc.tf > bc.t0)) throw InvalidArgument("quintic_coefficients: tf must exceed t0");
  const double T = bc.tf - bc.t0;
  if (T < 1e-6) throw DegenerateError("quintic_coefficients: duration below 1e-6 s");

  // Boundary system in local time: t0 -> 0, tf -> T.
  Eigen::Matrix<double, 6, 6> A;
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
  A << 1, 0, 0, 0, 0, 0,
       0, 1, 0, 0, 0, 0,
       0, 0, 2, 0, 0, 0,
       1, T, T2, T3, T4, T5,
       0, 1, 2 * T, 3 * T2, 4 * T3, 5 * T4,
       0, 0, 2, 6 * T, 12 * T2, 20 * T3;
  Eigen::Matrix<double, 6, 1> b;
  b << bc.q0, bc.v0, bc.a0, bc.qf, bc.vf, bc.af;
  const Eigen::Matrix<double, 6, 1> x = A.partialPivLu().solve(b);

  QuinticSegment seg;
  for (int k = 0; k < 6; ++k) seg.coeffs[static_cast<std::size_t>(k)] = x(k);
  seg.t0 = bc.t0;
  seg.tf = bc.tf;
  return seg;
}

TrajectorySample evaluate(const QuinticSegment& seg, double t) {
  TrajectorySample out;
  double tc = t;
  if (t < seg.t0 || t > seg.tf) {
    tc = std::clamp(t, seg.t0, seg.tf);
    out.clamped = true;
  }
  const double s = tc - seg.t0;
  out.q = polyval(seg.coeffs, s);
  out.v = velocityAt(seg.coeffs, s);
  out.a = accelerationAt(seg.coeffs, s);
  return out;
}

double evaluate_jerk(const QuinticSegment& seg, double t) {
  return jerkAt(seg.coeffs, std::clamp(t, seg.t0, seg.tf) - seg.t0);
}

double peak_abs_velocity(const QuinticSegment& seg) {
  const auto& c = seg.coeffs;
  return peakAbs([&](double s) { return velocityAt(c, s); }, [&](double s) { return accelerationAt(c, s); },
                 seg.duration());
}

double peak_abs_acceleration(const QuinticSegment& seg) {
  const auto& c = seg.coeffs;
  return peakAbs([&](double s) { return accelerationAt(c, s); }, [&](double s) { return jerkAt(c, s); },
                 seg.duration());
}

JointTrajectory::Sample JointTrajectory::sample(double t) const {
  const auto n = static_cast<Eigen::Index>(segments.size());
  Sample s{JointVector(n), JointVector(n), JointVector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto e = evaluate(segments[static_cast<std::size_t>(i)], t);
    s.q[i] = e.q;
    s.v[i] = e.v;
    s.a[i] = e.a;
  }
  return s;
}

JointTrajectory plan_joint_trajectory(const KinematicChain& chain, const JointVector& q_start,
                                      const JointVector& q_goal, std::optional<double> duration,
                                      const Eigen::VectorXd& vel_limits,
                                      const Eigen::VectorXd& acc_limits, double t0) {
  const auto n = static_cast<Eigen::Index>(chain.size());
  if (q_start.size() != n || q_goal.size() != n || vel_limits.size() != n || acc_limits.size() != n) {
    throw InvalidArgument("plan_joint_trajectory: every vector needs one entry per joint");
  }
  if (!q_start.allFinite() || !q_goal.allFinite()) {
    throw InvalidArgument("plan_joint_trajectory: start or goal is not finite");
  }
  if (!(vel_limits.array() > 0.0).all() || !(acc_limits.array() > 0.0).all() ||
      !vel_limits.allFinite() || !acc_limits.allFinite()) {
    throw InvalidArgument("plan_joint_trajectory: velocity and acceleration limits must be positive");
  }
  if (!chain.withinLimits(q_start)) throw JointLimitError("plan_joint_trajectory: start is outside joint limits");
  if (!chain.withinLimits(q_goal)) throw JointLimitError("plan_joint_trajectory: goal is outside joint limits");

  double T = 0.0;
  if (duration) {
    if (!(std::isfinite(*duration) && *duration > 0.0)) {
      throw InvalidArgument("plan_joint_trajectory: duration must be positive");
    }
    T = *duration;
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      T = std::max(T, std::abs(q_goal[i] - q_start[i]) / (0.5 * vel_limits[i]));
    }
    T = std::max(T, kMinDefaultDuration);
  }

  const auto build = [&](double total) {
    JointTrajectory traj;
    traj.segments.reserve(chain.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      traj.segments.push_back(
          quintic_coefficients({q_start[i], 0.0, 0.0, q_goal[i], 0.0, 0.0, t0, t0 + total}));
    }
    return traj;
  };

  JointTrajectory traj = build(T);
  // Peak speed scales as 1/s and peak acceleration as 1/s^2 under time
  // dilation by s, so one rescale suffices; the loop only absorbs roundoff.
  for (int pass = 0; pass < 4; ++pass) {
    double scale = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& seg = traj.segments[static_cast<std::size_t>(i)];
      scale = std::max(scale, peak_abs_velocity(seg) / vel_limits[i]);
      scale = std::max(scale, std::sqrt(peak_abs_acceleration(seg) / acc_limits[i]));
    }
    if (scale <= 1.0 + 1e-12) break;
    T *= scale;
    traj = build(T);
  }
  return traj;
}

void write_trajectory_csv(std::ostream& out, const JointTrajectory& traj, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("write_trajectory_csv: dt must be positive");
  out << "t";
  for (std::size_t i = 0; i < traj.joints(); ++i) out << ",q" << i << ",v" << i << ",a" << i;
  out << '\n';
  out << std::setprecision(10);
  const auto steps = static_cast<long>(std::ceil(traj.duration() / dt - 1e-9));
  for (long k = 0; k <= steps; ++k) {
    const double t = std::min(traj.startTime() + static_cast<double>(k) * dt, traj.endTime());
    out << t;
    for (const auto& seg : traj.segments) {
      const auto s = evaluate(seg, t);
      out << ',' << s.q << ',' << s.v << ',' << s.a;
    }
    out << '\n';
  }
}

}  // namespace mmkit
