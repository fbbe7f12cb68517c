#include "mmkit/control.hpp"

#include "mmkit/errors.hpp"

#include <cmath>
#include <iomanip>
#include <string>

namespace mmkit {

PidGains PidGains::uniform(std::size_t joints, double kp, double kv, double ki, double integral_limit) {
  const auto n = static_cast<Eigen::Index>(joints);
  return {Eigen::VectorXd::Constant(n, kp), Eigen::VectorXd::Constant(n, kv), Eigen::VectorXd::Constant(n, ki),
          Eigen::VectorXd::Constant(n, integral_limit)};
}

void PidGains::validate(std::size_t joints) const {
  const auto n = static_cast<Eigen::Index>(joints);
  if (kp.size() != n || kv.size() != n || ki.size() != n || integral_limit.size() != n) {
    throw InvalidArgument("pid gains: expected " + std::to_string(joints) + " entries per gain");
  }
  if (!kp.allFinite() || !kv.allFinite() || !ki.allFinite() || !integral_limit.allFinite() ||
      (kp.array() < 0.0).any() || (kv.array() < 0.0).any() || (ki.array() < 0.0).any()) {
    throw InvalidArgument("pid gains must be finite and non-negative");
  }
  if (!(integral_limit.array() > 0.0).all()) throw InvalidArgument("pid integral limits must be positive");
}

JointTorque pid_torque(const PidGains& gains, const JointVector& q_err, const JointVector& v_err,
                       const JointVector& integral) {
  const auto n = static_cast<std::size_t>(q_err.size());
  gains.validate(n);
  if (static_cast<std::size_t>(v_err.size()) != n || static_cast<std::size_t>(integral.size()) != n) {
    throw InvalidArgument("pid_torque: error vectors differ in length");
  }
  const Eigen::ArrayXd clamped = integral.array().min(gains.integral_limit.array()).max(-gains.integral_limit.array());
  return (gains.kp.array() * q_err.array() + gains.kv.array() * v_err.array() + gains.ki.array() * clamped).matrix();
}

double TrackingLog::maxAbsError() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.error.cwiseAbs().maxCoeff());
  return m;
}

TrackingLog track(const DynamicModel& model, const JointTrajectory& traj, const PidGains& gains, double dt,
                  const TrackOptions& options) {
  if (!(dt > 0.0 && dt <= 0.01)) throw InvalidArgument("track: dt must lie in (0, 0.01]");
  if (traj.joints() != model.size()) throw InvalidArgument("track: trajectory and model differ in joint count");
  gains.validate(model.size());
  if (options.torque_limits &&
      (static_cast<std::size_t>(options.torque_limits->size()) != model.size() ||
       !(options.torque_limits->array() > 0.0).all())) {
    throw InvalidArgument("track: torque limits must be positive, one per joint");
  }

  const auto n = static_cast<Eigen::Index>(model.size());
  JointState state;
  if (options.initial) {
    state = *options.initial;
  } else {
    state.q = traj.sample(traj.startTime()).q;
    state.qdot = JointVector::Zero(n);
  }

  TrackingLog log;
  log.dt = dt;
  JointVector integral = JointVector::Zero(n);
  const auto steps = static_cast<long>(std::llround(traj.duration() / dt));
  log.samples.reserve(static_cast<std::size_t>(steps) + 1);

  for (long k = 0; k <= steps; ++k) {
    const double t = traj.startTime() + static_cast<double>(k) * dt;
    const auto ref = traj.sample(t);
    const JointVector q_err = ref.q - state.q;
    const JointVector v_err = ref.v - state.qdot;
    integral = (integral + q_err * dt).cwiseMin(gains.integral_limit).cwiseMax(-gains.integral_limit);

    JointTorque tau = pid_torque(gains, q_err, v_err, integral);
    if (options.gravity_compensation) tau += gravity_vector(model, state.q);
    if (options.torque_limits) {
      const JointTorque limited = tau.cwiseMin(*options.torque_limits).cwiseMax(-*options.torque_limits);
      if (limited != tau) ++log.saturation_events;
      tau = limited;
    }

    log.samples.push_back({t, ref.q, state.q, ref.v, state.qdot, q_err, tau});
    if (!tau.allFinite() || !state.q.allFinite() || !state.qdot.allFinite()) {
      throw DivergedError("track: non-finite state at t = " + std::to_string(t), std::move(log));
    }
    if (k == steps) break;

    try {
      state = integrate_step(model, state, tau, dt);
    } catch (const DegenerateError& e) {
      throw DivergedError(std::string("track: ") + e.what(), std::move(log));
    } catch (const InvalidArgument& e) {
      throw DivergedError(std::string("track: ") + e.what(), std::move(log));
    }
  }
  return log;
}

std::vector<std::string> tracking_csv_columns(std::size_t joints) {
  std::vector<std::string> cols{"t"};
  for (std::size_t i = 0; i < joints; ++i) {
    const std::string s = std::to_string(i);
    for (const char* name : {"q_ref_", "q_act_", "v_ref_", "v_act_", "tau_"}) cols.push_back(name + s);
  }
  return cols;
}

void write_tracking_csv(std::ostream& out, const TrackingLog& log) {
  const std::size_t n = log.samples.empty() ? 0 : static_cast<std::size_t>(log.samples.front().q_ref.size());
  const auto cols = tracking_csv_columns(n);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n' << std::setprecision(10);
  for (const auto& s : log.samples) {
    out << s.t;
    for (Eigen::Index i = 0; i < s.q_ref.size(); ++i) {
      out << ',' << s.q_ref[i] << ',' << s.q_act[i] << ',' << s.v_ref[i] << ',' << s.v_act[i] << ',' << s.tau[i];
    }
    out << '\n';
  }
}

}  // namespace mmkit
