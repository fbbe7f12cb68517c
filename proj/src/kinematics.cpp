#include "mmkit/kinematics.hpp"

#include "mmkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mmkit {

namespace {

void requireFinite(const DHRow& row) {
  if (!std::isfinite(row.d) || !std::isfinite(row.theta_offset) || !std::isfinite(row.a) ||
      !std::isfinite(row.alpha)) {
    throw InvalidArgument("DH row has a non-finite parameter");
  }
}

void requireMatchingLength(const KinematicChain& chain, const JointVector& q, const char* what) {
  if (static_cast<std::size_t>(q.size()) != chain.size()) {
    throw InvalidArgument(std::string(what) + ": expected " + std::to_string(chain.size()) +
                          " joint values, got " + std::to_string(q.size()));
  }
  if (!q.allFinite()) {
    throw InvalidArgument(std::string(what) + ": joint vector is not finite");
  }
}

}  // namespace

RigidTransform RigidTransform::fromXyzRpy(const Eigen::Vector3d& xyz, const Eigen::Vector3d& rpy) {
  RigidTransform t;
  t.rotation = (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
                Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
                   .toRotationMatrix();
  t.translation = xyz;
  return t;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  RigidTransform out;
  out.rotation = rotation * rhs.rotation;
  out.translation = rotation * rhs.translation + translation;
  return out;
}

Eigen::Vector3d RigidTransform::operator*(const Eigen::Vector3d& point) const {
  return rotation * point + translation;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Eigen::Vector3d RigidTransform::rpy() const {
  const Eigen::Matrix3d& r = rotation;
  const double pitch = std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0)));
  double roll = 0.0;
  double yaw = 0.0;
  if (std::abs(std::cos(pitch)) > 1e-9) {
    roll = std::atan2(r(2, 1), r(2, 2));
    yaw = std::atan2(r(1, 0), r(0, 0));
  } else {
    // Gimbal lock: fold everything into yaw.
    yaw = std::atan2(-r(0, 1), r(1, 1));
  }
  return {roll, pitch, yaw};
}

bool RigidTransform::isValid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  return ortho < tol && std::abs(rotation.determinant() - 1.0) < tol;
}

KinematicChain::KinematicChain(std::vector<DHRow> rows, std::vector<JointLimit> limits,
                               RigidTransform base_frame)
    : rows_(std::move(rows)), limits_(std::move(limits)), base_(std::move(base_frame)) {
  if (rows_.empty()) throw InvalidArgument("kinematic chain needs at least one DH row");
  if (limits_.size() != rows_.size()) {
    throw InvalidArgument("kinematic chain: " + std::to_string(limits_.size()) +
                          " limits for " + std::to_string(rows_.size()) + " joints");
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    requireFinite(rows_[i]);
    const auto& lim = limits_[i];
    if (!std::isfinite(lim.min) || !std::isfinite(lim.max) || !(lim.min < lim.max)) {
      throw InvalidArgument("joint " + std::to_string(i) + ": limits must satisfy min < max");
    }
  }
  if (!base_.isValid(1e-9)) throw InvalidArgument("base frame is not a rigid transform");
}

bool KinematicChain::withinLimits(const JointVector& q, double tol) const {
  if (static_cast<std::size_t>(q.size()) != size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!(q[i] >= limits_[i].min - tol && q[i] <= limits_[i].max + tol)) return false;
  }
  return true;
}

JointVector KinematicChain::clampToLimits(const JointVector& q) const {
  JointVector out = q;
  for (std::size_t i = 0; i < size(); ++i) out[i] = std::clamp(q[i], limits_[i].min, limits_[i].max);
  return out;
}

JointVector KinematicChain::lowerLimits() const {
  JointVector v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = limits_[i].min;
  return v;
}

JointVector KinematicChain::upperLimits() const {
  JointVector v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = limits_[i].max;
  return v;
}

double KinematicChain::maxReach() const {
  double reach = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& row = rows_[i];
    double d = std::abs(row.d);
    if (row.kind == JointKind::Prismatic) {
      d = std::max(std::abs(row.d + limits_[i].min), std::abs(row.d + limits_[i].max));
    }
    reach += std::abs(row.a) + d;
  }
  return reach;
}

RigidTransform dh_transform(const DHRow& row, double joint_value) {
  requireFinite(row);
  if (!std::isfinite(joint_value)) throw InvalidArgument("dh_transform: joint value is not finite");

  double theta = row.theta_offset;
  double d = row.d;
  if (row.kind == JointKind::Revolute) {
    theta += joint_value;
  } else {
    d += joint_value;
  }
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);

  RigidTransform t;
  t.rotation << ct, -st * ca, st * sa,
                st, ct * ca, -ct * sa,
                0.0, sa, ca;
  t.translation << row.a * ct, row.a * st, d;
  return t;
}

std::vector<RigidTransform> forward_kinematics(const KinematicChain& chain, const JointVector& q) {
  requireMatchingLength(chain, q, "forward_kinematics");
  std::vector<RigidTransform> frames;
  frames.reserve(chain.size());
  RigidTransform acc = chain.baseFrame();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    acc = acc * dh_transform(chain.rows()[i], q[i]);
    frames.push_back(acc);
  }
  return frames;
}

RigidTransform end_effector(const KinematicChain& chain, const JointVector& q) {
  return forward_kinematics(chain, q).back();
}

Jacobian jacobian(const KinematicChain& chain, const JointVector& q) {
  const auto frames = forward_kinematics(chain, q);
  const Eigen::Vector3d tip = frames.back().translation;

  Jacobian J(6, static_cast<Eigen::Index>(chain.size()));
  for (std::size_t i = 0; i < chain.size(); ++i) {
    // Joint i moves about / along z of the frame preceding it.
    const RigidTransform& prev = (i == 0) ? chain.baseFrame() : frames[i - 1];
    const Eigen::Vector3d z = prev.rotation.col(2);
    const auto col = static_cast<Eigen::Index>(i);
    if (chain.rows()[i].kind == JointKind::Revolute) {
      J.block<3, 1>(0, col) = z.cross(tip - prev.translation);
      J.block<3, 1>(3, col) = z;
    } else {
      J.block<3, 1>(0, col) = z;
      J.block<3, 1>(3, col).setZero();
    }
  }
  return J;
}

SpatialVelocity end_effector_velocity(const KinematicChain& chain, const JointVector& q,
                                      const JointVector& qdot) {
  requireMatchingLength(chain, qdot, "end_effector_velocity");
  const Eigen::Matrix<double, 6, 1> twist = jacobian(chain, q) * qdot;
  return {twist.head<3>(), twist.tail<3>()};
}

Eigen::MatrixXd damped_pseudoinverse(const Eigen::MatrixXd& J, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw InvalidArgument("damped_pseudoinverse: lambda must be finite and >= 0");
  }
  if (!J.allFinite()) throw InvalidArgument("damped_pseudoinverse: matrix is not finite");

  const Eigen::Index rows = J.rows();
  Eigen::MatrixXd gram = J * J.transpose();
  if (lambda == 0.0) {
    if (J.cols() < rows) throw SingularityError("damped_pseudoinverse: J has fewer columns than rows");
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(J).singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-10 * std::max(1.0, sv(0))) {
      throw SingularityError("damped_pseudoinverse: J is rank deficient, supply lambda > 0");
    }
  } else {
    gram.diagonal().array() += lambda * lambda;
  }
  // gram is symmetric positive definite here, so (gram^-1 J)^T = J^T gram^-1.
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  return ldlt.solve(J).transpose();
}

double manipulability(const Eigen::MatrixXd& J) {
  const double det = (J * J.transpose()).determinant();
  return det > 0.0 ? std::sqrt(det) : 0.0;
}

}  // namespace mmkit
