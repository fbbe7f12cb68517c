#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace mmkit {

using JointVector = Eigen::VectorXd;
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

enum class JointKind { Revolute, Prismatic };

/**
 * One row of a standard (distal) Denavit-Hartenberg table.
 *
 * The link transform is RotZ(theta) * TransZ(d) * TransX(a) * RotX(alpha).
 * For a revolute joint the joint variable is added to theta_offset, for a
 * prismatic joint it is added to d. Every row is a joint; a fixed dummy
 * frame is a row whose joint is kept at zero.
 */
struct DHRow {
  double d = 0.0;
  double theta_offset = 0.0;
  double a = 0.0;
  double alpha = 0.0;
  JointKind kind = JointKind::Revolute;
};

struct JointLimit {
  double min = 0.0;
  double max = 0.0;
};

/// Rotation plus translation. Rotation is kept orthonormal with det +1.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform fromXyzRpy(const Eigen::Vector3d& xyz, const Eigen::Vector3d& rpy);

  RigidTransform operator*(const RigidTransform& rhs) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& point) const;
  RigidTransform inverse() const;
  Eigen::Matrix4d matrix() const;
  /// Roll, pitch, yaw (fixed-axis XYZ, R = Rz(yaw) Ry(pitch) Rx(roll)).
  Eigen::Vector3d rpy() const;

  /// Max-norm of R^T R - I and |det R - 1| both below tol.
  bool isValid(double tol = 1e-9) const;
};

struct SpatialVelocity {
  Eigen::Vector3d linear = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular = Eigen::Vector3d::Zero();
};

/// Ordered DH rows with joint limits and the world-to-first-frame transform.
class KinematicChain {
 public:
  KinematicChain(std::vector<DHRow> rows, std::vector<JointLimit> limits,
                 RigidTransform base_frame = RigidTransform::identity());

  std::size_t size() const { return rows_.size(); }
  const std::vector<DHRow>& rows() const { return rows_; }
  const std::vector<JointLimit>& limits() const { return limits_; }
  const RigidTransform& baseFrame() const { return base_; }

  bool withinLimits(const JointVector& q, double tol = 0.0) const;
  JointVector clampToLimits(const JointVector& q) const;
  JointVector lowerLimits() const;
  JointVector upperLimits() const;

  /// Upper bound on the distance from the base origin to the end effector.
  double maxReach() const;

 private:
  std::vector<DHRow> rows_;
  std::vector<JointLimit> limits_;
  RigidTransform base_;
};

RigidTransform dh_transform(const DHRow& row, double joint_value);

/// Frames 1..n expressed in world, the last one is the end effector.
std::vector<RigidTransform> forward_kinematics(const KinematicChain& chain, const JointVector& q);

RigidTransform end_effector(const KinematicChain& chain, const JointVector& q);

/// Geometric Jacobian at the end-effector origin: rows 0-2 linear, 3-5 angular.
Jacobian jacobian(const KinematicChain& chain, const JointVector& q);

SpatialVelocity end_effector_velocity(const KinematicChain& chain, const JointVector& q,
                                      const JointVector& qdot);

/**
 * J^T (J J^T + lambda^2 I)^-1.
 *
 * With lambda == 0 the Gram matrix must be invertible; a rank-deficient J
 * throws SingularityError.
 */
Eigen::MatrixXd damped_pseudoinverse(const Eigen::MatrixXd& J, double lambda);

/// Yoshikawa measure sqrt(det(J J^T)).
double manipulability(const Eigen::MatrixXd& J);

}  // namespace mmkit
