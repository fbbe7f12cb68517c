#pragma once

#include "mmkit/kinematics.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mmkit {

using JointTorque = Eigen::VectorXd;

/// Rigid-body parameters of one link, expressed in that link's DH frame.
struct LinkInertia {
  double mass = 1.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  /// About the center of mass.
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();

  /// Positive mass, symmetric PSD tensor whose principal moments obey the triangle inequality.
  void validate() const;
};

struct JointState {
  JointVector q;
  JointVector qdot;
};

/**
 * Arm dynamics M(q) q'' + C(q, q') q' + g(q) = tau.
 *
 * Link i's inertia is attached to DH frame i (the frame after joint i). The
 * base is treated as fixed while the arm moves.
 */
class DynamicModel {
 public:
  DynamicModel(KinematicChain chain, std::vector<LinkInertia> inertias,
               Eigen::Vector3d gravity = Eigen::Vector3d(0.0, 0.0, -9.81));

  const KinematicChain& chain() const { return chain_; }
  const std::vector<LinkInertia>& inertias() const { return inertias_; }
  const Eigen::Vector3d& gravity() const { return gravity_; }
  std::size_t size() const { return chain_.size(); }

  /// Per-joint viscous friction; zero unless set.
  const Eigen::VectorXd& viscousDamping() const { return damping_; }
  void setViscousDamping(Eigen::VectorXd damping);

  DynamicModel withGravity(const Eigen::Vector3d& gravity) const;

 private:
  KinematicChain chain_;
  std::vector<LinkInertia> inertias_;
  Eigen::Vector3d gravity_;
  Eigen::VectorXd damping_;
};

/// World positions of every link's center of mass.
std::vector<Eigen::Vector3d> com_positions(const DynamicModel& model, const JointVector& q);

/// 6 x n Jacobian of link `link`'s center of mass (columns past the link are zero).
Jacobian com_jacobian(const DynamicModel& model, const JointVector& q, std::size_t link);

double kinetic_energy(const DynamicModel& model, const JointVector& q, const JointVector& qdot);
double potential_energy(const DynamicModel& model, const JointVector& q);

Eigen::MatrixXd mass_matrix(const DynamicModel& model, const JointVector& q);

/// Christoffel-symbol Coriolis matrix with dM/dq from central differences.
Eigen::MatrixXd coriolis_matrix(const DynamicModel& model, const JointVector& q,
                                const JointVector& qdot);

JointTorque gravity_vector(const DynamicModel& model, const JointVector& q);

JointTorque inverse_dynamics(const DynamicModel& model, const JointVector& q,
                             const JointVector& qdot, const JointVector& qddot);

/// Solves M q'' = tau - C q' - g by LDLT. Throws DegenerateError when cond(M) > 1e12.
JointVector forward_dynamics(const DynamicModel& model, const JointVector& q,
                             const JointVector& qdot, const JointTorque& tau);

/// One classical RK4 step with tau held constant. dt must lie in (0, 0.05].
JointState integrate_step(const DynamicModel& model, const JointState& state,
                          const JointTorque& tau, double dt);

/// Central-difference step used for dM/dq.
inline constexpr double kDynamicsFdStep = 1e-6;

}  // namespace mmkit
