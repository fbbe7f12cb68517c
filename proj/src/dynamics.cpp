#include "mmkit/dynamics.hpp"

#include "mmkit/errors.hpp"

#include <cmath>
#include <string>

namespace mmkit {

namespace {

void requireDims(const DynamicModel& model, const JointVector& v, const char* what) {
  if (static_cast<std::size_t>(v.size()) != model.size()) {
    throw InvalidArgument(std::string(what) + ": expected " + std::to_string(model.size()) +
                          " entries, got " + std::to_string(v.size()));
  }
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + ": vector is not finite");
}

struct LinkKinematics {
  Eigen::Vector3d com_world;
  Eigen::Matrix3d rotation;
  Eigen::Matrix<double, 3, Eigen::Dynamic> jv;
  Eigen::Matrix<double, 3, Eigen::Dynamic> jw;
};

// Center-of-mass Jacobians for every link from a single FK pass.
std::vector<LinkKinematics> linkKinematics(const DynamicModel& model, const JointVector& q) {
  const KinematicChain& chain = model.chain();
  const auto frames = forward_kinematics(chain, q);
  const auto n = static_cast<Eigen::Index>(chain.size());

  std::vector<LinkKinematics> out(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    LinkKinematics& lk = out[i];
    lk.rotation = frames[i].rotation;
    lk.com_world = frames[i] * model.inertias()[i].com;
    lk.jv = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, n);
    lk.jw = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, n);
    for (std::size_t j = 0; j <= i; ++j) {
      const RigidTransform& prev = (j == 0) ? chain.baseFrame() : frames[j - 1];
      const Eigen::Vector3d z = prev.rotation.col(2);
      const auto col = static_cast<Eigen::Index>(j);
      if (chain.rows()[j].kind == JointKind::Revolute) {
        lk.jv.col(col) = z.cross(lk.com_world - prev.translation);
        lk.jw.col(col) = z;
      } else {
        lk.jv.col(col) = z;
      }
    }
  }
  return out;
}

Eigen::VectorXd coriolisTimesVelocity(const DynamicModel& model, const JointVector& q,
                                      const JointVector& qdot) {
  if (qdot.isZero(0.0)) return Eigen::VectorXd::Zero(qdot.size());
  return coriolis_matrix(model, q, qdot) * qdot;
}

}  // namespace

void LinkInertia::validate() const {
  if (!(std::isfinite(mass) && mass > 0.0)) throw InvalidArgument("link mass must be positive");
  if (!com.allFinite() || !inertia.allFinite()) throw InvalidArgument("link inertia is not finite");
  if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidArgument("inertia tensor is not symmetric");
  }
  const Eigen::Vector3d principal = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(inertia).eigenvalues();
  const double tol = 1e-12 * std::max(1.0, principal.cwiseAbs().maxCoeff());
  if (principal.minCoeff() < -tol) throw InvalidArgument("inertia tensor is not positive semidefinite");
  // Sorted ascending, so the only binding triangle inequality is the largest one.
  if (principal(0) + principal(1) < principal(2) - tol) {
    throw InvalidArgument("principal moments violate the triangle inequality");
  }
}

DynamicModel::DynamicModel(KinematicChain chain, std::vector<LinkInertia> inertias,
                           Eigen::Vector3d gravity)
    : chain_(std::move(chain)),
      inertias_(std::move(inertias)),
      gravity_(std::move(gravity)),
      damping_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(chain_.size()))) {
  if (inertias_.size() != chain_.size()) {
    throw InvalidArgument("dynamic model: " + std::to_string(inertias_.size()) +
                          " inertias for " + std::to_string(chain_.size()) + " links");
  }
  for (const auto& link : inertias_) link.validate();
  if (!gravity_.allFinite()) throw InvalidArgument("gravity is not finite");
}

void DynamicModel::setViscousDamping(Eigen::VectorXd damping) {
  if (static_cast<std::size_t>(damping.size()) != size() || !damping.allFinite() ||
      (damping.array() < 0.0).any()) {
    throw InvalidArgument("viscous damping must be one non-negative value per joint");
  }
  damping_ = std::move(damping);
}

DynamicModel DynamicModel::withGravity(const Eigen::Vector3d& gravity) const {
  DynamicModel copy = *this;
  if (!gravity.allFinite()) throw InvalidArgument("gravity is not finite");
  copy.gravity_ = gravity;
  return copy;
}

std::vector<Eigen::Vector3d> com_positions(const DynamicModel& model, const JointVector& q) {
  requireDims(model, q, "com_positions");
  const auto frames = forward_kinematics(model.chain(), q);
  std::vector<Eigen::Vector3d> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) out.push_back(frames[i] * model.inertias()[i].com);
  return out;
}

Jacobian com_jacobian(const DynamicModel& model, const JointVector& q, std::size_t link) {
  requireDims(model, q, "com_jacobian");
  if (link >= model.size()) throw InvalidArgument("com_jacobian: link index out of range");
  const auto lk = linkKinematics(model, q);
  Jacobian J(6, static_cast<Eigen::Index>(model.size()));
  J.topRows<3>() = lk[link].jv;
  J.bottomRows<3>() = lk[link].jw;
  return J;
}

double kinetic_energy(const DynamicModel& model, const JointVector& q, const JointVector& qdot) {
  requireDims(model, q, "kinetic_energy");
  requireDims(model, qdot, "kinetic_energy");
  const auto links = linkKinematics(model, q);
  double k = 0.0;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const LinkInertia& body = model.inertias()[i];
    const Eigen::Vector3d v = links[i].jv * qdot;
    const Eigen::Vector3d w = links[i].jw * qdot;
    const Eigen::Matrix3d inertia_world = links[i].rotation * body.inertia * links[i].rotation.transpose();
    k += 0.5 * body.mass * v.squaredNorm() + 0.5 * w.dot(inertia_world * w);
  }
  return k;
}

double potential_energy(const DynamicModel& model, const JointVector& q) {
  const auto coms = com_positions(model, q);
  double p = 0.0;
  for (std::size_t i = 0; i < coms.size(); ++i) p -= model.inertias()[i].mass * model.gravity().dot(coms[i]);
  return p;
}

Eigen::MatrixXd mass_matrix(const DynamicModel& model, const JointVector& q) {
  requireDims(model, q, "mass_matrix");
  const auto links = linkKinematics(model, q);
  const auto n = static_cast<Eigen::Index>(model.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < links.size(); ++i) {
    const LinkInertia& body = model.inertias()[i];
    const Eigen::Matrix3d inertia_world = links[i].rotation * body.inertia * links[i].rotation.transpose();
    M.noalias() += body.mass * links[i].jv.transpose() * links[i].jv;
    M.noalias() += links[i].jw.transpose() * inertia_world * links[i].jw;
  }
  // Summation order leaves ~1 ulp of asymmetry; snap it away.
  return 0.5 * (M + M.transpose());
}

Eigen::MatrixXd coriolis_matrix(const DynamicModel& model, const JointVector& q,
                                const JointVector& qdot) {
  requireDims(model, q, "coriolis_matrix");
  requireDims(model, qdot, "coriolis_matrix");
  const auto n = static_cast<Eigen::Index>(model.size());

  std::vector<Eigen::MatrixXd> dM(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    JointVector plus = q, minus = q;
    plus[k] += kDynamicsFdStep;
    minus[k] -= kDynamicsFdStep;
    dM[static_cast<std::size_t>(k)] =
        (mass_matrix(model, plus) - mass_matrix(model, minus)) / (2.0 * kDynamicsFdStep);
  }

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double cij = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const auto uj = static_cast<std::size_t>(j);
        const auto ui = static_cast<std::size_t>(i);
        cij += 0.5 * (dM[uk](i, j) + dM[uj](i, k) - dM[ui](j, k)) * qdot[k];
      }
      C(i, j) = cij;
    }
  }
  return C;
}

JointTorque gravity_vector(const DynamicModel& model, const JointVector& q) {
  requireDims(model, q, "gravity_vector");
  const auto links = linkKinematics(model, q);
  JointTorque g = JointTorque::Zero(static_cast<Eigen::Index>(model.size()));
  for (std::size_t i = 0; i < links.size(); ++i) {
    g.noalias() -= links[i].jv.transpose() * (model.inertias()[i].mass * model.gravity());
  }
  return g;
}

JointTorque inverse_dynamics(const DynamicModel& model, const JointVector& q,
                             const JointVector& qdot, const JointVector& qddot) {
  requireDims(model, qdot, "inverse_dynamics");
  requireDims(model, qddot, "inverse_dynamics");
  return mass_matrix(model, q) * qddot + coriolisTimesVelocity(model, q, qdot) +
         gravity_vector(model, q) + model.viscousDamping().cwiseProduct(qdot);
}

JointVector forward_dynamics(const DynamicModel& model, const JointVector& q,
                             const JointVector& qdot, const JointTorque& tau) {
  requireDims(model, qdot, "forward_dynamics");
  requireDims(model, tau, "forward_dynamics");
  const Eigen::MatrixXd M = mass_matrix(model, q);

  const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(eig.minCoeff() > 0.0) || eig.maxCoeff() / eig.minCoeff() > 1e12) {
    throw DegenerateError("forward_dynamics: mass matrix is numerically singular");
  }

  const Eigen::VectorXd rhs = tau - coriolisTimesVelocity(model, q, qdot) - gravity_vector(model, q) -
                              model.viscousDamping().cwiseProduct(qdot);
  return M.llt().solve(rhs);
}

JointState integrate_step(const DynamicModel& model, const JointState& state,
                          const JointTorque& tau, double dt) {
  if (!(dt > 0.0 && dt <= 0.05)) throw InvalidArgument("integrate_step: dt must lie in (0, 0.05]");
  requireDims(model, state.q, "integrate_step");
  requireDims(model, state.qdot, "integrate_step");

  const auto accel = [&](const JointVector& q, const JointVector& qd) {
    return forward_dynamics(model, q, qd, tau);
  };

  const JointVector& q0 = state.q;
  const JointVector& v0 = state.qdot;

  const JointVector k1q = v0;
  const JointVector k1v = accel(q0, v0);
  const JointVector k2q = v0 + 0.5 * dt * k1v;
  const JointVector k2v = accel(q0 + 0.5 * dt * k1q, k2q);
  const JointVector k3q = v0 + 0.5 * dt * k2v;
  const JointVector k3v = accel(q0 + 0.5 * dt * k2q, k3q);
  const JointVector k4q = v0 + dt * k3v;
  const JointVector k4v = accel(q0 + dt * k3q, k4q);

  JointState next;
  next.q = q0 + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
  next.qdot = v0 + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  return next;
}

}  // namespace mmkit
