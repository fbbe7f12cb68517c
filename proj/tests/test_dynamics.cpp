#include "support.hpp"

#include "mmkit/errors.hpp"
#include "mmkit/io.hpp"

#include <doctest.h>

using namespace mmkit;
using namespace mmkit::test;

namespace {

double maxAbs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

DynamicModel fetchModel() { return load_robot(configPath("fetch_like.json")).model; }

JointVector scalar(double v) { return JointVector::Constant(1, v); }

// dM/dt along qdot by central differences of mass_matrix.
Eigen::MatrixXd mdotFd(const DynamicModel& m, const JointVector& q, const JointVector& qd) {
  const double h = 1e-6;
  return (mass_matrix(m, q + h * qd) - mass_matrix(m, q - h * qd)) / (2 * h);
}

double totalEnergy(const DynamicModel& m, const JointState& s) {
  return kinetic_energy(m, s.q, s.qdot) + potential_energy(m, s.q);
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("kinetic energy") {
    const auto p = pendulumZ();
    CHECK(kinetic_energy(p, scalar(0.3), scalar(0.0)) == 0.0);
    CHECK(kinetic_energy(p, scalar(0.3), scalar(1.0)) == doctest::Approx(0.5).epsilon(1e-12));

    const auto m = fetchModel();
    std::mt19937_64 rng(1);
    for (int k = 0; k < 20; ++k) {
      const auto q = randomConfig(m.chain(), rng);
      const auto qd = randomVector(7, 1.5, rng);
      const double expected = 0.5 * qd.dot(mass_matrix(m, q) * qd);
      CHECK(std::abs(kinetic_energy(m, q, qd) - expected) < 1e-10);
    }
  }

  TEST_CASE("potential energy") {
    const auto m = fetchModel().withGravity(Eigen::Vector3d::Zero());
    std::mt19937_64 rng(2);
    CHECK(potential_energy(m, randomConfig(m.chain(), rng)) == 0.0);

    const auto flat = pendulumZ();
    CHECK(potential_energy(flat, scalar(0.0)) == doctest::Approx(potential_energy(flat, scalar(1.3))));

    const auto swing = pendulumXZ();
    CHECK(potential_energy(swing, scalar(kPi / 2)) - potential_energy(swing, scalar(0.0)) ==
          doctest::Approx(9.81).epsilon(1e-12));
  }

  TEST_CASE("mass matrix") {
    CHECK(mass_matrix(pendulumZ(), scalar(0.7))(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    const auto m = fetchModel();
    std::mt19937_64 rng(3);
    for (int k = 0; k < 200; ++k) {
      const auto M = mass_matrix(m, randomConfig(m.chain(), rng));
      CHECK(maxAbs(M - M.transpose()) < 1e-10);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
  }

  TEST_CASE("mass matrix matches the composite-inertia oracle on a prismatic arm") {
    // Oracle: M = sum_i m_i Jv_i^T Jv_i + Jw_i^T R I R^T Jw_i with COM Jacobians by finite differences.
    const auto arm = spatialArm();
    std::mt19937_64 rng(4);
    const auto q = randomConfig(arm.chain(), rng);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(4, 4);
    const double h = 1e-6;
    for (std::size_t i = 0; i < 4; ++i) {
      Eigen::MatrixXd Jv(3, 4), Jw(3, 4);
      for (Eigen::Index j = 0; j < 4; ++j) {
        JointVector qp = q, qm = q;
        qp[j] += h;
        qm[j] -= h;
        const auto Fp = forward_kinematics(arm.chain(), qp)[i];
        const auto Fm = forward_kinematics(arm.chain(), qm)[i];
        Jv.col(j) = (Fp * arm.inertias()[i].com - Fm * arm.inertias()[i].com) / (2 * h);
        Jw.col(j) = rotationVector(Fp.rotation * Fm.rotation.transpose()) / (2 * h);
      }
      const auto R = forward_kinematics(arm.chain(), q)[i].rotation;
      M += arm.inertias()[i].mass * Jv.transpose() * Jv +
           Jw.transpose() * R * arm.inertias()[i].inertia * R.transpose() * Jw;
    }
    CHECK(maxAbs(mass_matrix(arm, q) - M) < 1e-7);
  }

  TEST_CASE("Coriolis matrix") {
    const auto p = pendulumZ();
    CHECK(maxAbs(coriolis_matrix(p, scalar(0.4), scalar(2.0))) < 1e-9);

    const auto m = fetchModel();
    std::mt19937_64 rng(5);
    const auto q = randomConfig(m.chain(), rng);
    CHECK(maxAbs(coriolis_matrix(m, q, JointVector::Zero(7)) * JointVector::Zero(7)) == 0.0);
    for (int k = 0; k < 100; ++k) {
      const auto qk = randomConfig(m.chain(), rng);
      const auto qd = randomVector(7, 1.5, rng);
      const Eigen::MatrixXd N = mdotFd(m, qk, qd) - 2.0 * coriolis_matrix(m, qk, qd);
      CHECK(maxAbs(N + N.transpose()) < 1e-6);
    }
  }

  TEST_CASE("gravity vector") {
    const auto m = fetchModel();
    std::mt19937_64 rng(6);
    CHECK(maxAbs(gravity_vector(m.withGravity(Eigen::Vector3d::Zero()), randomConfig(m.chain(), rng))) == 0.0);

    const auto swing = pendulumXZ();
    CHECK(std::abs(gravity_vector(swing, scalar(-kPi / 2))[0]) < 1e-12);
    CHECK(std::abs(gravity_vector(swing, scalar(0.0))[0]) == doctest::Approx(9.81).epsilon(1e-12));

    for (int k = 0; k < 50; ++k) {
      const auto q = randomConfig(m.chain(), rng);
      const auto g = gravity_vector(m, q);
      for (Eigen::Index i = 0; i < 7; ++i) {
        JointVector qp = q, qm = q;
        qp[i] += 1e-6;
        qm[i] -= 1e-6;
        const double fd = (potential_energy(m, qp) - potential_energy(m, qm)) / 2e-6;
        CHECK(std::abs(g[i] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }

  TEST_CASE("inverse dynamics") {
    const auto m = fetchModel();
    std::mt19937_64 rng(7);
    const auto q = randomConfig(m.chain(), rng);
    const JointVector z = JointVector::Zero(7);
    CHECK(maxAbs(inverse_dynamics(m, q, z, z) - gravity_vector(m, q)) < 1e-12);

    const auto m0 = m.withGravity(Eigen::Vector3d::Zero());
    JointVector e1 = z;
    e1[0] = 1.0;
    CHECK(maxAbs(inverse_dynamics(m0, q, z, e1) - mass_matrix(m0, q).col(0)) < 1e-12);

    for (int k = 0; k < 100; ++k) {
      const auto qk = randomConfig(m.chain(), rng);
      const auto qd = randomVector(7, 1.0, rng);
      const auto qdd = randomVector(7, 2.0, rng);
      const auto tau = inverse_dynamics(m, qk, qd, qdd);
      CHECK(maxAbs(forward_dynamics(m, qk, qd, tau) - qdd) < 1e-8);
    }
  }

  TEST_CASE("forward dynamics") {
    const auto m = fetchModel();
    std::mt19937_64 rng(8);
    const auto q = randomConfig(m.chain(), rng);
    CHECK(maxAbs(forward_dynamics(m, q, JointVector::Zero(7), gravity_vector(m, q))) < 1e-9);

    const auto p = pendulumZ().withGravity(Eigen::Vector3d::Zero());
    CHECK(forward_dynamics(p, scalar(0.2), scalar(0.0), scalar(1.0))[0] == doctest::Approx(1.0));
  }

  TEST_CASE("forward dynamics rejects a degenerate mass matrix") {
    // A link with no mass offset from its own axis contributes nothing to M.
    LinkInertia li = pointMass(1.0);
    const DynamicModel axial(KinematicChain({{0, 0, 0, 0, JointKind::Revolute}}, {{-1, 1}}), {li});
    CHECK_THROWS_AS(forward_dynamics(axial, scalar(0.0), scalar(0.0), scalar(1.0)), DegenerateError);
  }

  TEST_CASE("integrate_step") {
    const auto m = fetchModel();
    std::mt19937_64 rng(9);
    const auto q = randomConfig(m.chain(), rng);
    JointState s{q, JointVector::Zero(7)};
    const auto next = integrate_step(m, s, gravity_vector(m, q), 1e-3);
    CHECK(maxAbs(next.q - q) < 1e-12);
    CHECK(maxAbs(next.qdot) < 1e-12);

    const auto p = pendulumZ().withGravity(Eigen::Vector3d::Zero());
    JointState ps{scalar(0.0), scalar(1.0)};
    for (int k = 0; k < 100; ++k) ps = integrate_step(p, ps, scalar(0.0), 0.01);
    CHECK(std::abs(ps.q[0] - 1.0) < 1e-9);

    CHECK_THROWS_AS(integrate_step(p, ps, scalar(0.0), 0.0), InvalidArgument);
    CHECK_THROWS_AS(integrate_step(p, ps, scalar(0.0), 0.06), InvalidArgument);
  }

  TEST_CASE("unforced pendulum conserves energy under RK4") {
    const auto p = pendulumXZ();
    JointState s{scalar(0.3), scalar(0.0)};
    const double e0 = totalEnergy(p, s);
    double worst = 0.0;
    for (int k = 0; k < 5000; ++k) {
      s = integrate_step(p, s, scalar(0.0), 1e-3);
      worst = std::max(worst, std::abs(totalEnergy(p, s) - e0));
    }
    CHECK(worst / std::abs(e0) < 1e-3);
  }

  TEST_CASE("link inertia validation") {
    LinkInertia li;
    li.mass = 0.0;
    CHECK_THROWS_AS(li.validate(), InvalidArgument);
    li.mass = 1.0;
    li.inertia = Eigen::Vector3d(1.0, 1.0, 3.0).asDiagonal();
    CHECK_THROWS_AS(li.validate(), InvalidArgument);
    li.inertia = Eigen::Vector3d(1.0, 1.0, 1.5).asDiagonal();
    CHECK_NOTHROW(li.validate());
    li.inertia(0, 1) = 0.1;
    CHECK_THROWS_AS(li.validate(), InvalidArgument);
  }
}
