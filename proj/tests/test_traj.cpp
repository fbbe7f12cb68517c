#include "support.hpp"

#include "mmkit/errors.hpp"
#include "mmkit/traj.hpp"

#include <doctest.h>

#include <sstream>

using namespace mmkit;
using namespace mmkit::test;

namespace {

// Closed-form rest-to-rest profile: q0 + (qf - q0)(10 s^3 - 15 s^4 + 6 s^5), s = t / T.
double minJerk(double q0, double qf, double T, double t) {
  const double s = t / T;
  return q0 + (qf - q0) * (10 * s * s * s - 15 * s * s * s * s + 6 * s * s * s * s * s);
}

KinematicChain oneJoint(double lo = -10, double hi = 10) {
  return KinematicChain({{0, 0, 1, 0, JointKind::Revolute}}, {{lo, hi}});
}

}  // namespace

TEST_SUITE("traj") {
  TEST_CASE("reference rest-to-rest coefficients") {
    const auto seg = quintic_coefficients({0, 0, 0, 1, 0, 0, 0, 1});
    const double expected[] = {0, 0, 0, 10, -15, 6};
    for (int k = 0; k < 6; ++k) CHECK(std::abs(seg.coeffs[k] - expected[k]) < 1e-12);
  }

  TEST_CASE("rest to the same rest is constant") {
    const auto seg = quintic_coefficients({2.5, 0, 0, 2.5, 0, 0, 3.0, 7.0});
    CHECK(seg.coeffs[0] == doctest::Approx(2.5));
    for (int k = 1; k < 6; ++k) CHECK(std::abs(seg.coeffs[k]) < 1e-12);
  }

  TEST_CASE("constant-velocity boundary conditions") {
    const auto seg = quintic_coefficients({0, 1, 0, 1, 1, 0, 0, 1});
    CHECK(std::abs(evaluate(seg, 0).v - 1) < 1e-9);
    CHECK(std::abs(evaluate(seg, 1).v - 1) < 1e-9);
  }

  TEST_CASE("evaluate at the midpoint and the end") {
    const auto seg = quintic_coefficients({0, 0, 0, 1, 0, 0, 0, 1});
    CHECK(evaluate(seg, 0.5).q == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(evaluate(seg, 0.5).v == doctest::Approx(1.875).epsilon(1e-12));
    const auto end = evaluate(seg, 1.0);
    CHECK(std::abs(end.q - 1) < 1e-9);
    CHECK(std::abs(end.v) < 1e-9);
    CHECK(std::abs(end.a) < 1e-9);
    CHECK_FALSE(end.clamped);
    CHECK(evaluate(seg, 2.0).clamped);
    CHECK(evaluate(seg, 2.0).q == doctest::Approx(1.0));
  }

  TEST_CASE("matches the closed-form profile with a time offset") {
    const auto seg = quintic_coefficients({-0.4, 0, 0, 1.1, 0, 0, 100.0, 102.5});
    for (double t = 100.0; t <= 102.5; t += 0.125) {
      CHECK(std::abs(evaluate(seg, t).q - minJerk(-0.4, 1.1, 2.5, t - 100.0)) < 1e-12);
    }
  }

  TEST_CASE("boundary residuals over random conditions") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-2, 2), dur(0.2, 5), start(-10, 10);
    for (int k = 0; k < 1000; ++k) {
      BoundaryCondition bc{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), 0, 0};
      bc.t0 = start(rng);
      bc.tf = bc.t0 + dur(rng);
      const auto seg = quintic_coefficients(bc);
      const auto a = evaluate(seg, bc.t0), b = evaluate(seg, bc.tf);
      const double r = std::max({std::abs(a.q - bc.q0), std::abs(a.v - bc.v0), std::abs(a.a - bc.a0),
                                 std::abs(b.q - bc.qf), std::abs(b.v - bc.vf), std::abs(b.a - bc.af)});
      CHECK(r < 1e-9);
    }
  }

  TEST_CASE("invalid intervals") {
    CHECK_THROWS_AS(quintic_coefficients({0, 0, 0, 1, 0, 0, 1, 1}), InvalidArgument);
    CHECK_THROWS_AS(quintic_coefficients({0, 0, 0, 1, 0, 0, 1, 0.5}), InvalidArgument);
    CHECK_THROWS_AS(quintic_coefficients({0, 0, 0, 1, 0, 0, 0, 1e-8}), DegenerateError);
  }

  TEST_CASE("jerk is finite and continuous") {
    const auto seg = quintic_coefficients({0.3, -0.5, 1.0, -1.0, 0.2, 0.0, 0, 1.5});
    double prev = evaluate_jerk(seg, 0.0);
    for (int i = 1; i <= 1500; ++i) {
      const double j = evaluate_jerk(seg, i * 1e-3);
      CHECK(std::isfinite(j));
      CHECK(std::abs(j - prev) < 1.0);
      prev = j;
    }
  }

  TEST_CASE("rest-to-rest motion is monotone") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3, 3), d(0.1, 4);
    for (int k = 0; k < 100; ++k) {
      const double q0 = u(rng), qf = u(rng), T = d(rng);
      const auto seg = quintic_coefficients({q0, 0, 0, qf, 0, 0, 0, T});
      const double sign = qf >= q0 ? 1.0 : -1.0;
      double prev = q0;
      for (int i = 1; i <= 200; ++i) {
        const double q = evaluate(seg, T * i / 200.0).q;
        CHECK(sign * (q - prev) >= -1e-12);
        prev = q;
      }
    }
  }

  TEST_CASE("peaks scale with the inverse duration") {
    const auto a = quintic_coefficients({0, 0, 0, 1, 0, 0, 0, 1});
    CHECK(peak_abs_velocity(a) == doctest::Approx(1.875).epsilon(1e-12));
    // peak acceleration of the minimum-jerk profile: 10 / sqrt(3)
    CHECK(peak_abs_acceleration(a) == doctest::Approx(10.0 / std::sqrt(3.0)).epsilon(1e-12));
    for (double s : {0.5, 2.0, 3.7}) {
      const auto b = quintic_coefficients({0, 0, 0, 1, 0, 0, 0, s});
      CHECK(std::abs(peak_abs_velocity(b) - peak_abs_velocity(a) / s) < 1e-9);
      CHECK(std::abs(peak_abs_acceleration(b) - peak_abs_acceleration(a) / (s * s)) < 1e-9);
    }
  }

  TEST_CASE("planning keeps a feasible duration") {
    const auto chain = oneJoint();
    const auto traj = plan_joint_trajectory(chain, JointVector::Zero(1), JointVector::Ones(1), 1.0,
                                            Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 100.0));
    CHECK(traj.duration() == doctest::Approx(1.0));
  }

  TEST_CASE("planning stretches to the velocity limit") {
    const auto chain = oneJoint();
    const auto traj = plan_joint_trajectory(chain, JointVector::Zero(1), JointVector::Ones(1), 1.0,
                                            Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 100.0));
    CHECK(traj.duration() == doctest::Approx(1.875).epsilon(1e-9));
    CHECK(peak_abs_velocity(traj.segments[0]) <= 1.0 + 1e-9);
  }

  TEST_CASE("planning stretches to the acceleration limit") {
    const auto chain = oneJoint();
    const auto traj = plan_joint_trajectory(chain, JointVector::Zero(1), JointVector::Ones(1), 1.0,
                                            Eigen::VectorXd::Constant(1, 100.0), Eigen::VectorXd::Constant(1, 1.0));
    CHECK(traj.duration() == doctest::Approx(std::sqrt(10.0 / std::sqrt(3.0))).epsilon(1e-9));
  }

  TEST_CASE("identical start and goal give a constant trajectory") {
    const auto chain = oneJoint();
    const auto traj = plan_joint_trajectory(chain, JointVector::Constant(1, 0.3), JointVector::Constant(1, 0.3),
                                            std::nullopt, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
    CHECK(peak_abs_velocity(traj.segments[0]) == 0.0);
    CHECK(traj.sample(traj.endTime() / 2).q[0] == doctest::Approx(0.3));
  }

  TEST_CASE("planning rejects out-of-limit endpoints") {
    const auto chain = oneJoint(-1, 1);
    CHECK_THROWS_AS(plan_joint_trajectory(chain, JointVector::Zero(1), JointVector::Constant(1, 2.0), 1.0,
                                          Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)),
                    JointLimitError);
  }

  TEST_CASE("multi-joint trajectories are synchronized") {
    const auto chain = planarChain({1, 1, 1});
    JointVector a(3), b(3);
    a << 0, 0.5, -1;
    b << 1, -0.5, 2;
    const auto traj = plan_joint_trajectory(chain, a, b, std::nullopt, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3));
    for (const auto& s : traj.segments) {
      CHECK(s.t0 == traj.startTime());
      CHECK(s.tf == traj.endTime());
      CHECK(peak_abs_velocity(s) <= 1.0 + 1e-9);
      CHECK(peak_abs_acceleration(s) <= 1.0 + 1e-9);
    }
    CHECK((traj.sample(traj.endTime()).q - b).norm() < 1e-9);
  }

  TEST_CASE("trajectory CSV header and rows") {
    const auto chain = planarChain({1, 1});
    const auto traj = plan_joint_trajectory(chain, JointVector::Zero(2), JointVector::Ones(2), 1.0,
                                            Eigen::VectorXd::Constant(2, 10), Eigen::VectorXd::Constant(2, 10));
    std::ostringstream out;
    write_trajectory_csv(out, traj, 0.25);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,q0,v0,a0,q1,v1,a1");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5);
  }
}
