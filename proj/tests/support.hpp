#pragma once

// Fixtures and independent oracles shared by the unit and acceptance tests.

#include "mmkit/dynamics.hpp"
#include "mmkit/grid_planner.hpp"
#include "mmkit/kinematics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

namespace mmkit::test {

inline constexpr double kPi = std::numbers::pi;

inline std::string configPath(const std::string& name) { return std::string(MMKIT_CONFIG_DIR) + "/" + name; }

/// Planar chain of revolute joints about z with the given link lengths.
inline KinematicChain planarChain(const std::vector<double>& lengths) {
  std::vector<DHRow> rows;
  std::vector<JointLimit> limits;
  for (double a : lengths) {
    rows.push_back({0.0, 0.0, a, 0.0, JointKind::Revolute});
    limits.push_back({-kPi, kPi});
  }
  return KinematicChain(rows, limits);
}

inline LinkInertia pointMass(double m, Eigen::Vector3d com = Eigen::Vector3d::Zero()) {
  LinkInertia li;
  li.mass = m;
  li.com = com;
  li.inertia.setZero();
  return li;
}

/// Point mass m at the tip of a link of length l rotating about world z.
inline DynamicModel pendulumZ(double m = 1.0, double l = 1.0) {
  return DynamicModel(planarChain({l}), {pointMass(m)});
}

/// Point mass at the tip of a link rotating about -y, so the link swings in
/// the x-z plane and q = pi/2 points straight up.
inline DynamicModel pendulumXZ(double m = 1.0, double l = 1.0) {
  const auto base = RigidTransform::fromXyzRpy(Eigen::Vector3d::Zero(), Eigen::Vector3d(kPi / 2, 0.0, 0.0));
  KinematicChain chain({{0.0, 0.0, l, 0.0, JointKind::Revolute}}, {{-kPi, kPi}}, base);
  return DynamicModel(chain, {pointMass(m)});
}

/// Spatial 3-link arm with offsets and a prismatic joint, distributed inertias.
inline DynamicModel spatialArm() {
  std::vector<DHRow> rows{{0.3, 0.0, 0.1, kPi / 2, JointKind::Revolute},
                          {0.0, 0.2, 0.5, 0.0, JointKind::Revolute},
                          {0.1, 0.0, 0.0, -kPi / 2, JointKind::Prismatic},
                          {0.0, 0.0, 0.4, 0.3, JointKind::Revolute}};
  std::vector<JointLimit> limits{{-2.5, 2.5}, {-2.0, 2.0}, {0.0, 0.4}, {-2.5, 2.5}};
  KinematicChain chain(rows, limits);
  std::vector<LinkInertia> links;
  const double masses[] = {3.0, 2.0, 1.5, 1.0};
  for (int i = 0; i < 4; ++i) {
    LinkInertia li;
    li.mass = masses[i];
    li.com = Eigen::Vector3d(-0.05 * (i + 1), 0.02, 0.01 * i);
    li.inertia = Eigen::Vector3d(0.02, 0.03, 0.04).asDiagonal();
    li.inertia(0, 1) = li.inertia(1, 0) = 0.002;
    links.push_back(li);
  }
  return DynamicModel(chain, links);
}

inline JointVector randomConfig(const KinematicChain& chain, std::mt19937_64& rng) {
  JointVector q(static_cast<Eigen::Index>(chain.size()));
  for (std::size_t i = 0; i < chain.size(); ++i) {
    std::uniform_real_distribution<double> u(chain.limits()[i].min, chain.limits()[i].max);
    q[static_cast<Eigen::Index>(i)] = u(rng);
  }
  return q;
}

inline Eigen::VectorXd randomVector(Eigen::Index n, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

/// Rotation vector of R via Eigen's angle-axis conversion.
inline Eigen::Vector3d rotationVector(const Eigen::Matrix3d& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

/// Central-difference geometric Jacobian built only from forward kinematics.
inline Jacobian fdJacobian(const KinematicChain& chain, const JointVector& q, double h = 1e-6) {
  const auto n = static_cast<Eigen::Index>(chain.size());
  Jacobian J(6, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    JointVector qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    const auto Tp = end_effector(chain, qp);
    const auto Tm = end_effector(chain, qm);
    J.block<3, 1>(0, i) = (Tp.translation - Tm.translation) / (2 * h);
    J.block<3, 1>(3, i) = rotationVector(Tp.rotation * Tm.rotation.transpose()) / (2 * h);
  }
  return J;
}

/// Straight product of 4x4 DH matrices.
inline Eigen::Matrix4d dhMatrixProduct(const KinematicChain& chain, const JointVector& q) {
  Eigen::Matrix4d T = chain.baseFrame().matrix();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& r = chain.rows()[i];
    const double qi = q[static_cast<Eigen::Index>(i)];
    const double th = r.theta_offset + (r.kind == JointKind::Revolute ? qi : 0.0);
    const double d = r.d + (r.kind == JointKind::Prismatic ? qi : 0.0);
    Eigen::Matrix4d rz = Eigen::Matrix4d::Identity(), tz = Eigen::Matrix4d::Identity();
    Eigen::Matrix4d tx = Eigen::Matrix4d::Identity(), rx = Eigen::Matrix4d::Identity();
    rz.block<2, 2>(0, 0) << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    tz(2, 3) = d;
    tx(0, 3) = r.a;
    rx.block<2, 2>(1, 1) << std::cos(r.alpha), -std::sin(r.alpha), std::sin(r.alpha), std::cos(r.alpha);
    T = T * rz * tz * tx * rx;
  }
  return T;
}

// --- grid oracle -----------------------------------------------------------

/// Cost as (axis steps, diagonal steps); the value a + sqrt(2) d is exact to compare.
struct StepCount {
  long axis = 0;
  long diag = 0;
  double value() const { return static_cast<double>(axis) + std::sqrt(2.0) * static_cast<double>(diag); }
};

/// Single-source Dijkstra over the same move rules as the planner: diagonals
/// need both orthogonal neighbours free. Returns per-cell costs, nullopt where
/// unreachable. Moves are symmetric, so this also gives costs-to-go.
inline std::vector<std::optional<StepCount>> dijkstra(const GridMap& map, Cell source, bool eight) {
  const int w = map.width(), h = map.height();
  auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  auto freeCell = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && !map.occupied({x, y}); };
  std::vector<std::optional<StepCount>> dist(static_cast<std::size_t>(w) * h);
  std::vector<bool> done(dist.size(), false);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  if (!freeCell(source.x, source.y)) return dist;
  dist[idx(source.x, source.y)] = StepCount{};
  open.push({0.0, idx(source.x, source.y)});
  while (!open.empty()) {
    const auto [c, u] = open.top();
    open.pop();
    if (done[u]) continue;
    done[u] = true;
    const int ux = static_cast<int>(u % w), uy = static_cast<int>(u / w);
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        if (dx == 0 && dy == 0) continue;
        const bool diagonal = dx != 0 && dy != 0;
        if (diagonal && !eight) continue;
        const int vx = ux + dx, vy = uy + dy;
        if (!freeCell(vx, vy)) continue;
        if (diagonal && (!freeCell(ux + dx, uy) || !freeCell(ux, uy + dy))) continue;
        StepCount next = *dist[u];
        (diagonal ? next.diag : next.axis) += 1;
        auto& slot = dist[idx(vx, vy)];
        if (!slot || next.value() < slot->value()) {
          slot = next;
          open.push({next.value(), idx(vx, vy)});
        }
      }
    }
  }
  return dist;
}

/// Random occupancy with start and goal forced free.
inline GridMap randomGrid(int w, int h, double density, std::mt19937_64& rng, Cell start, Cell goal) {
  GridMap map(w, h, 1.0);
  std::bernoulli_distribution occ(density);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) map.setOccupied({x, y}, occ(rng));
  map.setOccupied(start, false);
  map.setOccupied(goal, false);
  return map;
}

}  // namespace mmkit::test
