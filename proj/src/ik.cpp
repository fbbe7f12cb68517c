#include "mmkit/ik.hpp"

#include "mmkit/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <type_traits>

namespace mmkit {

namespace {

using Clock = std::chrono::steady_clock;

class Deadline {
 public:
  Deadline(double seconds, std::size_t iterations)
      : start_(Clock::now()), seconds_(seconds), iterations_(iterations) {}

  bool expired(std::size_t iterations_done) const {
    if (iterations_ != 0 && iterations_done >= iterations_) return true;
    return elapsed() >= seconds_;
  }
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  Clock::time_point start_;
  double seconds_;
  std::size_t iterations_;
};

void validate(const KinematicChain& chain, const IkRequest& req) {
  if (!(req.time_budget > 0.0) || !(req.pos_tol > 0.0) || !(req.rot_tol > 0.0)) {
    throw InvalidArgument("ik request: budget and tolerances must be positive");
  }
  if (!req.target.isValid(1e-6)) throw InvalidArgument("ik request: target is not a rigid transform");
  if (static_cast<std::size_t>(req.seed.size()) != chain.size() || !req.seed.allFinite()) {
    throw InvalidArgument("ik request: seed must hold one finite value per joint");
  }
  if (!chain.withinLimits(req.seed)) throw JointLimitError("ik request: seed is outside joint limits");
}

bool unreachable(const KinematicChain& chain, const IkRequest& req) {
  return (req.target.translation - chain.baseFrame().translation).norm() > chain.maxReach();
}

// Pose error with the angular part rotated into world so it pairs with the
// geometric Jacobian.
PoseError worldError(const RigidTransform& current, const RigidTransform& target) {
  PoseError e = pose_error(current, target);
  e.tail<3>() = current.rotation * e.tail<3>();
  return e;
}

double dampingFor(const Eigen::MatrixXd& J) {
  return manipulability(J) < kSingularManipulability ? kSingularDamping : 0.0;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& J) {
  try {
    return damped_pseudoinverse(J, dampingFor(J));
  } catch (const SingularityError&) {
    return damped_pseudoinverse(J, kSingularDamping);
  }
}

/// Resumable solver: each step() is one iteration, so the race can interleave
/// two of them on one thread.
class Solver {
 public:
  Solver(const KinematicChain& chain, const IkRequest& req, std::uint64_t rng_seed, IkSolverKind kind)
      : chain_(chain), req_(req), rng_(rng_seed), q_(req.seed), kind_(kind) {}
  virtual ~Solver() = default;

  /// Returns true once the solver has a final answer.
  virtual bool step() = 0;

  bool converged() const { return converged_; }
  std::size_t iterations() const { return iterations_; }
  double lastSs() const { return last_ss_; }

  IkResult result(double elapsed) const {
    IkResult r;
    r.status = converged_ ? IkStatus::Converged : IkStatus::TimedOut;
    r.solver = kind_;
    r.iterations = iterations_;
    r.restarts = restarts_;
    r.elapsed = elapsed;
    r.final_ss = converged_ ? solution_ss_ : last_ss_;
    if (converged_) r.solution = solution_;
    return r;
  }

 protected:
  JointVector randomConfiguration() {
    JointVector q(static_cast<Eigen::Index>(chain_.size()));
    for (std::size_t i = 0; i < chain_.size(); ++i) {
      std::uniform_real_distribution<double> dist(chain_.limits()[i].min, chain_.limits()[i].max);
      q[static_cast<Eigen::Index>(i)] = dist(rng_);
    }
    return q;
  }

  // True when the tracked scalar improved by less than kStallProgress over
  // the last kStallWindow iterations.
  bool stalled(double value) {
    history_.push_back(value);
    if (history_.size() <= kStallWindow) return false;
    history_.pop_front();
    return history_.front() - history_.back() < kStallProgress;
  }

  void restart() {
    q_ = randomConfiguration();
    history_.clear();
    ++restarts_;
  }

  void finish(const JointVector& q, double ss) {
    converged_ = true;
    solution_ = q;
    solution_ss_ = ss;
  }

  const KinematicChain& chain_;
  const IkRequest& req_;
  std::mt19937_64 rng_;
  JointVector q_;
  JointVector solution_;
  std::deque<double> history_;
  IkSolverKind kind_;
  std::size_t iterations_ = 0;
  std::size_t restarts_ = 0;
  double last_ss_ = std::numeric_limits<double>::infinity();
  double solution_ss_ = 0.0;
  bool converged_ = false;
};

class PinvSolver final : public Solver {
 public:
  PinvSolver(const KinematicChain& chain, const IkRequest& req, std::uint64_t seed)
      : Solver(chain, req, seed, IkSolverKind::Pseudoinverse) {}

  bool step() override {
    const RigidTransform pose = end_effector(chain_, q_);
    const PoseError err = worldError(pose, req_.target);
    last_ss_ = ss_metric(err);
    if (within_tolerance(err, req_.pos_tol, req_.rot_tol)) {
      finish(q_, last_ss_);
      return true;
    }
    const Eigen::MatrixXd J = jacobian(chain_, q_);
    q_ = chain_.clampToLimits(q_ + pinv(J) * err);
    ++iterations_;
    if (stalled(err.norm())) restart();
    return false;
  }
};

class SqpSolver final : public Solver {
 public:
  SqpSolver(const KinematicChain& chain, const IkRequest& req, std::uint64_t seed)
      : Solver(chain, req, seed, IkSolverKind::SqpSs) {}

  bool step() override {
    const PoseError err = worldError(end_effector(chain_, q_), req_.target);
    last_ss_ = ss_metric(err);
    if (within_tolerance(err, req_.pos_tol, req_.rot_tol)) {
      candidates_.push_back(q_);
      if (restarts_ == 0 || candidates_.size() >= kSqpCandidateLimit) {
        settle();
        return true;
      }
      restart();
      return false;
    }

    const JointVector delta = boxConstrainedStep(err);
    const double m0 = merit(q_, last_ss_);
    double t = 1.0;
    bool accepted = false;
    double m = m0;
    for (int k = 0; k <= kMaxBacktracks; ++k, t *= 0.5) {
      const JointVector trial = chain_.clampToLimits(q_ + t * delta);
      const double ss = ss_metric(worldError(end_effector(chain_, trial), req_.target));
      const double mt = merit(trial, ss);
      if (mt < m0) {
        q_ = trial;
        m = mt;
        accepted = true;
        break;
      }
    }
    ++iterations_;
    if (!accepted || stalled(m)) restart();
    return false;
  }

  /// Out of budget: any candidate gathered so far still counts.
  void settle() {
    if (candidates_.empty()) return;
    const auto best = *select_min_seed_distance(candidates_, req_.seed);
    const JointVector& q = candidates_[best];
    finish(q, ss_metric(worldError(end_effector(chain_, q), req_.target)));
  }

 private:
  double merit(const JointVector& q, double ss) const {
    return (q - req_.seed).squaredNorm() + kSqpPenalty * ss;
  }

  // Minimum-norm-to-seed step satisfying the linearized pose constraint,
  // with joints that would cross a limit pinned to it and removed.
  JointVector boxConstrainedStep(const PoseError& err) const {
    const Eigen::MatrixXd J = jacobian(chain_, q_);
    const auto n = static_cast<Eigen::Index>(chain_.size());
    const JointVector lo = chain_.lowerLimits() - q_;
    const JointVector hi = chain_.upperLimits() - q_;
    const JointVector toward_seed = req_.seed - q_;

    std::vector<bool> pinned(static_cast<std::size_t>(n), false);
    JointVector delta = JointVector::Zero(n);
    for (Eigen::Index pass = 0; pass <= n; ++pass) {
      std::vector<Eigen::Index> free;
      Eigen::Matrix<double, 6, 1> rhs = err;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (pinned[static_cast<std::size_t>(i)]) {
          rhs -= J.col(i) * delta[i];
        } else {
          free.push_back(i);
        }
      }
      if (free.empty()) break;

      const auto nf = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd Jf(6, nf);
      JointVector seed_f(nf);
      for (Eigen::Index k = 0; k < nf; ++k) {
        Jf.col(k) = J.col(free[static_cast<std::size_t>(k)]);
        seed_f[k] = toward_seed[free[static_cast<std::size_t>(k)]];
      }
      const Eigen::MatrixXd P = pinv(Jf);
      const JointVector df =
          P * rhs + (Eigen::MatrixXd::Identity(nf, nf) - P * Jf) * seed_f;

      bool violated = false;
      for (Eigen::Index k = 0; k < nf; ++k) {
        const Eigen::Index i = free[static_cast<std::size_t>(k)];
        delta[i] = df[k];
        if (df[k] < lo[i] || df[k] > hi[i]) {
          delta[i] = std::clamp(df[k], lo[i], hi[i]);
          pinned[static_cast<std::size_t>(i)] = true;
          violated = true;
        }
      }
      if (!violated) break;
    }
    return delta;
  }

  std::vector<JointVector> candidates_;
};

IkResult unreachableResult(IkSolverKind kind) {
  IkResult r;
  r.status = IkStatus::Unreachable;
  r.solver = kind;
  r.final_ss = std::numeric_limits<double>::infinity();
  return r;
}

std::uint64_t pinvSeed(const IkRequest& req) { return req.rng_seed; }
std::uint64_t sqpSeed(const IkRequest& req) { return req.rng_seed ^ 0x9E3779B97F4A7C15ULL; }

template <class S>
IkResult runAlone(const KinematicChain& chain, const IkRequest& req, std::uint64_t seed, IkSolverKind kind) {
  validate(chain, req);
  if (unreachable(chain, req)) return unreachableResult(kind);
  const Deadline deadline(req.time_budget, req.iteration_budget);
  S solver(chain, req, seed);
  while (!solver.step()) {
    if (deadline.expired(solver.iterations())) {
      if constexpr (std::is_same_v<S, SqpSolver>) solver.settle();
      break;
    }
  }
  return solver.result(deadline.elapsed());
}

IkResult pickFallback(const IkResult& a, const IkResult& b) {
  IkResult out = (b.final_ss < a.final_ss) ? b : a;
  out.status = IkStatus::TimedOut;
  out.solution.reset();
  return out;
}

}  // namespace

std::string_view to_string(IkStatus status) {
  switch (status) {
    case IkStatus::Converged: return "converged";
    case IkStatus::TimedOut: return "timed_out";
    case IkStatus::Unreachable: return "unreachable";
  }
  return "unknown";
}

std::string_view to_string(IkSolverKind kind) {
  return kind == IkSolverKind::Pseudoinverse ? "pseudoinverse" : "sqp_ss";
}

PoseError pose_error(const RigidTransform& current, const RigidTransform& target) {
  PoseError e;
  e.head<3>() = target.translation - current.translation;
  const Eigen::AngleAxisd aa(Eigen::Matrix3d(current.rotation.transpose() * target.rotation));
  e.tail<3>() = aa.angle() * aa.axis();
  return e;
}

double ss_metric(const PoseError& err) { return err.squaredNorm(); }

bool within_tolerance(const PoseError& err, double pos_tol, double rot_tol) {
  return err.head<3>().norm() <= pos_tol && err.tail<3>().norm() <= rot_tol;
}

std::optional<std::size_t> select_min_seed_distance(const std::vector<JointVector>& candidates,
                                                    const JointVector& seed) {
  std::optional<std::size_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double d = (candidates[i] - seed).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

IkResult solve_pinv(const KinematicChain& chain, const IkRequest& req) {
  return runAlone<PinvSolver>(chain, req, pinvSeed(req), IkSolverKind::Pseudoinverse);
}

IkResult solve_sqp_ss(const KinematicChain& chain, const IkRequest& req) {
  return runAlone<SqpSolver>(chain, req, sqpSeed(req), IkSolverKind::SqpSs);
}

IkResult solve_race(const KinematicChain& chain, const IkRequest& req, RaceMode mode) {
  validate(chain, req);
  if (unreachable(chain, req)) return unreachableResult(IkSolverKind::Pseudoinverse);

  const Deadline deadline(req.time_budget, req.iteration_budget);
  PinvSolver pinv_solver(chain, req, pinvSeed(req));
  SqpSolver sqp_solver(chain, req, sqpSeed(req));

  if (mode == RaceMode::Sequential) {
    bool pinv_done = false, sqp_done = false;
    const auto budgetLeft = [&](const Solver& s) { return !deadline.expired(s.iterations()); };
    while (!(pinv_done && sqp_done)) {
      if (!pinv_done) {
        pinv_done = pinv_solver.step() || !budgetLeft(pinv_solver);
        if (pinv_solver.converged()) return pinv_solver.result(deadline.elapsed());
      }
      if (!sqp_done) {
        sqp_done = sqp_solver.step();
        if (!sqp_done && !budgetLeft(sqp_solver)) {
          sqp_solver.settle();
          sqp_done = true;
        }
        if (sqp_solver.converged()) return sqp_solver.result(deadline.elapsed());
      }
    }
    const double elapsed = deadline.elapsed();
    return pickFallback(pinv_solver.result(elapsed), sqp_solver.result(elapsed));
  }

  std::atomic<bool> stop{false};
  std::mutex slot_mutex;
  std::optional<IkResult> winner;

  const auto worker = [&](Solver& solver, bool is_sqp) {
    while (!stop.load(std::memory_order_relaxed)) {
      if (solver.step()) break;
      if (deadline.expired(solver.iterations())) {
        if (is_sqp) static_cast<SqpSolver&>(solver).settle();
        break;
      }
    }
    if (solver.converged()) {
      std::lock_guard lock(slot_mutex);
      if (!winner) {
        winner = solver.result(deadline.elapsed());
        stop.store(true, std::memory_order_relaxed);
      }
    }
  };
  {
    std::jthread a(worker, std::ref(static_cast<Solver&>(pinv_solver)), false);
    std::jthread b(worker, std::ref(static_cast<Solver&>(sqp_solver)), true);
  }
  if (winner) return *winner;
  const double elapsed = deadline.elapsed();
  return pickFallback(pinv_solver.result(elapsed), sqp_solver.result(elapsed));
}

}  // namespace mmkit
