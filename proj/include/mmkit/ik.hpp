#pragma once

#include "mmkit/kinematics.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace mmkit {

using PoseError = Eigen::Matrix<double, 6, 1>;

struct IkRequest {
  RigidTransform target;
  JointVector seed;
  /// Wall-clock seconds shared by everything the solve does.
  double time_budget = 0.05;
  double pos_tol = 1e-4;
  double rot_tol = 1e-3;
  /// Per-solver iteration cap, 0 for none. When it binds before the clock
  /// does, results are reproducible run to run.
  std::size_t iteration_budget = 0;
  std::uint64_t rng_seed = 0;
};

enum class IkStatus { Converged, TimedOut, Unreachable };
enum class IkSolverKind { Pseudoinverse, SqpSs };

std::string_view to_string(IkStatus status);
std::string_view to_string(IkSolverKind kind);

struct IkResult {
  std::optional<JointVector> solution;
  IkStatus status = IkStatus::TimedOut;
  IkSolverKind solver = IkSolverKind::Pseudoinverse;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  double elapsed = 0.0;
  /// Sum-of-squares pose error at the returned (or last) configuration.
  double final_ss = 0.0;
};

/// (p_target - p_current, axis-angle of R_current^T R_target). The angular
/// part is expressed in the current end-effector frame.
PoseError pose_error(const RigidTransform& current, const RigidTransform& target);

/// Sum of squares of the pose error.
double ss_metric(const PoseError& err);

/// True when both the translational and rotational parts are within tolerance.
bool within_tolerance(const PoseError& err, double pos_tol, double rot_tol);

/**
 * Damped-pseudoinverse Newton iteration with random restarts.
 *
 * A restart is triggered when the error norm improves by less than 1e-12
 * over 10 iterations. Targets beyond the chain's reach sphere come back
 * Unreachable without iterating.
 */
IkResult solve_pinv(const KinematicChain& chain, const IkRequest& req);

/**
 * Minimum joint-motion solve: min |q_seed - q|^2 subject to joint limits and
 * the pose tolerances, by iterated box-constrained Gauss-Newton steps on a
 * penalty merit function. Returns as soon as the run started from the seed
 * converges; otherwise gathers up to kSqpCandidateLimit solutions from random
 * restarts and returns the one closest to the seed.
 */
IkResult solve_sqp_ss(const KinematicChain& chain, const IkRequest& req);

enum class RaceMode {
  /// Two threads with a shared stop flag.
  Threaded,
  /// Alternating single iterations on the calling thread; deterministic.
  Sequential,
};

/// Runs both solvers under one budget; the first converged result wins.
IkResult solve_race(const KinematicChain& chain, const IkRequest& req,
                    RaceMode mode = RaceMode::Threaded);

/// Index of the candidate with the smallest |seed - q|^2, nullopt when empty.
std::optional<std::size_t> select_min_seed_distance(const std::vector<JointVector>& candidates,
                                                    const JointVector& seed);

inline constexpr std::size_t kStallWindow = 10;
inline constexpr double kStallProgress = 1e-12;
inline constexpr double kSingularManipulability = 1e-6;
inline constexpr double kSingularDamping = 1e-3;
inline constexpr double kSqpPenalty = 1e6;
inline constexpr int kMaxBacktracks = 20;
inline constexpr std::size_t kSqpCandidateLimit = 2;

}  // namespace mmkit
