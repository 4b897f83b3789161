#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "softsnap/error.hpp"
#include "softsnap/skeleton.hpp"

namespace softsnap {

inline constexpr double kDefaultLengthTolerance = 1e-6;
inline constexpr int kDefaultMaxIterations = 500;

struct EquilibriumProblem {
  SkeletonConfig config;
  ThreadingPattern pattern;
  double target_length = 0.0;
  double theta_start = kDefaultThetaStart;
  double tolerance = kDefaultLengthTolerance;
  std::optional<std::vector<double>> initial_alphas;
  int max_iterations = kDefaultMaxIterations;
};

struct EquilibriumSolution {
  std::vector<double> alphas;
  std::vector<double> segment_lengths;
  double energy = 0.0;           // sum of alpha^2
  double achieved_length = 0.0;  // sum of segment_lengths
  int iterations = 0;
};

/// Raised when the outer loop hits its iteration cap; carries the best iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, EquilibriumSolution best)
      : Error(ErrorCode::did_not_converge, message), best_(std::move(best)) {}

  const EquilibriumSolution& best() const noexcept { return best_; }

 private:
  EquilibriumSolution best_;
};

// Sign of alpha that shortens the string across a segment threaded
// lambda1 -> lambda2: -sign(lambda1 + lambda2), or sign(lambda2 - lambda1) for
// crossing threads whose length is even in alpha. Throws ambiguous_inversion
// when both offsets are zero.
int shortening_direction(double lambda1, double lambda2);

// The portion of L(alpha) a segment traverses while its string shortens: from
// alpha = 0 out to the first minimum of L in `direction`.
struct SegmentBranch {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int direction = 1;
  double end_angle = 0.0;  // signed; |end_angle| <= pi
  double straight_length = 0.0;
  double min_length = 0.0;
};

SegmentBranch shortening_branch(const SkeletonConfig& cfg, double lambda1, double lambda2);

/// Angle of segment `segment_index` at which its string length equals
/// `target_segment_length`, searched on the monotone bracket in the hinted
/// direction. Unreachable targets return the closest bracket end.
double length_to_angle(const SkeletonConfig& cfg, int segment_index,
                       const ThreadingPattern& pattern, double target_segment_length,
                       std::optional<int> sign_hint = std::nullopt);

/// Equilibrium angle of a single segment pulled with string tension `tension`:
/// argmin over the branch of alpha^2 + tension * L(alpha).
double tension_response(const SkeletonConfig& cfg, const SegmentBranch& branch, double tension);

/// Shortest total string length reachable with every segment on its branch.
double shortest_string_length(const SkeletonConfig& cfg, const ThreadingPattern& pattern);

/// Minimizes sum(alpha_i^2) subject to sum(L_i) = target_length.
EquilibriumSolution solve_equilibrium(const EquilibriumProblem& problem);

struct SweepStep {
  int index = 0;
  double target_length = 0.0;
  EquilibriumSolution solution;
  Point2 midpoint;
};

struct SweepResult {
  std::vector<SweepStep> steps;
  // Set when the sweep ended before contraction_max; steps holds the feasible prefix.
  std::optional<Error> stopped_early;
  bool cancelled = false;  // on_step returned false
};

/// Solves at L_original, L_original - step, ..., L_original - contraction_max,
/// warm-starting each step from the previous one.
SweepResult sweep_contraction(const EquilibriumProblem& problem, double contraction_max,
                              double step);

/// As above, calling on_step after each solved step; returning false stops
/// the sweep.
SweepResult sweep_contraction(const EquilibriumProblem& problem, double contraction_max,
                              double step, const std::function<bool(const SweepStep&)>& on_step);

/// Number of steps sweep_contraction produces for this range.
int sweep_step_count(double contraction_max, double step);

}  // namespace softsnap
