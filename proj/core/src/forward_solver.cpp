#include "softsnap/forward_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

namespace softsnap {
namespace {

constexpr double kDerivativeStep = 1e-7;
constexpr int kBranchScanPoints = 400;
constexpr int kResponseGridPoints = 16;
// Largest admissible magnitude on the negative side of (-pi, pi].
constexpr double kMaxNegativeAngle = kPi * (1.0 - 1e-12);

// Segment length in the segment's own frame. No argument checks: the solver
// probes slightly past the branch ends when differencing.
double raw_length(const SkeletonConfig& cfg, double alpha, double lambda1, double lambda2) {
  const auto [s1, s2] = threading_points(cfg, {Pose2{}, alpha}, lambda1, lambda2);
  return distance(s1, s2);
}

// Length along a branch parameterized by the non-negative magnitude a.
struct BranchFunction {
  const SkeletonConfig& cfg;
  double lambda1;
  double lambda2;
  int direction;

  double operator()(double a) const { return raw_length(cfg, direction * a, lambda1, lambda2); }

  double slope(double a) const {
    return ((*this)(a + kDerivativeStep) - (*this)(a - kDerivativeStep)) /
           (2.0 * kDerivativeStep);
  }
};

double max_magnitude(int direction) { return direction > 0 ? kPi : kMaxNegativeAngle; }

// Magnitude at which L stops moving monotonically away from L(0) in the given
// direction (first interior extremum), or the domain edge if it never does.
double monotone_extent(const BranchFunction& f) {
  const double limit = max_magnitude(f.direction);
  const double h = limit / kBranchScanPoints;
  double prev = f(0.0);
  double current = f(h);
  const bool decreasing = current <= prev;
  for (int k = 1; k < kBranchScanPoints; ++k) {
    const double next = f((k + 1) * h);
    const bool turned = decreasing ? next > current : next < current;
    if (turned) {
      const double lo = (k - 1) * h;
      const double hi = (k + 1) * h;
      const double sign = decreasing ? 1.0 : -1.0;
      const auto [x, fx] = boost::math::tools::brent_find_minima(
          [&](double a) { return sign * f(a); }, lo, hi, std::numeric_limits<double>::digits);
      (void)fx;
      return x;
    }
    prev = current;
    current = next;
  }
  return limit;
}

// Solves f(a) = target on [0, extent] where f is monotone; clamps to the
// nearer end when the target is out of range. Safeguarded Newton-Raphson with
// a central-difference slope, bisection whenever Newton leaves the bracket.
double invert_monotone(const BranchFunction& f, double extent, double target) {
  const double f0 = f(0.0);
  const double f1 = f(extent);
  const double lo_value = std::min(f0, f1);
  const double hi_value = std::max(f0, f1);
  if (target <= lo_value) return f0 <= f1 ? 0.0 : extent;
  if (target >= hi_value) return f0 >= f1 ? 0.0 : extent;

  double lo = 0.0;
  double hi = extent;
  double r_lo = f0 - target;
  double x = extent * (f0 - target) / (f0 - f1);
  for (int iter = 0; iter < 200; ++iter) {
    const double r = f(x) - target;
    if (r == 0.0) return x;
    if ((r < 0.0) == (r_lo < 0.0)) {
      lo = x;
      r_lo = r;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) break;
    const double slope = f.slope(x);
    double next = slope != 0.0 ? x - r / slope : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, x)) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

struct BranchKey {
  std::array<double, 4> values;
  friend auto operator<=>(const BranchKey&, const BranchKey&) = default;
};

SegmentBranch compute_branch(const SkeletonConfig& cfg, double lambda1, double lambda2) {
  SegmentBranch branch;
  branch.lambda1 = lambda1;
  branch.lambda2 = lambda2;
  branch.direction = shortening_direction(lambda1, lambda2);
  const BranchFunction f{cfg, lambda1, lambda2, branch.direction};
  const double extent = monotone_extent(f);
  branch.end_angle = branch.direction * extent;
  branch.straight_length = f(0.0);
  branch.min_length = std::min(branch.straight_length, f(extent));
  return branch;
}

struct SegmentState {
  std::vector<double> magnitudes;
  std::vector<double> lengths;
  double total = 0.0;
  double tension = 0.0;
};

}  // namespace

int shortening_direction(double lambda1, double lambda2) {
  const double sum = lambda1 + lambda2;
  if (std::abs(sum) > 1e-12) return sum > 0.0 ? -1 : 1;
  const double spread = lambda2 - lambda1;
  if (std::abs(spread) > 1e-12) return spread > 0.0 ? 1 : -1;
  throw Error(ErrorCode::ambiguous_inversion,
              "segment threaded through both rib centers: bending direction is undetermined");
}

SegmentBranch shortening_branch(const SkeletonConfig& cfg, double lambda1, double lambda2) {
  // L depends only on s, the blend threshold and the two offsets.
  thread_local std::map<BranchKey, SegmentBranch> cache;
  const BranchKey key{{cfg.segment_arc_length, cfg.blend_threshold, lambda1, lambda2}};
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  SegmentBranch branch = compute_branch(cfg, lambda1, lambda2);
  if (cache.size() > 4096) cache.clear();
  cache.emplace(key, branch);
  return branch;
}

double length_to_angle(const SkeletonConfig& cfg, int segment_index,
                       const ThreadingPattern& pattern, double target_segment_length,
                       std::optional<int> sign_hint) {
  if (segment_index < 0 || segment_index >= cfg.segment_count() ||
      pattern.size() != static_cast<std::size_t>(cfg.n_ribs)) {
    throw Error(ErrorCode::invalid_argument, "segment index out of range for pattern");
  }
  if (!(target_segment_length > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "target segment length must be positive");
  }
  const double lambda1 = pattern.entry(segment_index);
  const double lambda2 = pattern.exit(segment_index);
  // Range checks on the offsets.
  (void)segment_string_length(cfg, Pose2{}, 0.0, lambda1, lambda2);

  int direction = 0;
  if (sign_hint) {
    if (*sign_hint != 1 && *sign_hint != -1) {
      throw Error(ErrorCode::invalid_argument, "sign hint must be +1 or -1");
    }
    direction = *sign_hint;
  } else {
    const int shortening = shortening_direction(lambda1, lambda2);
    const double straight = raw_length(cfg, 0.0, lambda1, lambda2);
    direction = target_segment_length <= straight ? shortening : -shortening;
  }
  const BranchFunction f{cfg, lambda1, lambda2, direction};
  const double extent = monotone_extent(f);
  return direction * invert_monotone(f, extent, target_segment_length);
}

double tension_response(const SkeletonConfig& cfg, const SegmentBranch& branch,
                        double tension) {
  const double extent = std::abs(branch.end_angle);
  if (!(tension > 0.0) || extent == 0.0) return 0.0;
  const BranchFunction f{cfg, branch.lambda1, branch.lambda2, branch.direction};
  auto objective = [&](double a) { return a * a + tension * f(a); };
  auto stationarity = [&](double a) { return 2.0 * a + tension * f.slope(a); };

  const double h = extent / kResponseGridPoints;
  int best = 0;
  double best_value = objective(0.0);
  for (int k = 1; k <= kResponseGridPoints; ++k) {
    const double value = objective(k * h);
    if (value < best_value) {
      best_value = value;
      best = k;
    }
  }
  double lo = std::max(best - 1, 0) * h;
  const double hi = std::min(best + 1, kResponseGridPoints) * h;
  double g_lo = stationarity(lo);
  const double g_hi = stationarity(hi);
  if (best == 0 && g_lo >= -1e-9 * tension) {
    // Zero slope at the straight state (crossing thread): the segment stays
    // straight unless the tension is past its buckling point.
    lo = hi / 64.0;
    g_lo = stationarity(lo);
    if (g_lo >= 0.0 && objective(lo) >= best_value) return 0.0;
  }
  if (g_lo < 0.0 && g_hi > 0.0) {
    std::uintmax_t max_iter = 100;
    const auto [a, b] = boost::math::tools::toms748_solve(
        stationarity, lo, hi, g_lo, g_hi, boost::math::tools::eps_tolerance<double>(50),
        max_iter);
    const double root = 0.5 * (a + b);
    // Guard against a root that is a local maximum of the objective.
    if (objective(root) <= best_value + 1e-14) return root;
  }
  if (best == kResponseGridPoints && g_hi <= 0.0) return extent;
  const auto [x, fx] = boost::math::tools::brent_find_minima(
      objective, lo, hi, std::numeric_limits<double>::digits / 2);
  (void)fx;
  return x;
}

double shortest_string_length(const SkeletonConfig& cfg, const ThreadingPattern& pattern) {
  cfg.validate();
  pattern.validate(cfg);
  double total = 0.0;
  for (int i = 0; i < cfg.segment_count(); ++i) {
    total += shortening_branch(cfg, pattern.entry(i), pattern.exit(i)).min_length;
  }
  return total;
}

EquilibriumSolution solve_equilibrium(const EquilibriumProblem& problem) {
  const SkeletonConfig& cfg = problem.config;
  cfg.validate();
  problem.pattern.validate(cfg);
  if (!(problem.tolerance > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "tolerance must be positive");
  }
  if (!(problem.target_length > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "target length must be positive");
  }
  const auto n = static_cast<std::size_t>(cfg.segment_count());
  if (problem.initial_alphas && problem.initial_alphas->size() != n) {
    throw Error(ErrorCode::invalid_argument, "initial_alphas has the wrong length");
  }

  std::vector<SegmentBranch> branches;
  std::vector<BranchFunction> functions;
  branches.reserve(n);
  functions.reserve(n);
  double straight_total = 0.0;
  double min_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int seg = static_cast<int>(i);
    branches.push_back(shortening_branch(cfg, problem.pattern.entry(seg),
                                         problem.pattern.exit(seg)));
    functions.push_back({cfg, branches[i].lambda1, branches[i].lambda2, branches[i].direction});
    straight_total += branches[i].straight_length;
    min_total += branches[i].min_length;
  }

  const double target = problem.target_length;
  const double tol = problem.tolerance;

  auto finish = [&](std::vector<double> magnitudes, int iterations) {
    EquilibriumSolution solution;
    solution.iterations = iterations;
    solution.alphas.resize(n);
    solution.segment_lengths.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      solution.alphas[i] = branches[i].direction * magnitudes[i];
      solution.segment_lengths[i] = functions[i](magnitudes[i]);
      solution.energy += solution.alphas[i] * solution.alphas[i];
      solution.achieved_length += solution.segment_lengths[i];
    }
    return solution;
  };

  if (target > straight_total + tol) {
    throw Error(ErrorCode::infeasible_target,
                "target length " + std::to_string(target) +
                    " mm exceeds the straight-state string length " +
                    std::to_string(straight_total) + " mm");
  }
  if (target >= straight_total) return finish(std::vector<double>(n, 0.0), 0);
  if (target < min_total - tol) {
    throw Error(ErrorCode::infeasible_target,
                "target length " + std::to_string(target) +
                    " mm is below the shortest achievable string length " +
                    std::to_string(min_total) + " mm");
  }
  if (target <= min_total) {
    std::vector<double> ends(n);
    for (std::size_t i = 0; i < n; ++i) ends[i] = std::abs(branches[i].end_angle);
    return finish(std::move(ends), 0);
  }

  int iterations = 0;
  auto evaluate = [&](double tension) {
    SegmentState state;
    state.tension = tension;
    state.magnitudes.resize(n);
    state.lengths.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      state.magnitudes[i] = tension_response(cfg, branches[i], tension);
      state.lengths[i] = functions[i](state.magnitudes[i]);
      state.total += state.lengths[i];
    }
    ++iterations;
    return state;
  };

  // Initial tension from the warm start: at equilibrium 2a_i = -nu dL_i/da_i.
  double tension = 0.25;
  if (problem.initial_alphas) {
    std::vector<double> estimates;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = branches[i].direction * (*problem.initial_alphas)[i];
      const double extent = std::abs(branches[i].end_angle);
      if (a > 1e-6 && a < extent - 1e-6) {
        const double slope = functions[i].slope(a);
        if (slope < -1e-12) estimates.push_back(-2.0 * a / slope);
      }
    }
    if (!estimates.empty()) {
      std::nth_element(estimates.begin(), estimates.begin() + estimates.size() / 2,
                       estimates.end());
      tension = estimates[estimates.size() / 2];
    }
  }

  // Bracket: total(nu) is non-increasing in nu.
  SegmentState lo;
  SegmentState hi;
  {
    SegmentState probe = evaluate(tension);
    if (probe.total > target) {
      lo = std::move(probe);
      for (;;) {
        SegmentState next = evaluate(lo.tension * 4.0);
        if (next.total <= target) {
          hi = std::move(next);
          break;
        }
        lo = std::move(next);
        if (lo.tension > 1e15) {
          std::vector<double> ends(n);
          for (std::size_t i = 0; i < n; ++i) ends[i] = std::abs(branches[i].end_angle);
          hi = lo;
          hi.tension = std::numeric_limits<double>::infinity();
          hi.magnitudes = ends;
          hi.total = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            hi.lengths[i] = functions[i](ends[i]);
            hi.total += hi.lengths[i];
          }
          break;
        }
      }
    } else {
      hi = std::move(probe);
      for (;;) {
        const double t = hi.tension / 4.0;
        if (t < 1e-12) {
          lo.tension = 0.0;
          lo.magnitudes.assign(n, 0.0);
          lo.lengths.resize(n);
          lo.total = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            lo.lengths[i] = branches[i].straight_length;
            lo.total += lo.lengths[i];
          }
          break;
        }
        SegmentState next = evaluate(t);
        if (next.total > target) {
          lo = std::move(next);
          break;
        }
        hi = std::move(next);
      }
    }
  }

  // Illinois regula falsi on the tension, with a bisection step whenever the
  // bracket fails to halve. Stops once successive segment lengths move by no
  // more than tol and the constraint holds to tol/1000.
  const double tight = 1e-3 * tol;
  std::vector<double> previous = hi.lengths;
  SegmentState current = hi;
  double f_lo = lo.total - target;
  double f_hi = hi.total - target;
  int last_replaced = 0;  // -1: lo, +1: hi
  int slow_steps = 0;
  bool converged = false;
  while (iterations < problem.max_iterations) {
    const double width = hi.tension - lo.tension;
    double next_tension;
    if (!std::isfinite(hi.tension)) {
      next_tension = 4.0 * lo.tension;
    } else if (slow_steps >= 2) {
      next_tension = lo.tension > 0.0 ? std::sqrt(lo.tension * hi.tension)
                                      : 0.5 * (lo.tension + hi.tension);
      slow_steps = 0;
    } else {
      next_tension = (lo.tension * f_hi - hi.tension * f_lo) / (f_hi - f_lo);
    }
    if (!(next_tension > lo.tension && next_tension < hi.tension)) {
      next_tension = 0.5 * (lo.tension + hi.tension);
    }

    current = evaluate(next_tension);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      change = std::max(change, std::abs(current.lengths[i] - previous[i]));
    }
    previous = current.lengths;
    const double f = current.total - target;
    if (std::abs(f) <= tight && change <= tol) {
      converged = true;
      break;
    }
    if (f > 0.0) {
      lo = current;
      f_lo = f;
      if (last_replaced == -1) f_hi *= 0.5;
      last_replaced = -1;
    } else {
      hi = current;
      f_hi = f;
      if (last_replaced == 1) f_lo *= 0.5;
      last_replaced = 1;
    }
    const double new_width = hi.tension - lo.tension;
    slow_steps = new_width > 0.5 * width ? slow_steps + 1 : 0;
    if (std::isfinite(hi.tension) &&
        new_width <= 8.0 * std::numeric_limits<double>::epsilon() * hi.tension) {
      // Tension resolved to machine precision; the remaining gap (response
      // noise or a jump in one segment) is closed below.
      converged = true;
      break;
    }
  }

  // Close the constraint exactly: move the residual along the direction the
  // segment lengths travel as tension changes, then invert each length.
  std::vector<double> lengths = current.lengths;
  std::vector<double> weights(n, 0.0);
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    weights[i] = std::abs(lo.lengths[i] - hi.lengths[i]);
    weight_sum += weights[i];
  }
  std::vector<double> magnitudes = current.magnitudes;
  for (int pass = 0; pass < 4; ++pass) {
    double total = std::accumulate(lengths.begin(), lengths.end(), 0.0);
    const double residual = target - total;
    if (std::abs(residual) <= tight) break;
    std::vector<double> w = weights;
    double w_sum = weight_sum;
    for (std::size_t i = 0; i < n; ++i) {
      const bool at_top = lengths[i] >= branches[i].straight_length && residual > 0.0;
      const bool at_bottom = lengths[i] <= branches[i].min_length && residual < 0.0;
      if (at_top || at_bottom) {
        w_sum -= w[i];
        w[i] = 0.0;
      }
    }
    if (!(w_sum > 0.0)) {
      w_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool at_top = lengths[i] >= branches[i].straight_length && residual > 0.0;
        const bool at_bottom = lengths[i] <= branches[i].min_length && residual < 0.0;
        w[i] = (at_top || at_bottom) ? 0.0 : 1.0;
        w_sum += w[i];
      }
      if (!(w_sum > 0.0)) break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] == 0.0) continue;
      const double wanted = std::clamp(lengths[i] + residual * w[i] / w_sum,
                                       branches[i].min_length, branches[i].straight_length);
      magnitudes[i] =
          invert_monotone(functions[i], std::abs(branches[i].end_angle), wanted);
      lengths[i] = functions[i](magnitudes[i]);
    }
  }

  EquilibriumSolution solution = finish(std::move(magnitudes), iterations);
  if (!converged || std::abs(solution.achieved_length - target) > tol) {
    throw ConvergenceError("equilibrium solve did not converge after " +
                               std::to_string(iterations) + " iterations",
                           std::move(solution));
  }
  return solution;
}

int sweep_step_count(double contraction_max, double step) {
  if (contraction_max == 0.0) return 1;
  return static_cast<int>(std::floor(contraction_max / step + 1e-9)) + 1;
}

SweepResult sweep_contraction(const EquilibriumProblem& problem, double contraction_max,
                              double step) {
  return sweep_contraction(problem, contraction_max, step, nullptr);
}

SweepResult sweep_contraction(const EquilibriumProblem& problem, double contraction_max,
                              double step, const std::function<bool(const SweepStep&)>& on_step) {
  if (!(contraction_max >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "contraction_max must be non-negative");
  }
  if (!(step > 0.0) || (contraction_max > 0.0 && step > contraction_max)) {
    throw Error(ErrorCode::invalid_argument, "step must satisfy 0 < step <= contraction_max");
  }
  problem.config.validate();
  problem.pattern.validate(problem.config);
  const double original = original_string_length(problem.config, problem.pattern);
  if (!(original - contraction_max > 0.0)) {
    throw Error(ErrorCode::invalid_argument,
                "contraction_max must be shorter than the straight string length");
  }

  SweepResult result;
  EquilibriumProblem current = problem;
  current.initial_alphas.reset();
  const int count = sweep_step_count(contraction_max, step);
  for (int k = 0; k < count; ++k) {
    current.target_length = original - k * step;
    try {
      SweepStep row;
      row.index = k;
      row.target_length = current.target_length;
      row.solution = solve_equilibrium(current);
      row.midpoint = skeleton_midpoint(current.config, row.solution.alphas, current.theta_start);
      current.initial_alphas = row.solution.alphas;
      result.steps.push_back(std::move(row));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::infeasible_target && e.code() != ErrorCode::did_not_converge) {
        throw;
      }
      result.stopped_early = Error(e.code(), e.what());
      break;
    }
    if (on_step && !on_step(result.steps.back())) {
      result.cancelled = true;
      break;
    }
  }
  return result;
}

}  // namespace softsnap
