#include "softsnap/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "softsnap/error.hpp"

namespace softsnap {
namespace {

constexpr double kOffsetSlack = 1e-12;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::invalid_argument, what);
}

// Advances along a constant-curvature spine of length arc_length that turns by
// alpha. Returns the end pose.
Pose2 advance(const Pose2& base, double alpha, double arc_length, double blend_threshold) {
  if (std::abs(alpha) >= blend_threshold) {
    const double radius = arc_length / alpha;  // signed
    const double cx = base.x - radius * std::cos(base.theta);
    const double cy = base.y - radius * std::sin(base.theta);
    return {cx + radius * std::cos(base.theta + alpha),
            cy + radius * std::sin(base.theta + alpha), base.theta + alpha};
  }
  // Chord of the nearly straight arc: leaves at half the turn, length from the
  // sinc series (error O(alpha^4)).
  const double chord = arc_length * (1.0 - alpha * alpha / 24.0);
  const double direction = base.theta + 0.5 * alpha + 0.5 * kPi;
  return {base.x + chord * std::cos(direction), base.y + chord * std::sin(direction),
          base.theta + alpha};
}

void check_offset(const SkeletonConfig& cfg, double lambda) {
  if (!(std::abs(lambda) <= 0.5 * cfg.rib_length + kOffsetSlack)) {
    invalid("offset exceeds rib half-length: " + std::to_string(lambda));
  }
}

}  // namespace

void SkeletonConfig::validate() const {
  if (n_ribs < 2) invalid("n_ribs must be at least 2");
  if (!(rib_length > 0.0)) invalid("rib_length must be positive");
  if (!(segment_arc_length > 0.0)) invalid("segment_arc_length must be positive");
  if (!(blend_threshold > 0.0)) invalid("blend_threshold must be positive");
  if (hole_offsets.empty()) invalid("hole_offsets must not be empty");
  for (std::size_t i = 0; i < hole_offsets.size(); ++i) {
    if (!std::isfinite(hole_offsets[i])) invalid("hole offsets must be finite");
    if (std::abs(hole_offsets[i]) > 0.5 * rib_length + kOffsetSlack) {
      invalid("hole offset exceeds rib half-length: " + std::to_string(hole_offsets[i]));
    }
    if (i > 0 && !(hole_offsets[i] > hole_offsets[i - 1])) {
      invalid("hole_offsets must be strictly increasing");
    }
  }
}

bool SkeletonConfig::is_hole(double offset) const {
  return std::any_of(hole_offsets.begin(), hole_offsets.end(),
                     [offset](double h) { return std::abs(h - offset) <= 1e-9; });
}

SkeletonConfig default_skeleton_config() { return SkeletonConfig{}; }

void ThreadingPattern::validate(const SkeletonConfig& cfg) const {
  if (offsets.size() != static_cast<std::size_t>(cfg.n_ribs)) {
    invalid("pattern has " + std::to_string(offsets.size()) + " offsets, expected " +
            std::to_string(cfg.n_ribs));
  }
  for (double offset : offsets) {
    if (!cfg.is_hole(offset)) {
      invalid("pattern offset " + std::to_string(offset) + " is not a hole of the skeleton");
    }
  }
}

Pose2 segment_end_pose(const SkeletonConfig& cfg, const SegmentGeometry& segment) {
  return advance(segment.base_pose, segment.alpha, cfg.segment_arc_length,
                 cfg.blend_threshold);
}

Point2 spine_point(const SkeletonConfig& cfg, const SegmentGeometry& segment, double t) {
  return advance(segment.base_pose, t * segment.alpha, t * cfg.segment_arc_length,
                 cfg.blend_threshold)
      .position();
}

std::pair<Point2, Point2> threading_points(const SkeletonConfig& cfg,
                                           const SegmentGeometry& segment,
                                           double lambda1, double lambda2) {
  const Pose2 end = segment_end_pose(cfg, segment);
  // Holes sit on the ribs, i.e. along the radial direction of the arc.
  const Point2 s1 = segment.base_pose.position() + lambda1 * heading(segment.base_pose.theta);
  const Point2 s2 = end.position() + lambda2 * heading(end.theta);
  return {s1, s2};
}

double segment_string_length(const SkeletonConfig& cfg, const Pose2& base_pose,
                             double alpha, double lambda1, double lambda2) {
  check_offset(cfg, lambda1);
  check_offset(cfg, lambda2);
  if (!(std::abs(alpha) <= kPi + 1e-12)) {
    invalid("bending angle outside (-pi, pi]: " + std::to_string(alpha));
  }
  const auto [s1, s2] = threading_points(cfg, {base_pose, alpha}, lambda1, lambda2);
  return distance(s1, s2);
}

double total_string_length(const SkeletonConfig& cfg, const ThreadingPattern& pattern,
                           std::span<const double> alphas) {
  if (alphas.size() != static_cast<std::size_t>(cfg.segment_count())) {
    invalid("expected " + std::to_string(cfg.segment_count()) + " bending angles, got " +
            std::to_string(alphas.size()));
  }
  if (pattern.size() != static_cast<std::size_t>(cfg.n_ribs)) {
    invalid("pattern length does not match n_ribs");
  }
  Pose2 pose{0.0, 0.0, kDefaultThetaStart};
  double total = 0.0;
  for (int i = 0; i < cfg.segment_count(); ++i) {
    const double alpha = alphas[static_cast<std::size_t>(i)];
    total += segment_string_length(cfg, pose, alpha, pattern.entry(i), pattern.exit(i));
    pose = segment_end_pose(cfg, {pose, alpha});
  }
  return total;
}

double original_string_length(const SkeletonConfig& cfg, const ThreadingPattern& pattern) {
  const std::vector<double> zeros(static_cast<std::size_t>(cfg.segment_count()), 0.0);
  return total_string_length(cfg, pattern, zeros);
}

ModuleState forward_kinematics(const SkeletonConfig& cfg, std::span<const double> alphas,
                               double theta_start, int samples_per_segment) {
  if (alphas.size() != static_cast<std::size_t>(cfg.segment_count())) {
    invalid("expected " + std::to_string(cfg.segment_count()) + " bending angles, got " +
            std::to_string(alphas.size()));
  }
  if (samples_per_segment < 1) invalid("samples_per_segment must be positive");

  ModuleState state;
  state.alphas.assign(alphas.begin(), alphas.end());
  state.rib_poses.reserve(static_cast<std::size_t>(cfg.n_ribs));
  state.centerline.reserve(alphas.size() * static_cast<std::size_t>(samples_per_segment) + 1);

  Pose2 pose{0.0, 0.0, theta_start};
  state.rib_poses.push_back(pose);
  state.centerline.push_back(pose.position());
  for (double alpha : alphas) {
    const SegmentGeometry segment{pose, alpha};
    for (int k = 1; k < samples_per_segment; ++k) {
      state.centerline.push_back(
          spine_point(cfg, segment, static_cast<double>(k) / samples_per_segment));
    }
    pose = segment_end_pose(cfg, segment);
    state.rib_poses.push_back(pose);
    state.centerline.push_back(pose.position());
  }
  return state;
}

Point2 skeleton_midpoint(const SkeletonConfig& cfg, std::span<const double> alphas,
                         double theta_start) {
  const ModuleState state = forward_kinematics(cfg, alphas, theta_start, 1);
  const int segments = cfg.segment_count();
  const int index = segments / 2;
  if (segments % 2 == 0) return state.rib_poses[static_cast<std::size_t>(index)].position();
  return spine_point(cfg,
                     {state.rib_poses[static_cast<std::size_t>(index)],
                      alphas[static_cast<std::size_t>(index)]},
                     0.5);
}

double calibrate_segment_arc_length(const SkeletonConfig& cfg,
                                    const ThreadingPattern& pattern,
                                    std::span<const double> alphas, double target_total) {
  SkeletonConfig trial = cfg;
  auto residual = [&](double s) {
    trial.segment_arc_length = s;
    return total_string_length(trial, pattern, alphas) - target_total;
  };

  double lo = 1e-3;
  double hi = 1.0;
  double f_lo = residual(lo);
  double f_hi = residual(hi);
  for (int k = 0; k < 60 && f_lo * f_hi > 0.0; ++k) {
    lo = hi;
    f_lo = f_hi;
    hi *= 2.0;
    f_hi = residual(hi);
  }
  if (f_lo * f_hi > 0.0) {
    throw Error(ErrorCode::infeasible_target,
                "no segment arc length reproduces the requested total string length");
  }
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      residual, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  return 0.5 * (a + b);
}

}  // namespace softsnap
