#pragma once

#include <compare>
#include <span>
#include <utility>
#include <vector>

#include "softsnap/geometry.hpp"

namespace softsnap {

// Spine arc length between adjacent ribs, calibrated so the alternating
// +/-10 mm threading held at alternating +/-30 degrees uses 270 mm of string.
// See calibrate_segment_arc_length() and data/default_skeleton.json.
inline constexpr double kCalibratedSegmentArcLength = 15.316165287061936;

// Base orientation that lays the straight module along +x from the origin.
inline constexpr double kDefaultThetaStart = -kPi / 2.0;

inline constexpr int kDefaultCenterlineSamples = 16;

/// Geometry of the passive skeleton. Lengths in mm, angles in radians.
struct SkeletonConfig {
  int n_ribs = 12;
  double rib_length = 25.0;
  double segment_arc_length = kCalibratedSegmentArcLength;
  std::vector<double> hole_offsets{-10.0, -6.5, -3.5, -0.5, 0.5, 3.5, 6.5, 10.0};
  double blend_threshold = 1e-4;

  int segment_count() const { return n_ribs - 1; }
  int hole_count() const { return static_cast<int>(hole_offsets.size()); }

  /// Throws Error(invalid_argument) naming the first violated invariant.
  void validate() const;

  bool is_hole(double offset) const;

  friend bool operator==(const SkeletonConfig&, const SkeletonConfig&) = default;
};

SkeletonConfig default_skeleton_config();

/// One hole offset per rib; segment i threads offsets[i] -> offsets[i + 1].
struct ThreadingPattern {
  std::vector<double> offsets;

  ThreadingPattern() = default;
  explicit ThreadingPattern(std::vector<double> values) : offsets(std::move(values)) {}

  std::size_t size() const { return offsets.size(); }
  double entry(int segment) const { return offsets[static_cast<std::size_t>(segment)]; }
  double exit(int segment) const { return offsets[static_cast<std::size_t>(segment) + 1]; }

  void validate(const SkeletonConfig& cfg) const;

  // Lexicographic on offsets; used for deterministic tie-breaks.
  friend auto operator<=>(const ThreadingPattern&, const ThreadingPattern&) = default;
};

struct SegmentGeometry {
  Pose2 base_pose;
  double alpha = 0.0;
};

/// Pose of the far rib of a segment. Arc construction about the signed-radius
/// center when |alpha| >= blend_threshold, chord of the same arc otherwise.
Pose2 segment_end_pose(const SkeletonConfig& cfg, const SegmentGeometry& segment);

/// Point on the spine a fraction t in [0, 1] of the way along the segment.
Point2 spine_point(const SkeletonConfig& cfg, const SegmentGeometry& segment, double t);

/// Threading points S1 (near rib) and S2 (far rib) for offsets lambda1, lambda2.
std::pair<Point2, Point2> threading_points(const SkeletonConfig& cfg,
                                           const SegmentGeometry& segment,
                                           double lambda1, double lambda2);

/// String length |S1 - S2| across one segment.
double segment_string_length(const SkeletonConfig& cfg, const Pose2& base_pose,
                             double alpha, double lambda1, double lambda2);

/// Sum of segment lengths with base poses chained from the origin.
double total_string_length(const SkeletonConfig& cfg, const ThreadingPattern& pattern,
                           std::span<const double> alphas);

/// total_string_length at the straight state.
double original_string_length(const SkeletonConfig& cfg, const ThreadingPattern& pattern);

struct ModuleState {
  std::vector<double> alphas;
  std::vector<Pose2> rib_poses;
  std::vector<Point2> centerline;
};

ModuleState forward_kinematics(const SkeletonConfig& cfg, std::span<const double> alphas,
                               double theta_start = kDefaultThetaStart,
                               int samples_per_segment = kDefaultCenterlineSamples);

/// Spine point at half the total skeleton length.
Point2 skeleton_midpoint(const SkeletonConfig& cfg, std::span<const double> alphas,
                         double theta_start = kDefaultThetaStart);

/// Solves for the segment arc length s such that `pattern` held at `alphas`
/// has total string length `target_total`. Other fields of `cfg` are kept.
double calibrate_segment_arc_length(const SkeletonConfig& cfg,
                                    const ThreadingPattern& pattern,
                                    std::span<const double> alphas, double target_total);

}  // namespace softsnap
