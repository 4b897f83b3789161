#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "softsnap/forward_solver.hpp"
#include "softsnap/skeleton.hpp"

namespace softsnap {

struct DesignQuery {
  SkeletonConfig config;
  std::vector<double> target_alphas;  // radians, one per segment
  std::size_t max_candidates = 10000;
  double rank_tolerance = 1e-6;
  unsigned workers = 0;  // 0: hardware concurrency
  std::size_t alternates = 5;
  // When no path passes the length filter: throw no_valid_path instead of
  // ranking every hole-consistent path.
  bool strict_filter = false;
};

struct SegmentCandidate {
  double entry_offset = 0.0;
  double exit_offset = 0.0;
  double string_length = 0.0;  // at the segment's target angle

  friend bool operator==(const SegmentCandidate&, const SegmentCandidate&) = default;
};

struct ThreadingPath {
  ThreadingPattern pattern;
  double total_length = 0.0;
};

struct DesignResult {
  ThreadingPattern pattern;
  double total_length = 0.0;
  std::vector<double> achieved_alphas;
  double residual = 0.0;  // L2 distance to the targets, radians
  std::size_t candidates_evaluated = 0;
};

struct DesignOutcome {
  DesignResult best;
  std::vector<DesignResult> alternates;  // next-best distinct patterns
  std::uint64_t valid_paths = 0;         // saturates at UINT64_MAX
  bool exhaustive = false;               // every valid path was evaluated
  bool relaxed = false;                  // nothing passed the filter; ranked unfiltered paths
};

/// Hole pairs whose string does not lengthen when the segment bends to
/// `target_alpha`. Ordered by (entry, exit) offset.
std::vector<SegmentCandidate> enumerate_segment_candidates(const SkeletonConfig& cfg,
                                                           double target_alpha);

/// Hole-consistent threading paths (segment i's exit is segment i+1's entry)
/// in lexicographic offset order, at most max_paths of them. Throws
/// no_valid_path if none exist.
std::vector<ThreadingPath> backtrack_paths(
    const SkeletonConfig& cfg, const std::vector<std::vector<SegmentCandidate>>& per_segment,
    std::size_t max_paths);

/// Number of hole-consistent paths, without enumerating them.
std::uint64_t count_paths(const SkeletonConfig& cfg,
                          const std::vector<std::vector<SegmentCandidate>>& per_segment);

/// The max_paths most promising paths when there are too many to evaluate.
/// At equilibrium every segment feels the same string tension, so paths are
/// ranked by how far apart the tensions that hold each segment at its target
/// angle are (squared log-tension spread), ties broken lexicographically.
std::vector<ThreadingPath> ranked_paths(
    const SkeletonConfig& cfg, const std::vector<std::vector<SegmentCandidate>>& per_segment,
    const std::vector<double>& target_alphas, std::size_t max_paths);

/// Forward-solves one candidate path and scores it against the targets. Paths
/// longer than the straight string are solved at the straight length.
DesignResult evaluate_path(const SkeletonConfig& cfg, const ThreadingPath& path,
                           const std::vector<double>& target_alphas);

DesignOutcome design_with_alternates(const DesignQuery& query);

DesignResult design(const DesignQuery& query);

}  // namespace softsnap
