#include "softsnap/inverse_designer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <thread>
#include <tuple>

#include <boost/math/tools/minima.hpp>

namespace softsnap {
namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();
constexpr int kTensionSamples = 41;
// Tensions below this count as slack (natural log).
constexpr double kZeroTensionLog = -13.815510557964274;  // log(1e-6)
constexpr double kDerivativeStep = 1e-6;

struct Interval {
  double lo;
  double hi;

  double distance_squared(double v) const {
    const double d = v < lo ? lo - v : (v > hi ? v - hi : 0.0);
    return d * d;
  }
};

// Log-tension range over which a segment threaded lambda1 -> lambda2 is
// stationary at `alpha`: from 2 alpha + nu L'(alpha) = 0, or for alpha = 0
// the tensions that do not yet buckle it.
std::optional<Interval> holding_interval(const SkeletonConfig& cfg, double lambda1,
                                         double lambda2, double alpha) {
  const double inf = std::numeric_limits<double>::infinity();
  auto length = [&](double a) {
    return segment_string_length(cfg, Pose2{}, std::clamp(a, -kPi, kPi), lambda1, lambda2);
  };
  const double h = kDerivativeStep;
  if (alpha == 0.0) {
    const double slope = (length(h) - length(-h)) / (2.0 * h);
    if (std::abs(slope) > 1e-6) return Interval{-inf, kZeroTensionLog};
    const double curvature = (length(1e-3) - 2.0 * length(0.0) + length(-1e-3)) / 1e-6;
    if (curvature >= 0.0) return Interval{-inf, inf};
    return Interval{-inf, std::log(-2.0 / curvature)};
  }
  const double slope = (length(alpha + h) - length(alpha - h)) / (2.0 * h);
  const double tension = -2.0 * alpha / slope;
  if (!(tension > 0.0) || !std::isfinite(tension)) return std::nullopt;
  const double v = std::log(tension);
  return Interval{v, v};
}

int hole_index(const SkeletonConfig& cfg, double offset) {
  for (int h = 0; h < cfg.hole_count(); ++h) {
    if (std::abs(cfg.hole_offsets[static_cast<std::size_t>(h)] - offset) <= 1e-9) return h;
  }
  throw Error(ErrorCode::invalid_argument,
              "candidate offset " + std::to_string(offset) + " is not a hole of the skeleton");
}

// Candidate table indexed [segment][entry hole][exit hole]; NaN marks a
// filtered pair.
using LengthTable = std::vector<std::vector<std::vector<double>>>;

LengthTable build_table(const SkeletonConfig& cfg,
                        const std::vector<std::vector<SegmentCandidate>>& per_segment) {
  if (per_segment.size() != static_cast<std::size_t>(cfg.segment_count())) {
    throw Error(ErrorCode::invalid_argument, "need one candidate list per segment");
  }
  const auto m = static_cast<std::size_t>(cfg.hole_count());
  LengthTable table(per_segment.size(),
                    std::vector<std::vector<double>>(
                        m, std::vector<double>(m, std::numeric_limits<double>::quiet_NaN())));
  for (std::size_t seg = 0; seg < per_segment.size(); ++seg) {
    for (const SegmentCandidate& c : per_segment[seg]) {
      const auto e = static_cast<std::size_t>(hole_index(cfg, c.entry_offset));
      const auto x = static_cast<std::size_t>(hole_index(cfg, c.exit_offset));
      table[seg][e][x] = c.string_length;
    }
  }
  return table;
}

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return a > kSaturated - b ? kSaturated : a + b;
}

ThreadingPath make_path(const SkeletonConfig& cfg, const LengthTable& table,
                        const std::vector<int>& holes) {
  ThreadingPath path;
  path.pattern.offsets.reserve(holes.size());
  for (int h : holes) path.pattern.offsets.push_back(cfg.hole_offsets[static_cast<std::size_t>(h)]);
  for (std::size_t seg = 0; seg + 1 < holes.size(); ++seg) {
    path.total_length += table[seg][static_cast<std::size_t>(holes[seg])]
                              [static_cast<std::size_t>(holes[seg + 1])];
  }
  return path;
}

// Best-first enumeration of the k cheapest paths through the layered hole graph
// under per-edge costs. cost[seg][entry][exit] is +inf for missing edges.
struct KBestEntry {
  double cost;
  int prev_hole;
  int prev_rank;
};

std::vector<std::pair<double, std::vector<int>>> k_cheapest_paths(
    const std::vector<std::vector<std::vector<double>>>& cost, int holes, std::size_t k) {
  const std::size_t segments = cost.size();
  // lists[rib][hole] sorted by cost
  std::vector<std::vector<std::vector<KBestEntry>>> lists(
      segments + 1, std::vector<std::vector<KBestEntry>>(static_cast<std::size_t>(holes)));
  for (int h = 0; h < holes; ++h) lists[0][static_cast<std::size_t>(h)].push_back({0.0, -1, -1});

  using Item = std::tuple<double, int, int>;  // cost, predecessor hole, rank
  for (std::size_t seg = 0; seg < segments; ++seg) {
    for (int to = 0; to < holes; ++to) {
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      for (int from = 0; from < holes; ++from) {
        const double edge = cost[seg][static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
        const auto& source = lists[seg][static_cast<std::size_t>(from)];
        if (std::isfinite(edge) && !source.empty()) heap.emplace(source[0].cost + edge, from, 0);
      }
      auto& out = lists[seg + 1][static_cast<std::size_t>(to)];
      while (!heap.empty() && out.size() < k) {
        const auto [c, from, rank] = heap.top();
        heap.pop();
        out.push_back({c, from, rank});
        const auto& source = lists[seg][static_cast<std::size_t>(from)];
        if (static_cast<std::size_t>(rank + 1) < source.size()) {
          const double edge =
              cost[seg][static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
          heap.emplace(source[static_cast<std::size_t>(rank + 1)].cost + edge, from, rank + 1);
        }
      }
    }
  }

  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (int h = 0; h < holes; ++h) {
    const auto& last = lists[segments][static_cast<std::size_t>(h)];
    if (!last.empty()) heap.emplace(last[0].cost, h, 0);
  }
  std::vector<std::pair<double, std::vector<int>>> out;
  while (!heap.empty() && out.size() < k) {
    const auto [c, hole, rank] = heap.top();
    heap.pop();
    std::vector<int> path(segments + 1);
    int h = hole;
    int r = rank;
    for (std::size_t rib = segments + 1; rib-- > 0;) {
      path[rib] = h;
      const KBestEntry& e = lists[rib][static_cast<std::size_t>(h)][static_cast<std::size_t>(r)];
      h = e.prev_hole;
      r = e.prev_rank;
    }
    out.emplace_back(c, std::move(path));
    const auto& last = lists[segments][static_cast<std::size_t>(hole)];
    if (static_cast<std::size_t>(rank + 1) < last.size()) {
      heap.emplace(last[static_cast<std::size_t>(rank + 1)].cost, hole, rank + 1);
    }
  }
  return out;
}

void check_targets(const SkeletonConfig& cfg, const std::vector<double>& targets) {
  if (targets.size() != static_cast<std::size_t>(cfg.segment_count())) {
    throw Error(ErrorCode::invalid_argument,
                "expected " + std::to_string(cfg.segment_count()) + " target angles, got " +
                    std::to_string(targets.size()));
  }
  for (double a : targets) {
    if (!(a > -kPi && a <= kPi)) {
      throw Error(ErrorCode::invalid_argument,
                  "target angle outside (-pi, pi]: " + std::to_string(a));
    }
  }
}

bool ranks_before(const DesignResult& a, const DesignResult& b) {
  if (a.residual != b.residual) return a.residual < b.residual;
  return a.pattern < b.pattern;
}

}  // namespace

std::vector<SegmentCandidate> enumerate_segment_candidates(const SkeletonConfig& cfg,
                                                           double target_alpha) {
  cfg.validate();
  if (!(target_alpha > -kPi && target_alpha <= kPi)) {
    throw Error(ErrorCode::invalid_argument,
                "target angle outside (-pi, pi]: " + std::to_string(target_alpha));
  }
  std::vector<SegmentCandidate> out;
  for (double entry : cfg.hole_offsets) {
    for (double exit : cfg.hole_offsets) {
      const double bent = segment_string_length(cfg, Pose2{}, target_alpha, entry, exit);
      const double straight = segment_string_length(cfg, Pose2{}, 0.0, entry, exit);
      if (bent <= straight) out.push_back({entry, exit, bent});
    }
  }
  return out;
}

std::uint64_t count_paths(const SkeletonConfig& cfg,
                          const std::vector<std::vector<SegmentCandidate>>& per_segment) {
  const LengthTable table = build_table(cfg, per_segment);
  const auto m = static_cast<std::size_t>(cfg.hole_count());
  std::vector<std::uint64_t> ways(m, 1);
  for (const auto& seg : table) {
    std::vector<std::uint64_t> next(m, 0);
    for (std::size_t e = 0; e < m; ++e) {
      for (std::size_t x = 0; x < m; ++x) {
        if (!std::isnan(seg[e][x])) next[x] = saturating_add(next[x], ways[e]);
      }
    }
    ways = std::move(next);
  }
  std::uint64_t total = 0;
  for (std::uint64_t w : ways) total = saturating_add(total, w);
  return total;
}

std::vector<ThreadingPath> backtrack_paths(
    const SkeletonConfig& cfg, const std::vector<std::vector<SegmentCandidate>>& per_segment,
    std::size_t max_paths) {
  const LengthTable table = build_table(cfg, per_segment);
  const int m = cfg.hole_count();
  const std::size_t segments = table.size();

  std::vector<ThreadingPath> paths;
  std::vector<int> holes(segments + 1, 0);
  // Depth-first over ribs; holes are visited in ascending offset order, so
  // paths come out lexicographically sorted.
  auto extend = [&](auto&& self, std::size_t rib) -> void {
    if (paths.size() >= max_paths) return;
    if (rib == segments) {
      paths.push_back(make_path(cfg, table, holes));
      return;
    }
    const auto from = static_cast<std::size_t>(holes[rib]);
    for (int to = 0; to < m && paths.size() < max_paths; ++to) {
      if (std::isnan(table[rib][from][static_cast<std::size_t>(to)])) continue;
      holes[rib + 1] = to;
      self(self, rib + 1);
    }
  };
  for (int first = 0; first < m && paths.size() < max_paths; ++first) {
    holes[0] = first;
    extend(extend, 0);
  }
  if (paths.empty()) {
    throw Error(ErrorCode::no_valid_path,
                "no hole-consistent threading path passes the length filter");
  }
  return paths;
}

std::vector<ThreadingPath> ranked_paths(
    const SkeletonConfig& cfg, const std::vector<std::vector<SegmentCandidate>>& per_segment,
    const std::vector<double>& target_alphas, std::size_t max_paths) {
  const LengthTable table = build_table(cfg, per_segment);
  check_targets(cfg, target_alphas);
  const auto m = static_cast<std::size_t>(cfg.hole_count());
  const std::size_t segments = table.size();
  const double inf = std::numeric_limits<double>::infinity();

  // Range of log-tension under which each segment holds its target angle.
  // An empty optional marks a pair that cannot be held there at all.
  std::vector<std::vector<std::vector<std::optional<Interval>>>> hold(
      segments, std::vector<std::vector<std::optional<Interval>>>(m,
                    std::vector<std::optional<Interval>>(m)));
  double grid_lo = inf;
  double grid_hi = -inf;
  for (std::size_t seg = 0; seg < segments; ++seg) {
    for (std::size_t e = 0; e < m; ++e) {
      for (std::size_t x = 0; x < m; ++x) {
        if (std::isnan(table[seg][e][x])) continue;
        hold[seg][e][x] = holding_interval(cfg, cfg.hole_offsets[e], cfg.hole_offsets[x],
                                           target_alphas[seg]);
        if (const auto& h = hold[seg][e][x]) {
          for (double v : {h->lo, h->hi}) {
            if (std::isfinite(v)) {
              grid_lo = std::min(grid_lo, v);
              grid_hi = std::max(grid_hi, v);
            }
          }
        }
      }
    }
  }
  if (!std::isfinite(grid_lo)) grid_lo = grid_hi = kZeroTensionLog;

  // Candidate paths: the cheapest ones at each tension of a grid spanning every
  // holding tension, later rescored at their own best tension.
  std::map<std::vector<int>, double> proxy;
  std::vector<std::vector<std::vector<double>>> cost(
      segments, std::vector<std::vector<double>>(m, std::vector<double>(m, inf)));
  for (int k = 0; k < kTensionSamples; ++k) {
    const double log_tension =
        grid_lo + (grid_hi - grid_lo) * k / (kTensionSamples - 1);
    for (std::size_t seg = 0; seg < segments; ++seg) {
      for (std::size_t e = 0; e < m; ++e) {
        for (std::size_t x = 0; x < m; ++x) {
          const auto& h = hold[seg][e][x];
          cost[seg][e][x] = h ? h->distance_squared(log_tension) : inf;
        }
      }
    }
    for (auto& [c, holes] : k_cheapest_paths(cost, static_cast<int>(m), max_paths)) {
      proxy.emplace(std::move(holes), 0.0);
    }
    if (grid_hi == grid_lo) break;
  }

  for (auto& [holes, score] : proxy) {
    auto total = [&](double log_tension) {
      double sum = 0.0;
      for (std::size_t seg = 0; seg < segments; ++seg) {
        sum += hold[seg][static_cast<std::size_t>(holes[seg])]
                   [static_cast<std::size_t>(holes[seg + 1])]->distance_squared(log_tension);
      }
      return sum;
    };
    // Convex in the log-tension.
    std::uintmax_t iterations = 100;
    score = boost::math::tools::brent_find_minima(total, grid_lo - 1.0, grid_hi + 1.0, 40,
                                                  iterations).second;
  }

  std::vector<std::pair<double, const std::vector<int>*>> order;
  order.reserve(proxy.size());
  for (const auto& [holes, c] : proxy) order.emplace_back(c, &holes);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return *a.second < *b.second;
  });
  if (order.size() > max_paths) order.resize(max_paths);

  std::vector<ThreadingPath> paths;
  paths.reserve(order.size());
  for (const auto& [c, holes] : order) paths.push_back(make_path(cfg, table, *holes));
  if (paths.empty()) {
    // Nothing can be held at a common tension; fall back to enumeration order.
    return backtrack_paths(cfg, per_segment, max_paths);
  }
  return paths;
}

DesignResult evaluate_path(const SkeletonConfig& cfg, const ThreadingPath& path,
                           const std::vector<double>& target_alphas) {
  EquilibriumProblem problem;
  problem.config = cfg;
  problem.pattern = path.pattern;
  problem.target_length = std::min(path.total_length, original_string_length(cfg, path.pattern));
  const EquilibriumSolution solution = solve_equilibrium(problem);

  DesignResult result;
  result.pattern = path.pattern;
  result.total_length = path.total_length;
  result.achieved_alphas = solution.alphas;
  double sum = 0.0;
  for (std::size_t i = 0; i < target_alphas.size(); ++i) {
    const double d = solution.alphas[i] - target_alphas[i];
    sum += d * d;
  }
  result.residual = std::sqrt(sum);
  return result;
}

DesignOutcome design_with_alternates(const DesignQuery& query) {
  const SkeletonConfig& cfg = query.config;
  cfg.validate();
  check_targets(cfg, query.target_alphas);
  if (query.max_candidates == 0) {
    throw Error(ErrorCode::invalid_argument, "max_candidates must be positive");
  }

  std::vector<std::vector<SegmentCandidate>> per_segment;
  per_segment.reserve(query.target_alphas.size());
  for (double target : query.target_alphas) {
    per_segment.push_back(enumerate_segment_candidates(cfg, target));
  }

  DesignOutcome outcome;
  outcome.valid_paths = count_paths(cfg, per_segment);
  if (outcome.valid_paths == 0) {
    if (query.strict_filter) {
      throw Error(ErrorCode::no_valid_path,
                  "no hole-consistent threading path passes the length filter");
    }
    // Best effort: every pair, scored at its bent length.
    outcome.relaxed = true;
    for (std::size_t seg = 0; seg < per_segment.size(); ++seg) {
      per_segment[seg].clear();
      for (double entry : cfg.hole_offsets) {
        for (double exit : cfg.hole_offsets) {
          per_segment[seg].push_back(
              {entry, exit,
               segment_string_length(cfg, Pose2{}, query.target_alphas[seg], entry, exit)});
        }
      }
    }
    outcome.valid_paths = count_paths(cfg, per_segment);
  }
  outcome.exhaustive = outcome.valid_paths <= query.max_candidates;
  const std::vector<ThreadingPath> paths =
      outcome.exhaustive
          ? backtrack_paths(cfg, per_segment, query.max_candidates)
          : ranked_paths(cfg, per_segment, query.target_alphas, query.max_candidates);

  // Candidates are independent; each slot is written by exactly one worker, so
  // the reduction below sees the same data whatever the schedule.
  std::vector<std::optional<DesignResult>> results(paths.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < paths.size(); i = next++) {
      try {
        results[i] = evaluate_path(cfg, paths[i], query.target_alphas);
      } catch (const Error&) {
        // Candidate cannot be solved; it simply does not rank.
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned workers = query.workers != 0 ? query.workers : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(std::max<std::size_t>(paths.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<DesignResult> ranked;
  for (auto& r : results) {
    if (r) {
      r->candidates_evaluated = paths.size();
      ranked.push_back(std::move(*r));
    }
  }
  if (ranked.empty()) {
    throw Error(ErrorCode::all_candidates_failed,
                "none of the " + std::to_string(paths.size()) +
                    " candidate threadings produced an equilibrium");
  }
  std::sort(ranked.begin(), ranked.end(), ranks_before);

  // Residuals within rank_tolerance of the best are ties; prefer the
  // lexicographically smallest pattern among them.
  const double cutoff = ranked.front().residual + query.rank_tolerance;
  std::size_t chosen = 0;
  for (std::size_t i = 1; i < ranked.size() && ranked[i].residual <= cutoff; ++i) {
    if (ranked[i].pattern < ranked[chosen].pattern) chosen = i;
  }
  outcome.best = ranked[chosen];
  for (std::size_t i = 0; i < ranked.size() && outcome.alternates.size() < query.alternates; ++i) {
    if (i != chosen) outcome.alternates.push_back(ranked[i]);
  }
  return outcome;
}

DesignResult design(const DesignQuery& query) { return design_with_alternates(query).best; }

}  // namespace softsnap
