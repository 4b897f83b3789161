#include <benchmark/benchmark.h>

#include <vector>

#include "softsnap/forward_solver.hpp"
#include "softsnap/inverse_designer.hpp"
#include "softsnap/skeleton.hpp"

using namespace softsnap;

namespace {

const std::vector<double> kW{10, 10, 10, -10, -10, -10, 10, 10, 10, -10, -10, -10};

EquilibriumProblem w_problem(double contraction) {
  EquilibriumProblem p;
  p.config = default_skeleton_config();
  p.pattern = ThreadingPattern(kW);
  p.target_length = original_string_length(p.config, p.pattern) - contraction;
  return p;
}

std::vector<double> alternating(double amplitude, int n) {
  std::vector<double> a(n);
  for (int i = 0; i < n; ++i) a[i] = (i % 2 == 0 ? 1 : -1) * amplitude;
  return a;
}

}  // namespace

static void BM_SegmentLength(benchmark::State& state) {
  const SkeletonConfig cfg = default_skeleton_config();
  const Pose2 base{0.0, 0.0, kDefaultThetaStart};
  double alpha = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(segment_string_length(cfg, base, alpha, 10.0, -10.0));
    alpha = -alpha;
  }
}
BENCHMARK(BM_SegmentLength);

static void BM_LengthToAngle(benchmark::State& state) {
  const SkeletonConfig cfg = default_skeleton_config();
  const ThreadingPattern pattern(kW);
  for (auto _ : state) {
    benchmark::DoNotOptimize(length_to_angle(cfg, 0, pattern, 14.0));
  }
}
BENCHMARK(BM_LengthToAngle);

static void BM_SolveCold(benchmark::State& state) {
  const EquilibriumProblem p = w_problem(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_equilibrium(p));
}
BENCHMARK(BM_SolveCold)->Arg(10)->Arg(40)->Arg(80)->Unit(benchmark::kMicrosecond);

static void BM_Sweep80(benchmark::State& state) {
  const EquilibriumProblem p = w_problem(0.0);
  for (auto _ : state) benchmark::DoNotOptimize(sweep_contraction(p, 80.0, 1.0));
}
BENCHMARK(BM_Sweep80)->Unit(benchmark::kMillisecond);

static void BM_RankedPaths(benchmark::State& state) {
  const SkeletonConfig cfg = default_skeleton_config();
  const std::vector<double> targets = alternating(30.0 * kPi / 180.0, cfg.segment_count());
  std::vector<std::vector<SegmentCandidate>> per_segment;
  for (double a : targets) per_segment.push_back(enumerate_segment_candidates(cfg, a));
  const auto limit = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ranked_paths(cfg, per_segment, targets, limit));
}
BENCHMARK(BM_RankedPaths)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Design(benchmark::State& state) {
  DesignQuery q;
  q.config = default_skeleton_config();
  q.target_alphas = alternating(30.0 * kPi / 180.0, q.config.segment_count());
  q.max_candidates = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(design(q));
}
BENCHMARK(BM_Design)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
