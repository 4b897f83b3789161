#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "softsnap/forward_solver.hpp"

using namespace softsnap;

namespace {

ThreadingPattern alternating(double first) {
  std::vector<double> offsets;
  for (int i = 0; i < 12; ++i) offsets.push_back(i % 2 == 0 ? first : -first);
  return ThreadingPattern(offsets);
}

ThreadingPattern w_shape() {
  return ThreadingPattern({10, 10, 10, -10, -10, -10, 10, 10, 10, -10, -10, -10});
}

ThreadingPattern random_pattern(const SkeletonConfig& cfg, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> hole(0, cfg.hole_offsets.size() - 1);
  std::vector<double> offsets(static_cast<std::size_t>(cfg.n_ribs));
  for (double& o : offsets) o = cfg.hole_offsets[hole(rng)];
  return ThreadingPattern(offsets);
}

}  // namespace

TEST_CASE("shortening direction") {
  CHECK(shortening_direction(10.0, 10.0) == -1);
  CHECK(shortening_direction(-10.0, -6.5) == 1);
  CHECK(shortening_direction(-10.0, 10.0) == 1);
  CHECK(shortening_direction(10.0, -10.0) == -1);
  CHECK(shortening_direction(0.5, -0.5) == -1);
  CHECK_THROWS_AS(shortening_direction(0.0, 0.0), Error);
  try {
    shortening_direction(0.0, 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ambiguous_inversion);
  }
}

TEST_CASE("length to angle inversions") {
  SkeletonConfig cfg;
  cfg.segment_arc_length = 15.0;
  cfg.hole_offsets = {-10.0, 0.0, 10.0};
  const ThreadingPattern centered(std::vector<double>(12, 0.0));
  const ThreadingPattern plus(std::vector<double>(12, 10.0));

  CHECK(length_to_angle(cfg, 0, plus, 15.0) == 0.0);

  const double chord = 14.3239;
  const double expected = oracle::invert_chord(15.0, chord);
  CHECK(std::abs(expected - kPi / 3.0) < 1e-4);
  CHECK(std::abs(length_to_angle(cfg, 3, centered, chord, 1) - expected) < 1e-6);
  CHECK(std::abs(length_to_angle(cfg, 3, centered, chord, -1) + expected) < 1e-6);
  CHECK_THROWS_AS(length_to_angle(cfg, 3, centered, chord), Error);

  const double lengthened = segment_string_length(cfg, Pose2{}, 0.5, 10.0, 10.0);
  CHECK(std::abs(length_to_angle(cfg, 0, plus, lengthened) - 0.5) < 1e-6);
  const double shortened = segment_string_length(cfg, Pose2{}, -0.5, 10.0, 10.0);
  CHECK(std::abs(length_to_angle(cfg, 0, plus, shortened) + 0.5) < 1e-6);

  // unreachable: clamps to the shortest point of the branch
  const ThreadingPattern crossing({-10, 10, -10, 10, -10, 10, -10, 10, -10, 10, -10, 10});
  const SegmentBranch b = shortening_branch(cfg, -10.0, 10.0);
  REQUIRE(b.min_length > 1.0);
  CHECK(length_to_angle(cfg, 0, crossing, 0.5 * b.min_length) == doctest::Approx(b.end_angle));
  CHECK(length_to_angle(cfg, 1, crossing, 0.5 * b.min_length) == doctest::Approx(-b.end_angle));
}

TEST_CASE("length to angle round trips over the default holes") {
  const SkeletonConfig cfg = default_skeleton_config();
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const ThreadingPattern p = random_pattern(cfg, rng);
    const int seg = k % cfg.segment_count();
    const SegmentBranch b = shortening_branch(cfg, p.entry(seg), p.exit(seg));
    const double a = std::uniform_real_distribution<double>(0.0, 0.98)(rng) * b.end_angle;
    const double L = segment_string_length(cfg, Pose2{}, a, p.entry(seg), p.exit(seg));
    CHECK(std::abs(length_to_angle(cfg, seg, p, L) - a) < 1e-6);
  }
}

TEST_CASE("solve at the original length is straight") {
  const SkeletonConfig cfg = default_skeleton_config();
  EquilibriumProblem prob{cfg, w_shape(), original_string_length(cfg, w_shape())};
  const EquilibriumSolution sol = solve_equilibrium(prob);
  for (double a : sol.alphas) CHECK(a == 0.0);
  CHECK(sol.energy == 0.0);
}

TEST_CASE("infeasible targets") {
  const SkeletonConfig cfg = default_skeleton_config();
  const ThreadingPattern p = alternating(-10.0);
  for (double target : {1.0, shortest_string_length(cfg, p) - 1e-3,
                        original_string_length(cfg, p) + 1.0}) {
    EquilibriumProblem prob{cfg, p, target};
    try {
      solve_equilibrium(prob);
      FAIL("expected infeasible_target");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::infeasible_target);
    }
  }
}

TEST_CASE("centered segment in a pattern is ambiguous") {
  SkeletonConfig cfg;
  cfg.hole_offsets = {-10.0, 0.0, 10.0};
  std::vector<double> offsets(12, 10.0);
  offsets[4] = offsets[5] = 0.0;
  EquilibriumProblem prob{cfg, ThreadingPattern(offsets), 0.0};
  prob.target_length = original_string_length(cfg, prob.pattern) - 5.0;
  try {
    solve_equilibrium(prob);
    FAIL("expected ambiguous_inversion");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ambiguous_inversion);
  }
}

TEST_CASE("alternating threading at 270 mm") {
  const SkeletonConfig cfg = default_skeleton_config();
  EquilibriumProblem prob{cfg, alternating(-10.0), 270.0};
  const EquilibriumSolution sol = solve_equilibrium(prob);
  REQUIRE(sol.alphas.size() == 11);
  for (int i = 0; i < 11; ++i) {
    CHECK(degrees(sol.alphas[i]) == doctest::Approx(i % 2 == 0 ? 30.0 : -30.0).epsilon(1e-6));
  }
  CHECK(std::abs(sol.achieved_length - 270.0) <= 1e-6);
}

TEST_CASE("identical segments share the contraction") {
  SkeletonConfig cfg = default_skeleton_config();
  cfg.n_ribs = 4;
  const ThreadingPattern p(std::vector<double>(4, 10.0));
  const double target = original_string_length(cfg, p) - 6.0;
  const EquilibriumSolution sol = solve_equilibrium({cfg, p, target});
  const double each = length_to_angle(cfg, 0, p, target / 3.0);
  for (double a : sol.alphas) CHECK(std::abs(a - each) < 1e-7);

  const oracle::GridOptimum grid =
      oracle::three_segment_grid(cfg.segment_arc_length, p.offsets, target, 1e-3);
  CHECK(std::abs(grid.energy - sol.energy) < 1e-4);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(grid.alphas[i] - sol.alphas[i]) < 5e-3);
}

TEST_CASE("constraint, round trip and local optimality") {
  const SkeletonConfig cfg = default_skeleton_config();
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 25; ++trial) {
    const ThreadingPattern p = random_pattern(cfg, rng);
    const double L0 = original_string_length(cfg, p);
    const double Lmin = shortest_string_length(cfg, p);
    const double target = L0 - std::uniform_real_distribution<double>(0.02, 0.9)(rng) * (L0 - Lmin);
    const EquilibriumSolution sol = solve_equilibrium({cfg, p, target});
    CHECK(std::abs(sol.achieved_length - target) <= 1e-6);
    CHECK(std::abs(total_string_length(cfg, p, sol.alphas) - target) <= 1e-6);
    for (double a : sol.alphas) CHECK((a > -kPi && a <= kPi));

    std::vector<double> floor;
    for (int i = 0; i < cfg.segment_count(); ++i) {
      floor.push_back(shortening_branch(cfg, p.entry(i), p.exit(i)).min_length);
    }
    for (int k = 0; k < 20; ++k) {
      // zero-sum direction that keeps every segment reachable
      std::vector<double> d(sol.segment_lengths.size());
      double norm = 0.0;
      for (int attempt = 0; attempt < 1000; ++attempt) {
        double mean = 0.0;
        for (double& v : d) mean += (v = normal(rng));
        mean /= static_cast<double>(d.size());
        norm = 0.0;
        for (double& v : d) norm += (v -= mean) * v;
        norm = std::sqrt(norm);
        bool ok = true;
        for (std::size_t i = 0; i < d.size(); ++i) {
          ok = ok && sol.segment_lengths[i] + 1e-3 * d[i] / norm >= floor[i];
        }
        if (ok) break;
      }
      double energy = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double a = length_to_angle(cfg, static_cast<int>(i), p,
                                         sol.segment_lengths[i] + 1e-3 * d[i] / norm);
        energy += a * a;
      }
      CHECK(energy >= sol.energy - 1e-8);
    }
  }
}

TEST_CASE("warm start matches cold start") {
  const SkeletonConfig cfg = default_skeleton_config();
  const ThreadingPattern p = w_shape();
  const double L0 = original_string_length(cfg, p);
  const EquilibriumSolution first = solve_equilibrium({cfg, p, L0 - 20.0});
  EquilibriumProblem warm{cfg, p, L0 - 23.0};
  warm.initial_alphas = first.alphas;
  const EquilibriumSolution a = solve_equilibrium(warm);
  const EquilibriumSolution b = solve_equilibrium({cfg, p, L0 - 23.0});
  for (std::size_t i = 0; i < a.alphas.size(); ++i) CHECK(std::abs(a.alphas[i] - b.alphas[i]) < 1e-3);
}

TEST_CASE("iteration cap reports the best iterate") {
  const SkeletonConfig cfg = default_skeleton_config();
  EquilibriumProblem prob{cfg, w_shape(), original_string_length(cfg, w_shape()) - 40.0};
  prob.max_iterations = 1;
  try {
    solve_equilibrium(prob);
    FAIL("expected did_not_converge");
  } catch (const ConvergenceError& e) {
    CHECK(e.code() == ErrorCode::did_not_converge);
    CHECK(e.best().alphas.size() == 11);
  }
}

TEST_CASE("sweep contraction") {
  const SkeletonConfig cfg = default_skeleton_config();
  const ThreadingPattern p = w_shape();
  const double L0 = original_string_length(cfg, p);
  EquilibriumProblem prob{cfg, p, L0};

  const SweepResult none = sweep_contraction(prob, 0.0, 1.0);
  REQUIRE(none.steps.size() == 1);
  for (double a : none.steps[0].solution.alphas) CHECK(a == 0.0);

  const SweepResult sweep = sweep_contraction(prob, 80.0, 1.0);
  CHECK_FALSE(sweep.stopped_early);
  REQUIRE(sweep.steps.size() == 81);
  CHECK(sweep_step_count(80.0, 1.0) == 81);
  for (std::size_t k = 1; k < sweep.steps.size(); ++k) {
    const double drop =
        sweep.steps[k - 1].solution.achieved_length - sweep.steps[k].solution.achieved_length;
    CHECK(std::abs(drop - 1.0) <= 2e-6);
    CHECK(distance(sweep.steps[k].midpoint, sweep.steps[k - 1].midpoint) < 5.0);
  }

  // seven even steps deepen the same curve without sign flips
  const SweepResult seven = sweep_contraction(prob, 70.0, 10.0);
  REQUIRE(seven.steps.size() == 8);
  for (std::size_t k = 2; k < seven.steps.size(); ++k) {
    const auto& prev = seven.steps[k - 1].solution.alphas;
    const auto& cur = seven.steps[k].solution.alphas;
    const EquilibriumSolution cold = solve_equilibrium({cfg, p, seven.steps[k].target_length});
    for (std::size_t i = 0; i < cur.size(); ++i) {
      CHECK(prev[i] * cur[i] >= -1e-16);
      CHECK(std::abs(cur[i]) >= std::abs(prev[i]) - 1e-8);
      CHECK(std::abs(cold.alphas[i] - cur[i]) < 1e-3);
    }
  }
}

TEST_CASE("sweep stops at the shortest reachable length") {
  const SkeletonConfig cfg = default_skeleton_config();
  const ThreadingPattern p(std::vector<double>(12, 0.5));
  const double L0 = original_string_length(cfg, p);
  const double Lmin = shortest_string_length(cfg, p);
  const SweepResult r = sweep_contraction({cfg, p, L0}, L0 - Lmin + 5.0, 2.0);
  REQUIRE(r.stopped_early);
  CHECK(r.stopped_early->code() == ErrorCode::infeasible_target);
  CHECK(r.steps.back().target_length >= Lmin - 1e-6);
  CHECK(r.steps.size() < static_cast<std::size_t>(sweep_step_count(L0 - Lmin + 5.0, 2.0)));
}
