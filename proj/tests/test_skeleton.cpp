#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "softsnap/error.hpp"
#include "softsnap/skeleton.hpp"

using namespace softsnap;

namespace {

SkeletonConfig config_with_s(double s) {
  SkeletonConfig cfg;
  cfg.segment_arc_length = s;
  return cfg;
}

double seg(const SkeletonConfig& cfg, double alpha, double l1, double l2) {
  return segment_string_length(cfg, Pose2{}, alpha, l1, l2);
}

}  // namespace

TEST_CASE("straight segments") {
  const SkeletonConfig cfg = config_with_s(15.0);
  CHECK(seg(cfg, 0.0, 5.0, 5.0) == doctest::Approx(15.0).epsilon(1e-15));
  CHECK(seg(cfg, 0.0, -10.0, 10.0) == doctest::Approx(25.0).epsilon(1e-15));
  for (double l : cfg.hole_offsets) CHECK(seg(cfg, 0.0, l, l) == cfg.segment_arc_length);
}

TEST_CASE("sixty degree chord") {
  const SkeletonConfig cfg = config_with_s(15.0);
  const double expected = 2.0 * (45.0 / kPi) * std::sin(kPi / 6.0);
  CHECK(expected == doctest::Approx(14.3239).epsilon(1e-5));
  CHECK(std::abs(seg(cfg, kPi / 3.0, 0.0, 0.0) - expected) < 1e-12);
  CHECK(std::abs(oracle::polyline_segment_length(15.0, kPi / 3.0, 0.0, 0.0) - expected) < 1e-6);
}

TEST_CASE("segment length matches closed form and polyline") {
  const SkeletonConfig cfg = default_skeleton_config();
  const double s = cfg.segment_arc_length;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_int_distribution<std::size_t> hole(0, cfg.hole_offsets.size() - 1);
  for (int k = 0; k < 300; ++k) {
    const double a = angle(rng);
    const double l1 = cfg.hole_offsets[hole(rng)];
    const double l2 = cfg.hole_offsets[hole(rng)];
    CAPTURE(a);
    CAPTURE(l1);
    CAPTURE(l2);
    CHECK(std::abs(seg(cfg, a, l1, l2) - oracle::segment_length(s, a, l1, l2)) < 1e-10);
  }
  for (double a : {-3.0, -1.2, -0.3, 0.05, 0.7, 2.2, kPi}) {
    for (auto [l1, l2] : {std::pair{-10.0, 10.0}, {6.5, -0.5}, {3.5, 3.5}, {-10.0, -6.5}}) {
      CHECK(std::abs(seg(cfg, a, l1, l2) - oracle::polyline_segment_length(s, a, l1, l2)) <
            1e-6);
    }
  }
}

TEST_CASE("length is independent of the base pose") {
  const SkeletonConfig cfg = default_skeleton_config();
  const Pose2 moved{12.0, -3.5, 0.9};
  for (double a : {-2.0, -1e-5, 0.0, 0.4, 3.0}) {
    CHECK(segment_string_length(cfg, moved, a, -6.5, 10.0) ==
          doctest::Approx(seg(cfg, a, -6.5, 10.0)).epsilon(1e-12));
  }
}

TEST_CASE("blend threshold is continuous") {
  const SkeletonConfig cfg = default_skeleton_config();
  const double t = cfg.blend_threshold;
  for (auto [l1, l2] : {std::pair{-10.0, 10.0}, {2.0, -3.0}, {10.0, 10.0}, {-0.5, 6.5}}) {
    // L rises with slope ~(l1 + l2) / 2 through zero; allow for that, not for a jump
    const double slope = std::abs(oracle::segment_length(cfg.segment_arc_length, 1e-7, l1, l2) -
                                  oracle::segment_length(cfg.segment_arc_length, -1e-7, l1, l2)) /
                         2e-7;
    const double allowed = std::max(1e-6, slope * t * 1e-3 + 1e-9);
    for (double sign : {1.0, -1.0}) {
      const double at = seg(cfg, sign * t, l1, l2);
      CHECK(std::abs(seg(cfg, sign * t * (1.0 - 1e-3), l1, l2) - at) <= allowed);
      CHECK(std::abs(seg(cfg, sign * t * (1.0 + 1e-3), l1, l2) - at) <= allowed);
      // the two constructions agree at the switch itself
      CHECK(std::abs(seg(cfg, sign * std::nextafter(t, 0.0), l1, l2) - at) < 1e-9);
    }
  }
  const SkeletonConfig fifteen = config_with_s(15.0);
  CHECK(std::abs(seg(fifteen, 1e-9, 2.0, -3.0) - seg(fifteen, 0.0, 2.0, -3.0)) < 1e-9);
}

TEST_CASE("symmetry and mirror") {
  const SkeletonConfig cfg = default_skeleton_config();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> offset(-12.5, 12.5);
  for (int k = 0; k < 200; ++k) {
    const double a = angle(rng);
    const double l1 = offset(rng);
    const double l2 = offset(rng);
    CHECK(seg(cfg, a, 0.0, 0.0) == doctest::Approx(seg(cfg, -a, 0.0, 0.0)).epsilon(1e-13));
    CHECK(seg(cfg, a, l1, l2) == doctest::Approx(seg(cfg, -a, -l1, -l2)).epsilon(1e-12));
    if (std::abs(a) > 1e-6) CHECK(seg(cfg, a, 0.0, 0.0) < cfg.segment_arc_length);
  }
}

TEST_CASE("offset and angle preconditions") {
  const SkeletonConfig cfg = default_skeleton_config();
  CHECK_THROWS_WITH_AS(seg(cfg, 0.1, 12.6, 0.0), doctest::Contains("offset exceeds rib half-length"),
                       Error);
  CHECK_NOTHROW(seg(cfg, 0.1, 12.5, -12.5));
  CHECK_THROWS_AS(seg(cfg, 3.2, 0.0, 0.0), Error);
  CHECK_NOTHROW(seg(cfg, kPi, 0.0, 0.0));
}

TEST_CASE("config validation") {
  SkeletonConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_ribs = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.hole_offsets = {-3.0, 3.0, 1.0};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.hole_offsets = {-3.0, 3.0, 3.0};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.hole_offsets = {-13.0, 3.0};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.segment_arc_length = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.blend_threshold = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  const SkeletonConfig ok;
  CHECK_THROWS_AS(ThreadingPattern({10.0, 10.0}).validate(ok), Error);
  CHECK_THROWS_AS(ThreadingPattern(std::vector<double>(12, 1.0)).validate(ok), Error);
  CHECK_NOTHROW(ThreadingPattern(std::vector<double>(12, -0.5)).validate(ok));
}

TEST_CASE("total string length of straight modules") {
  const SkeletonConfig cfg = config_with_s(15.0);
  const std::vector<double> zeros(11, 0.0);
  CHECK(total_string_length(cfg, ThreadingPattern(std::vector<double>(12, 3.5)), zeros) ==
        doctest::Approx(165.0).epsilon(1e-14));
  std::vector<double> alternating;
  for (int i = 0; i < 12; ++i) alternating.push_back(i % 2 == 0 ? 10.0 : -10.0);
  CHECK(original_string_length(cfg, ThreadingPattern(alternating)) ==
        doctest::Approx(275.0).epsilon(1e-14));
  CHECK_THROWS_AS(total_string_length(cfg, ThreadingPattern(alternating), std::vector<double>(10)),
                  Error);
}

TEST_CASE("calibrated geometry holds the alternating threading at 270 mm") {
  const SkeletonConfig cfg = default_skeleton_config();
  std::vector<double> offsets, alphas;
  for (int i = 0; i < 12; ++i) offsets.push_back(i % 2 == 0 ? -10.0 : 10.0);
  for (int i = 0; i < 11; ++i) alphas.push_back(radians(i % 2 == 0 ? 30.0 : -30.0));
  const ThreadingPattern pattern(offsets);
  CHECK(total_string_length(cfg, pattern, alphas) == doctest::Approx(270.0).epsilon(1e-12));

  double oracle_total = 0.0;
  for (int i = 0; i < 11; ++i) {
    oracle_total += oracle::segment_length(cfg.segment_arc_length, alphas[i], offsets[i],
                                           offsets[i + 1]);
  }
  CHECK(oracle_total == doctest::Approx(270.0).epsilon(1e-12));

  SkeletonConfig rough = cfg;
  rough.segment_arc_length = 10.0;
  CHECK(calibrate_segment_arc_length(rough, pattern, alphas, 270.0) ==
        doctest::Approx(kCalibratedSegmentArcLength).epsilon(1e-12));
}

TEST_CASE("forward kinematics of a straight module") {
  const SkeletonConfig cfg = config_with_s(15.0);
  const std::vector<double> zeros(11, 0.0);
  const ModuleState up = forward_kinematics(cfg, zeros, kPi / 2.0);
  REQUIRE(up.rib_poses.size() == 12);
  for (int i = 0; i < 12; ++i) {
    // spine runs along theta + pi/2, i.e. -x for vertical ribs
    CHECK(up.rib_poses[i].x == doctest::Approx(-15.0 * i).epsilon(1e-12));
    CHECK(std::abs(up.rib_poses[i].y) < 1e-12);
  }
  const ModuleState along = forward_kinematics(cfg, zeros);
  for (int i = 0; i < 12; ++i) {
    CHECK(along.rib_poses[i].x == doctest::Approx(15.0 * i).epsilon(1e-12));
    CHECK(std::abs(along.rib_poses[i].y) < 1e-12);
  }
  CHECK(along.centerline.size() == 11 * kDefaultCenterlineSamples + 1);
  CHECK(along.rib_poses[0].theta == kDefaultThetaStart);
}

TEST_CASE("half circle segment") {
  SkeletonConfig cfg = config_with_s(15.0);
  cfg.n_ribs = 2;
  const ModuleState st = forward_kinematics(cfg, std::vector<double>{kPi}, 0.3);
  const double d = distance(st.rib_poses[0].position(), st.rib_poses[1].position());
  CHECK(d == doctest::Approx(30.0 / kPi).epsilon(1e-12));
  // sampled arc: endpoint of the polyline walk
  double x = 0.0, y = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double phi = 0.3 + kPi / 2 + kPi * (k + 0.5) / 10000;
    x += 15.0 / 10000 * std::cos(phi);
    y += 15.0 / 10000 * std::sin(phi);
  }
  CHECK(st.rib_poses[1].x == doctest::Approx(x).epsilon(1e-6));
  CHECK(st.rib_poses[1].y == doctest::Approx(y).epsilon(1e-6));
}

TEST_CASE("angles chain and arc length is preserved") {
  const SkeletonConfig cfg = default_skeleton_config();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> alphas(11);
    for (double& a : alphas) a = angle(rng);
    if (trial == 0) alphas[4] = 0.0;
    if (trial == 1) alphas[6] = 5e-5;
    const ModuleState st = forward_kinematics(cfg, alphas, 0.2, 64);
    double sum = 0.0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      sum += alphas[i];
      CHECK(st.rib_poses[i + 1].theta - st.rib_poses[i].theta ==
            doctest::Approx(alphas[i]).epsilon(1e-12));
    }
    CHECK(st.rib_poses.back().theta - 0.2 == doctest::Approx(sum).epsilon(1e-12));
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      double polyline = 0.0;
      for (std::size_t k = 0; k < 64; ++k) {
        polyline += distance(st.centerline[i * 64 + k], st.centerline[i * 64 + k + 1]);
      }
      CHECK(std::abs(polyline - cfg.segment_arc_length) <= 1e-3 * cfg.segment_arc_length);
      CHECK(polyline <= cfg.segment_arc_length + 1e-12);
    }
  }
}

TEST_CASE("midpoint sits halfway along the spine") {
  const SkeletonConfig cfg = config_with_s(15.0);
  const std::vector<double> zeros(11, 0.0);
  const Point2 mid = skeleton_midpoint(cfg, zeros);
  CHECK(mid.x == doctest::Approx(82.5).epsilon(1e-12));
  CHECK(std::abs(mid.y) < 1e-12);
  SkeletonConfig even = cfg;
  even.n_ribs = 5;
  const Point2 m4 = skeleton_midpoint(even, std::vector<double>{0.3, 0.3, -0.2, 0.1});
  const ModuleState st = forward_kinematics(even, std::vector<double>{0.3, 0.3, -0.2, 0.1});
  CHECK(m4.x == doctest::Approx(st.rib_poses[2].x));
  CHECK(m4.y == doctest::Approx(st.rib_poses[2].y));
}
