#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "softsnap/evaluation.hpp"

using namespace softsnap;

namespace {

MarkerTrace sample_trace() {
  MarkerTrace t;
  t.origin_marker = {0.0, 0.0};
  t.axis_marker = {15.0, 0.0};
  for (int i = 0; i < 12; ++i) t.rib_centers.push_back({15.0 * i, 0.1 * i * i});
  t.step_label = "3";
  return t;
}

std::vector<double> some_angles(int seed) {
  std::mt19937_64 rng(static_cast<unsigned>(seed));
  std::uniform_real_distribution<double> angle(-0.6, 0.6);
  std::vector<double> a(11);
  for (double& v : a) v = angle(rng);
  return a;
}

}  // namespace

TEST_CASE("alignment") {
  const MarkerTrace t = sample_trace();
  const MarkerTrace same = align_trace(t);
  for (std::size_t i = 0; i < t.rib_centers.size(); ++i) {
    CHECK(same.rib_centers[i].x == t.rib_centers[i].x);
    CHECK(same.rib_centers[i].y == t.rib_centers[i].y);
  }

  const MarkerTrace moved = transform_trace(t, radians(37.0), {5.0, -2.0});
  const MarkerTrace back = align_trace(moved);
  for (std::size_t i = 0; i < t.rib_centers.size(); ++i) {
    CHECK(distance(back.rib_centers[i], t.rib_centers[i]) < 1e-9);
  }

  MarkerTrace quarter;
  quarter.origin_marker = {1.0, 1.0};
  quarter.axis_marker = {1.0, 4.0};
  quarter.rib_centers = {{1.0, 3.0}, {0.0, 1.0}};
  const MarkerTrace q = align_trace(quarter);
  CHECK(q.axis_marker.x == doctest::Approx(3.0));
  CHECK(std::abs(q.axis_marker.y) < 1e-12);
  CHECK(q.rib_centers[0].x == doctest::Approx(2.0));
  CHECK(std::abs(q.rib_centers[0].y) < 1e-12);
  CHECK(std::abs(q.rib_centers[1].x) < 1e-12);
  CHECK(q.rib_centers[1].y == doctest::Approx(1.0));

  MarkerTrace bad = t;
  bad.axis_marker = bad.origin_marker;
  CHECK_THROWS_AS(align_trace(bad), Error);
}

TEST_CASE("rmse definitions") {
  std::vector<Point2> a(12), b(12);
  for (int i = 0; i < 12; ++i) a[i] = b[i] = {3.0 * i, -1.0 * i};
  CHECK(point_rmse(a, b) == 0.0);
  b[5].y += 12.0;
  CHECK(point_rmse(a, b) == doctest::Approx(12.0 / std::sqrt(12.0)).epsilon(1e-14));
  CHECK(point_rmse(a, b) == doctest::Approx(3.4641).epsilon(1e-4));
  std::vector<Point2> shorter(a.begin(), a.begin() + 11);
  CHECK_THROWS_AS(point_rmse(a, shorter), Error);
}

TEST_CASE("constant magnitude perturbation") {
  const SkeletonConfig cfg = default_skeleton_config();
  std::mt19937_64 rng(42);
  std::vector<MarkerTrace> traces;
  std::vector<std::vector<double>> angles;
  for (int step = 0; step < 7; ++step) {
    angles.push_back(some_angles(step));
    const ModuleState st = forward_kinematics(cfg, angles.back());
    traces.push_back(
        transform_trace(synthesize_trace(cfg, st, 2.0, rng, std::to_string(step)), 0.3 * step,
                        {10.0 * step, -4.0}));
    // direct summation on the raw synthetic trace
    const MarkerTrace raw = synthesize_trace(cfg, st, 2.0, rng);
    double sum = 0.0;
    for (std::size_t i = 0; i < raw.rib_centers.size(); ++i) {
      const Point2 d = raw.rib_centers[i] - st.rib_poses[i].position();
      sum += d.x * d.x + d.y * d.y;
    }
    CHECK(std::sqrt(sum / 12.0) == doctest::Approx(2.0).epsilon(1e-12));
  }
  const RmseReport r = rmse_against_angles(traces, angles, cfg);
  REQUIRE(r.per_step_rmse.size() == 7);
  for (double v : r.per_step_rmse) CHECK(std::abs(v - 2.0) <= 1e-6);
  CHECK(std::abs(r.average_rmse - 2.0) <= 1e-6);
  CHECK(r.n_points == 12);
}

TEST_CASE("rigid motions do not change rmse") {
  const SkeletonConfig cfg = default_skeleton_config();
  std::mt19937_64 rng(1);
  const std::vector<double> a = some_angles(5);
  const MarkerTrace t = synthesize_trace(cfg, forward_kinematics(cfg, a), 1.3, rng);
  const double base = rmse_against_angles({t}, {a}, cfg).average_rmse;
  for (double rot : {-2.5, 0.0, 0.7, 3.1}) {
    const MarkerTrace m = transform_trace(t, rot, {-40.0 * rot, 17.0});
    CHECK(rmse_against_angles({m}, {a}, cfg).average_rmse == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("order of ribs matters") {
  const SkeletonConfig cfg = default_skeleton_config();
  std::mt19937_64 rng(2);
  const std::vector<double> a = some_angles(8);
  MarkerTrace t = synthesize_trace(cfg, forward_kinematics(cfg, a), 0.0, rng);
  CHECK(rmse_against_angles({t}, {a}, cfg).average_rmse < 1e-12);
  std::swap(t.rib_centers[2], t.rib_centers[9]);
  CHECK(rmse_against_angles({t}, {a}, cfg).average_rmse > 1.0);
}

TEST_CASE("solutions drive the comparison") {
  const SkeletonConfig cfg = default_skeleton_config();
  std::mt19937_64 rng(3);
  EquilibriumSolution sol;
  sol.alphas = some_angles(2);
  const MarkerTrace t = synthesize_trace(cfg, forward_kinematics(cfg, sol.alphas), 0.5, rng);
  CHECK(rmse_against_simulation({t}, {sol}, cfg).average_rmse == doctest::Approx(0.5));
  CHECK_THROWS_AS(rmse_against_simulation({t, t}, {sol}, cfg), Error);
  MarkerTrace short_trace = t;
  short_trace.rib_centers.pop_back();
  CHECK_THROWS_AS(rmse_against_simulation({short_trace}, {sol}, cfg), Error);
}

TEST_CASE("trace csv") {
  const SkeletonConfig cfg = default_skeleton_config();
  std::mt19937_64 rng(4);
  std::vector<MarkerTrace> traces;
  for (int k = 0; k < 3; ++k) {
    traces.push_back(synthesize_trace(cfg, forward_kinematics(cfg, some_angles(k)), 2.0, rng,
                                      std::to_string(k * 10)));
  }
  std::stringstream ss;
  write_trace_csv(ss, traces);
  std::string header;
  std::getline(std::stringstream(ss.str()), header);
  CHECK(header.rfind("step,ox,oy,ax,ay,x0,y0,x1,y1", 0) == 0);
  CHECK(header.substr(header.size() - 8) == ",x11,y11");
  const std::vector<MarkerTrace> back = read_trace_csv(ss);
  REQUIRE(back.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(back[k].step_label == traces[k].step_label);
    CHECK(back[k].axis_marker.x == traces[k].axis_marker.x);
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(back[k].rib_centers[i].x == traces[k].rib_centers[i].x);
      CHECK(back[k].rib_centers[i].y == traces[k].rib_centers[i].y);
    }
  }

  std::stringstream bad("step,ox,oy\n1,2,3\n");
  CHECK_THROWS_AS(read_trace_csv(bad), Error);

  RmseReport report;
  report.per_step_rmse = {1.5, 2.5, 0.0};
  std::stringstream out;
  write_rmse_csv(out, traces, report);
  CHECK(out.str().rfind("step,rmse_mm\n0,1.5\n", 0) == 0);
}
