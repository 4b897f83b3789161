#pragma once

#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "softsnap/forward_solver.hpp"
#include "softsnap/geometry.hpp"
#include "softsnap/skeleton.hpp"

namespace softsnap {

// Marker coordinates for one contraction step, in mm. The origin marker sits
// at the skeleton base; the axis marker fixes the +x direction.
struct MarkerTrace {
  Point2 origin_marker;
  Point2 axis_marker;
  std::vector<Point2> rib_centers;  // base to tip
  std::string step_label;
};

struct RmseReport {
  std::vector<double> per_step_rmse;
  double average_rmse = 0.0;
  std::size_t n_points = 0;
};

/// Rigidly moves the trace so the origin marker is at (0, 0) and the axis
/// marker lies on +x.
MarkerTrace align_trace(const MarkerTrace& trace);

/// Root-mean-square distance between index-matched point sets.
double point_rmse(std::span<const Point2> measured, std::span<const Point2> simulated);

RmseReport rmse_against_simulation(const std::vector<MarkerTrace>& traces,
                                   const std::vector<EquilibriumSolution>& solutions,
                                   const SkeletonConfig& cfg,
                                   double theta_start = kDefaultThetaStart);

/// Same comparison driven directly by simulated angle sets.
RmseReport rmse_against_angles(const std::vector<MarkerTrace>& traces,
                               const std::vector<std::vector<double>>& simulated_alphas,
                               const SkeletonConfig& cfg,
                               double theta_start = kDefaultThetaStart);

/// Marker trace of a simulated state with every rib center displaced by exactly
/// `perturbation_mm` in a random direction. The axis marker is placed one
/// segment length along the base spine direction.
MarkerTrace synthesize_trace(const SkeletonConfig& cfg, const ModuleState& state,
                             double perturbation_mm, std::mt19937_64& rng,
                             std::string step_label = {});

/// Applies a planar rigid motion (rotation about the origin, then translation).
MarkerTrace transform_trace(const MarkerTrace& trace, double rotation, Point2 translation);

// Trace CSV: header step,ox,oy,ax,ay,x0,y0,...,x{n-1},y{n-1}; one row per step.
std::vector<MarkerTrace> read_trace_csv(std::istream& in);
void write_trace_csv(std::ostream& out, const std::vector<MarkerTrace>& traces);

void write_rmse_csv(std::ostream& out, const std::vector<MarkerTrace>& traces,
                    const RmseReport& report);

}  // namespace softsnap
