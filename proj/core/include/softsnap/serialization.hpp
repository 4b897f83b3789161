#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "softsnap/evaluation.hpp"
#include "softsnap/forward_solver.hpp"
#include "softsnap/inverse_designer.hpp"
#include "softsnap/skeleton.hpp"

namespace softsnap {

using json = nlohmann::json;

// Every document carries "schema": kSchemaVersion at the top level.
inline constexpr int kSchemaVersion = 1;

enum class AngleUnits { radians, degrees };

AngleUnits parse_units(std::string_view text);

// Parse errors surface as Error(invalid_argument).
SkeletonConfig config_from_json(const json& doc);
json config_to_json(const SkeletonConfig& cfg);

// Accepts either a bare array of offsets or {"offsets": [...]}.
ThreadingPattern pattern_from_json(const json& doc);
json pattern_to_json(const ThreadingPattern& pattern);

/// Angle list in radians from a bare array (in `default_units`) or an object
/// {"units": "deg"|"rad", "angles": [...]}.
std::vector<double> angles_from_json(const json& doc, AngleUnits default_units);

/// "0,0,10,15" -> radians.
std::vector<double> parse_angle_list(std::string_view text, AngleUnits units);

json solution_to_json(const EquilibriumSolution& solution);
json solution_to_json(const EquilibriumSolution& solution, const ModuleState& state);
json module_state_to_json(const ModuleState& state);
json design_result_to_json(const DesignResult& result);
json design_outcome_to_json(const DesignOutcome& outcome);
json rmse_report_to_json(const RmseReport& report);
json sweep_row_to_json(const SweepStep& step);

// Sweep CSV: step_index,target_length_mm,alpha_0..alpha_{n-2},mid_x_mm,mid_y_mm,energy
struct SweepRow {
  int step_index = 0;
  double target_length = 0.0;
  std::vector<double> alphas;
  Point2 midpoint;
  double energy = 0.0;
};

void write_sweep_csv(std::ostream& out, int segment_count, const std::vector<SweepStep>& steps);
std::vector<SweepRow> read_sweep_csv(std::istream& in);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& doc);

}  // namespace softsnap
