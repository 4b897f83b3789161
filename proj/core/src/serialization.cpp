#include "softsnap/serialization.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "softsnap/error.hpp"

namespace softsnap {
namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::invalid_argument, what); }

void check_schema(const json& doc) {
  if (doc.is_object() && doc.contains("schema")) {
    if (!doc["schema"].is_number_integer() || doc["schema"].get<int>() != kSchemaVersion) {
      bad("unsupported schema version: " + doc["schema"].dump());
    }
  }
}

template <typename T>
T field(const json& doc, const char* name, T fallback) {
  if (!doc.contains(name)) return fallback;
  try {
    return doc.at(name).get<T>();
  } catch (const json::exception& e) {
    bad(std::string("field '") + name + "': " + e.what());
  }
}

std::vector<double> number_array(const json& doc, const char* what) {
  if (!doc.is_array()) bad(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(doc.size());
  for (const json& v : doc) {
    if (!v.is_number()) bad(std::string(what) + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

json points_to_json(const std::vector<Point2>& points) {
  json out = json::array();
  for (const Point2& p : points) out.push_back({p.x, p.y});
  return out;
}

std::vector<double> to_degrees(const std::vector<double>& rad) {
  std::vector<double> out;
  out.reserve(rad.size());
  for (double a : rad) out.push_back(degrees(a));
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  return out;
}

double to_double(std::string_view text, const std::string& context) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    bad(context + ": not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

AngleUnits parse_units(std::string_view text) {
  if (text == "deg" || text == "degrees") return AngleUnits::degrees;
  if (text == "rad" || text == "radians") return AngleUnits::radians;
  bad("units must be 'deg' or 'rad', got '" + std::string(text) + "'");
}

SkeletonConfig config_from_json(const json& doc) {
  if (!doc.is_object()) bad("skeleton config must be a JSON object");
  check_schema(doc);
  SkeletonConfig cfg;
  cfg.n_ribs = field(doc, "n_ribs", cfg.n_ribs);
  cfg.rib_length = field(doc, "rib_length", cfg.rib_length);
  cfg.segment_arc_length = field(doc, "segment_arc_length", cfg.segment_arc_length);
  cfg.blend_threshold = field(doc, "blend_threshold", cfg.blend_threshold);
  if (doc.contains("hole_offsets")) cfg.hole_offsets = number_array(doc["hole_offsets"], "hole_offsets");
  cfg.validate();
  return cfg;
}

json config_to_json(const SkeletonConfig& cfg) {
  return {{"schema", kSchemaVersion},
          {"n_ribs", cfg.n_ribs},
          {"rib_length", cfg.rib_length},
          {"segment_arc_length", cfg.segment_arc_length},
          {"hole_offsets", cfg.hole_offsets},
          {"blend_threshold", cfg.blend_threshold}};
}

ThreadingPattern pattern_from_json(const json& doc) {
  if (doc.is_array()) return ThreadingPattern(number_array(doc, "pattern"));
  if (!doc.is_object() || !doc.contains("offsets")) {
    bad("pattern must be an array of offsets or an object with 'offsets'");
  }
  check_schema(doc);
  return ThreadingPattern(number_array(doc["offsets"], "offsets"));
}

json pattern_to_json(const ThreadingPattern& pattern) {
  return {{"schema", kSchemaVersion}, {"offsets", pattern.offsets}};
}

std::vector<double> angles_from_json(const json& doc, AngleUnits default_units) {
  AngleUnits units = default_units;
  std::vector<double> values;
  if (doc.is_array()) {
    values = number_array(doc, "angles");
  } else if (doc.is_object()) {
    check_schema(doc);
    if (doc.contains("units")) {
      if (!doc["units"].is_string()) bad("'units' must be a string");
      units = parse_units(doc["units"].get<std::string>());
    }
    if (!doc.contains("angles")) bad("angle document needs an 'angles' array");
    values = number_array(doc["angles"], "angles");
  } else {
    bad("angles must be an array or an object with 'angles'");
  }
  if (units == AngleUnits::degrees) {
    for (double& v : values) v = radians(v);
  }
  return values;
}

std::vector<double> parse_angle_list(std::string_view text, AngleUnits units) {
  std::vector<double> out;
  for (const std::string& cell : split(std::string(text), ',')) {
    const double v = to_double(cell, "angle list");
    out.push_back(units == AngleUnits::degrees ? radians(v) : v);
  }
  if (out.empty()) bad("angle list is empty");
  return out;
}

json solution_to_json(const EquilibriumSolution& solution) {
  return {{"schema", kSchemaVersion},
          {"alphas", solution.alphas},
          {"alphas_deg", to_degrees(solution.alphas)},
          {"segment_lengths", solution.segment_lengths},
          {"energy", solution.energy},
          {"achieved_length", solution.achieved_length},
          {"iterations", solution.iterations}};
}

json module_state_to_json(const ModuleState& state) {
  json poses = json::array();
  for (const Pose2& p : state.rib_poses) poses.push_back({p.x, p.y, p.theta});
  return {{"rib_poses", poses}, {"centerline", points_to_json(state.centerline)}};
}

json solution_to_json(const EquilibriumSolution& solution, const ModuleState& state) {
  json doc = solution_to_json(solution);
  json geometry = module_state_to_json(state);
  doc["rib_poses"] = std::move(geometry["rib_poses"]);
  doc["centerline"] = std::move(geometry["centerline"]);
  return doc;
}

json design_result_to_json(const DesignResult& result) {
  return {{"schema", kSchemaVersion},
          {"pattern", result.pattern.offsets},
          {"total_length_mm", result.total_length},
          {"achieved_alphas_rad", result.achieved_alphas},
          {"achieved_alphas_deg", to_degrees(result.achieved_alphas)},
          {"residual_rad", result.residual},
          {"candidates_evaluated", result.candidates_evaluated}};
}

json design_outcome_to_json(const DesignOutcome& outcome) {
  json doc = design_result_to_json(outcome.best);
  json alternates = json::array();
  for (const DesignResult& r : outcome.alternates) {
    json alt = design_result_to_json(r);
    alt.erase("schema");
    alternates.push_back(std::move(alt));
  }
  doc["alternates"] = std::move(alternates);
  doc["valid_paths"] = outcome.valid_paths;
  doc["exhaustive"] = outcome.exhaustive;
  doc["relaxed"] = outcome.relaxed;
  return doc;
}

json rmse_report_to_json(const RmseReport& report) {
  return {{"schema", kSchemaVersion},
          {"per_step_rmse_mm", report.per_step_rmse},
          {"average_rmse_mm", report.average_rmse},
          {"n_points", report.n_points}};
}

json sweep_row_to_json(const SweepStep& step) {
  return {{"step_index", step.index},
          {"target_length_mm", step.target_length},
          {"alphas", step.solution.alphas},
          {"mid_x_mm", step.midpoint.x},
          {"mid_y_mm", step.midpoint.y},
          {"energy", step.solution.energy},
          {"achieved_length", step.solution.achieved_length}};
}

void write_sweep_csv(std::ostream& out, int segment_count, const std::vector<SweepStep>& steps) {
  out << "step_index,target_length_mm";
  for (int i = 0; i < segment_count; ++i) out << ",alpha_" << i;
  out << ",mid_x_mm,mid_y_mm,energy\n" << std::setprecision(17);
  for (const SweepStep& s : steps) {
    out << s.index << ',' << s.target_length;
    for (double a : s.solution.alphas) out << ',' << a;
    out << ',' << s.midpoint.x << ',' << s.midpoint.y << ',' << s.solution.energy << '\n';
  }
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) bad("sweep CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split(line, ',');
  if (header.size() < 6 || header[0] != "step_index" || header[1] != "target_length_mm" ||
      header[header.size() - 3] != "mid_x_mm" || header[header.size() - 2] != "mid_y_mm" ||
      header.back() != "energy") {
    bad("sweep CSV header must be step_index,target_length_mm,alpha_0..,mid_x_mm,mid_y_mm,energy");
  }
  const std::size_t segments = header.size() - 5;
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size()) bad("sweep CSV row has the wrong number of columns");
    SweepRow row;
    row.step_index = static_cast<int>(to_double(cells[0], "step_index"));
    row.target_length = to_double(cells[1], "target_length_mm");
    for (std::size_t i = 0; i < segments; ++i) row.alphas.push_back(to_double(cells[2 + i], "alpha"));
    row.midpoint = {to_double(cells[2 + segments], "mid_x_mm"),
                    to_double(cells[3 + segments], "mid_y_mm")};
    row.energy = to_double(cells[4 + segments], "energy");
    rows.push_back(std::move(row));
  }
  return rows;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    bad(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) bad("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace softsnap
