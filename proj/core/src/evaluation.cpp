#include "softsnap/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "softsnap/error.hpp"

namespace softsnap {
namespace {

Point2 rotate(Point2 p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& text, std::size_t row) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size() && text.find_first_not_of(" \t\r", used) != std::string::npos) {
      throw std::invalid_argument(text);
    }
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_argument,
                "trace CSV row " + std::to_string(row) + ": not a number: '" + text + "'");
  }
}

}  // namespace

MarkerTrace align_trace(const MarkerTrace& trace) {
  const Point2 axis = trace.axis_marker - trace.origin_marker;
  if (norm(axis) == 0.0) {
    throw Error(ErrorCode::invalid_argument, "origin and axis markers coincide");
  }
  const double angle = -std::atan2(axis.y, axis.x);
  MarkerTrace aligned;
  aligned.step_label = trace.step_label;
  aligned.origin_marker = {0.0, 0.0};
  aligned.axis_marker = {norm(axis), 0.0};
  aligned.rib_centers.reserve(trace.rib_centers.size());
  for (const Point2& p : trace.rib_centers) {
    aligned.rib_centers.push_back(rotate(p - trace.origin_marker, angle));
  }
  return aligned;
}

double point_rmse(std::span<const Point2> measured, std::span<const Point2> simulated) {
  if (measured.size() != simulated.size() || measured.empty()) {
    throw Error(ErrorCode::invalid_argument, "rib count mismatch between trace and simulation");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const Point2 d = measured[i] - simulated[i];
    sum += d.x * d.x + d.y * d.y;
  }
  return std::sqrt(sum / static_cast<double>(measured.size()));
}

RmseReport rmse_against_angles(const std::vector<MarkerTrace>& traces,
                               const std::vector<std::vector<double>>& simulated_alphas,
                               const SkeletonConfig& cfg, double theta_start) {
  if (traces.size() != simulated_alphas.size()) {
    throw Error(ErrorCode::invalid_argument, "need one simulated state per trace");
  }
  RmseReport report;
  report.n_points = static_cast<std::size_t>(cfg.n_ribs);
  for (std::size_t k = 0; k < traces.size(); ++k) {
    if (traces[k].rib_centers.size() != static_cast<std::size_t>(cfg.n_ribs)) {
      throw Error(ErrorCode::invalid_argument,
                  "trace " + std::to_string(k) + " has " +
                      std::to_string(traces[k].rib_centers.size()) + " rib centers, expected " +
                      std::to_string(cfg.n_ribs));
    }
    const MarkerTrace aligned = align_trace(traces[k]);
    const ModuleState state = forward_kinematics(cfg, simulated_alphas[k], theta_start, 1);
    std::vector<Point2> simulated;
    simulated.reserve(state.rib_poses.size());
    for (const Pose2& pose : state.rib_poses) simulated.push_back(pose.position());
    report.per_step_rmse.push_back(point_rmse(aligned.rib_centers, simulated));
  }
  double sum = 0.0;
  for (double r : report.per_step_rmse) sum += r;
  report.average_rmse =
      report.per_step_rmse.empty() ? 0.0 : sum / static_cast<double>(report.per_step_rmse.size());
  return report;
}

RmseReport rmse_against_simulation(const std::vector<MarkerTrace>& traces,
                                   const std::vector<EquilibriumSolution>& solutions,
                                   const SkeletonConfig& cfg, double theta_start) {
  std::vector<std::vector<double>> alphas;
  alphas.reserve(solutions.size());
  for (const auto& s : solutions) alphas.push_back(s.alphas);
  return rmse_against_angles(traces, alphas, cfg, theta_start);
}

MarkerTrace synthesize_trace(const SkeletonConfig& cfg, const ModuleState& state,
                             double perturbation_mm, std::mt19937_64& rng,
                             std::string step_label) {
  std::uniform_real_distribution<double> direction(-kPi, kPi);
  MarkerTrace trace;
  trace.step_label = std::move(step_label);
  const Pose2& base = state.rib_poses.front();
  trace.origin_marker = base.position();
  trace.axis_marker = base.position() + cfg.segment_arc_length * heading(base.theta + 0.5 * kPi);
  trace.rib_centers.reserve(state.rib_poses.size());
  for (const Pose2& pose : state.rib_poses) {
    trace.rib_centers.push_back(pose.position() + perturbation_mm * heading(direction(rng)));
  }
  return trace;
}

MarkerTrace transform_trace(const MarkerTrace& trace, double rotation, Point2 translation) {
  MarkerTrace out;
  out.step_label = trace.step_label;
  out.origin_marker = rotate(trace.origin_marker, rotation) + translation;
  out.axis_marker = rotate(trace.axis_marker, rotation) + translation;
  out.rib_centers.reserve(trace.rib_centers.size());
  for (const Point2& p : trace.rib_centers) out.rib_centers.push_back(rotate(p, rotation) + translation);
  return out;
}

std::vector<MarkerTrace> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::invalid_argument, "trace CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 7 || header[0] != "step" || header[1] != "ox" || header[2] != "oy" ||
      header[3] != "ax" || header[4] != "ay" || (header.size() - 5) % 2 != 0) {
    throw Error(ErrorCode::invalid_argument,
                "trace CSV header must be step,ox,oy,ax,ay,x0,y0,...");
  }
  const std::size_t ribs = (header.size() - 5) / 2;
  for (std::size_t i = 0; i < ribs; ++i) {
    if (header[5 + 2 * i] != "x" + std::to_string(i) ||
        header[6 + 2 * i] != "y" + std::to_string(i)) {
      throw Error(ErrorCode::invalid_argument, "trace CSV rib columns out of order");
    }
  }

  std::vector<MarkerTrace> traces;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::invalid_argument,
                  "trace CSV row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " columns, expected " +
                      std::to_string(header.size()));
    }
    MarkerTrace t;
    t.step_label = cells[0];
    t.origin_marker = {parse_number(cells[1], row), parse_number(cells[2], row)};
    t.axis_marker = {parse_number(cells[3], row), parse_number(cells[4], row)};
    for (std::size_t i = 0; i < ribs; ++i) {
      t.rib_centers.push_back(
          {parse_number(cells[5 + 2 * i], row), parse_number(cells[6 + 2 * i], row)});
    }
    traces.push_back(std::move(t));
  }
  return traces;
}

void write_trace_csv(std::ostream& out, const std::vector<MarkerTrace>& traces) {
  const std::size_t ribs = traces.empty() ? 0 : traces.front().rib_centers.size();
  out << "step,ox,oy,ax,ay";
  for (std::size_t i = 0; i < ribs; ++i) out << ",x" << i << ",y" << i;
  out << '\n' << std::setprecision(17);
  for (const MarkerTrace& t : traces) {
    if (t.rib_centers.size() != ribs) {
      throw Error(ErrorCode::invalid_argument, "traces have differing rib counts");
    }
    out << t.step_label << ',' << t.origin_marker.x << ',' << t.origin_marker.y << ','
        << t.axis_marker.x << ',' << t.axis_marker.y;
    for (const Point2& p : t.rib_centers) out << ',' << p.x << ',' << p.y;
    out << '\n';
  }
}

void write_rmse_csv(std::ostream& out, const std::vector<MarkerTrace>& traces,
                    const RmseReport& report) {
  out << "step,rmse_mm\n" << std::setprecision(17);
  for (std::size_t k = 0; k < report.per_step_rmse.size(); ++k) {
    out << (k < traces.size() ? traces[k].step_label : std::to_string(k)) << ','
        << report.per_step_rmse[k] << '\n';
  }
}

}  // namespace softsnap
