#include "softsnap/service/handlers.hpp"

#include <cstdint>

#include "softsnap/forward_solver.hpp"
#include "softsnap/inverse_designer.hpp"
#include "softsnap/serialization.hpp"

namespace softsnap::service {
namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::invalid_argument, what); }

void require_object(const json& request) {
  if (!request.is_object()) bad("request body must be a JSON object");
}

SkeletonConfig config_of(const json& request) {
  if (!request.contains("config") || request["config"].is_null()) return default_skeleton_config();
  return config_from_json(request["config"]);
}

double number(const json& request, const char* key) {
  if (!request.contains(key)) bad(std::string("missing field '") + key + "'");
  if (!request[key].is_number()) bad(std::string("field '") + key + "' must be a number");
  return request[key].get<double>();
}

double number_or(const json& request, const char* key, double fallback) {
  return request.contains(key) ? number(request, key) : fallback;
}

template <typename T>
T unsigned_or(const json& request, const char* key, T fallback) {
  if (!request.contains(key)) return fallback;
  const json& v = request[key];
  if (!v.is_number_unsigned() && (!v.is_number_integer() || v.get<std::int64_t>() < 0)) {
    bad(std::string("field '") + key + "' must be a non-negative integer");
  }
  return request[key].get<T>();
}

bool bool_or(const json& request, const char* key, bool fallback) {
  if (!request.contains(key)) return fallback;
  if (!request[key].is_boolean()) bad(std::string("field '") + key + "' must be a boolean");
  return request[key].get<bool>();
}

EquilibriumProblem problem_of(const json& request) {
  require_object(request);
  EquilibriumProblem p;
  p.config = config_of(request);
  if (!request.contains("pattern")) bad("missing field 'pattern'");
  p.pattern = pattern_from_json(request["pattern"]);
  p.pattern.validate(p.config);
  p.theta_start = number_or(request, "theta_start", kDefaultThetaStart);
  p.tolerance = number_or(request, "tolerance", kDefaultLengthTolerance);
  if (!(p.tolerance > 0.0)) bad("tolerance must be positive");
  p.max_iterations = unsigned_or<int>(request, "max_iterations", kDefaultMaxIterations);
  if (request.contains("initial_alphas") && !request["initial_alphas"].is_null()) {
    p.initial_alphas = angles_from_json(request["initial_alphas"], AngleUnits::radians);
  }
  return p;
}

}  // namespace

json solve(const json& request) {
  EquilibriumProblem problem = problem_of(request);
  problem.target_length = number(request, "target_length");
  const int samples = unsigned_or<int>(request, "samples_per_segment", kDefaultCenterlineSamples);
  const EquilibriumSolution sol = solve_equilibrium(problem);
  json doc = solution_to_json(
      sol, forward_kinematics(problem.config, sol.alphas, problem.theta_start, samples));
  doc["target_length"] = problem.target_length;
  const Point2 mid = skeleton_midpoint(problem.config, sol.alphas, problem.theta_start);
  doc["midpoint"] = {mid.x, mid.y};
  return doc;
}

void check_sweep_request(const json& request) {
  const EquilibriumProblem problem = problem_of(request);
  const double cmax = number(request, "contraction_max");
  const double step = number(request, "step");
  if (!(cmax >= 0.0)) bad("contraction_max must be non-negative");
  if (!(step > 0.0) || (cmax > 0.0 && step > cmax)) bad("step must satisfy 0 < step <= contraction_max");
  if (!(original_string_length(problem.config, problem.pattern) - cmax > 0.0)) {
    bad("contraction_max must be shorter than the straight string length");
  }
}

json sweep(const json& request, const std::function<bool(const json&)>& on_row) {
  check_sweep_request(request);
  EquilibriumProblem problem = problem_of(request);
  problem.target_length = original_string_length(problem.config, problem.pattern);
  const SweepResult r =
      sweep_contraction(problem, number(request, "contraction_max"), number(request, "step"),
                        [&](const SweepStep& step) { return on_row(sweep_row_to_json(step)); });
  json trailer{{"done", true},
               {"steps", r.steps.size()},
               {"cancelled", r.cancelled},
               {"stopped_early", nullptr}};
  if (r.stopped_early) {
    trailer["stopped_early"] = error_body(r.stopped_early->code(), r.stopped_early->what());
  }
  return trailer;
}

json design(const json& request) {
  require_object(request);
  DesignQuery q;
  q.config = config_of(request);
  if (!request.contains("target_alphas")) bad("missing field 'target_alphas'");
  q.target_alphas = angles_from_json(request["target_alphas"], AngleUnits::radians);
  q.max_candidates = unsigned_or<std::size_t>(request, "max_candidates", q.max_candidates);
  q.rank_tolerance = number_or(request, "rank_tolerance", q.rank_tolerance);
  q.alternates = unsigned_or<std::size_t>(request, "alternates", q.alternates);
  q.workers = unsigned_or<unsigned>(request, "workers", q.workers);
  q.strict_filter = bool_or(request, "strict_filter", q.strict_filter);
  return design_outcome_to_json(design_with_alternates(q));
}

json default_config() { return config_to_json(default_skeleton_config()); }

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
      return 400;
    case ErrorCode::unknown_session:
      return 404;
    case ErrorCode::infeasible_target:
    case ErrorCode::did_not_converge:
    case ErrorCode::ambiguous_inversion:
    case ErrorCode::no_valid_path:
    case ErrorCode::all_candidates_failed:
      return 422;
  }
  return 500;
}

json error_body(ErrorCode code, const std::string& message) {
  return error_body(std::string(to_string(code)), message);
}

json error_body(const std::string& code, const std::string& message) {
  return {{"schema", kSchemaVersion}, {"error", {{"code", code}, {"message", message}}}};
}

}  // namespace softsnap::service
