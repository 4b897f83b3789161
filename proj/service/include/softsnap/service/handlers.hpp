#pragma once

#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "softsnap/error.hpp"

namespace softsnap::service {

using json = nlohmann::json;

// Request handlers shared by the CLI and the HTTP server. Requests and
// responses are JSON documents; angles are radians. A missing "config" means
// the calibrated default skeleton. Failures surface as softsnap::Error.

/// {config?, pattern, target_length, theta_start?, tolerance?, initial_alphas?,
///  max_iterations?, samples_per_segment?}
/// -> solution with rib_poses and centerline.
json solve(const json& request);

/// {config?, pattern, contraction_max, step, theta_start?, tolerance?}
/// Calls on_row with each step as it is solved; returning false cancels.
/// Returns the trailer {"done", "steps", "cancelled", "stopped_early"}.
json sweep(const json& request, const std::function<bool(const json&)>& on_row);

/// {config?, target_alphas, max_candidates?, rank_tolerance?, alternates?,
///  workers?, strict_filter?} -> best result, alternates, path counts.
json design(const json& request);

json default_config();

/// Validates the parts of a sweep request that can fail before streaming.
void check_sweep_request(const json& request);

/// HTTP status for a library error: 400 for bad input, 404 for unknown
/// sessions, 422 for model-level failures.
int http_status(ErrorCode code);

json error_body(ErrorCode code, const std::string& message);
json error_body(const std::string& code, const std::string& message);

}  // namespace softsnap::service
