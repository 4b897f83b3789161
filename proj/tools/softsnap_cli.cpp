// softsnap: command-line front end. Every numerical verb builds the same JSON
// request the HTTP service takes and runs it through the shared handlers.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "softsnap/evaluation.hpp"
#include "softsnap/serialization.hpp"
#include "softsnap/service/handlers.hpp"
#include "softsnap/service/server.hpp"
#include "softsnap/service/session_store.hpp"

using namespace softsnap;
using softsnap::json;

namespace {

service::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

json load_config(const std::string& path) {
  return path.empty() ? service::default_config() : read_json_file(path);
}

json load_pattern(const std::string& path, const std::string& offsets) {
  if (!offsets.empty()) {
    json arr = json::array();
    for (double v : parse_angle_list(offsets, AngleUnits::radians)) arr.push_back(v);
    return arr;
  }
  if (path.empty()) throw Error(ErrorCode::invalid_argument, "give --pattern or --offsets");
  return read_json_file(path);
}

// Writes to `path`, or stdout for "" / "-".
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + path);
  fn(out);
}

void write_json(const std::string& path, const json& doc) {
  with_output(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot open " + path);
  return in;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threading design workbench for cable-driven soft modules"};
  app.require_subcommand(1);

  std::string config_path, pattern_path, offsets, out;

  auto add_model = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "skeleton config JSON (default: calibrated)");
    cmd->add_option("--pattern", pattern_path, "threading pattern JSON");
    cmd->add_option("--offsets", offsets, "threading pattern inline, e.g. \"-10,10,-10\"");
  };

  // solve
  double target_length = 0.0, theta_start = kDefaultThetaStart;
  auto* solve = app.add_subcommand("solve", "equilibrium shape at one string length");
  add_model(solve);
  solve->add_option("--target-length", target_length, "total string length, mm")->required();
  solve->add_option("--theta-start", theta_start, "base rib orientation, rad");
  solve->add_option("--out", out, "output JSON (default stdout)");

  // sweep
  double contraction = 80.0, step = 1.0;
  bool ndjson = false;
  auto* sweep = app.add_subcommand("sweep", "contraction sweep with warm starts");
  add_model(sweep);
  sweep->add_option("--contraction", contraction, "maximum contraction, mm");
  sweep->add_option("--step", step, "contraction step, mm");
  sweep->add_option("--theta-start", theta_start, "base rib orientation, rad");
  sweep->add_flag("--ndjson", ndjson, "write JSON rows instead of CSV");
  sweep->add_option("--out", out, "output file (default stdout)");

  // design
  std::string target_angles, units = "deg";
  std::size_t max_candidates = 10000, alternates = 5;
  unsigned workers = 0;
  bool strict = false;
  auto* design = app.add_subcommand("design", "threading pattern for target angles");
  design->add_option("--config", config_path, "skeleton config JSON (default: calibrated)");
  design->add_option("--target-angles", target_angles, "comma-separated angles")->required();
  design->add_option("--units", units, "deg or rad")->check(CLI::IsMember({"deg", "rad"}));
  design->add_option("--max-candidates", max_candidates, "forward solves at most");
  design->add_option("--alternates", alternates, "next-best patterns to report");
  design->add_option("--workers", workers, "threads (0: all cores)");
  design->add_flag("--strict-filter", strict, "fail when no path passes the length filter");
  design->add_option("--out", out, "output JSON (default stdout)");

  // evaluate
  std::string traces_path, sweep_path, angles_path, rmse_csv;
  auto* evaluate = app.add_subcommand("evaluate", "RMSE of marker traces against simulation");
  evaluate->add_option("--config", config_path, "skeleton config JSON (default: calibrated)");
  evaluate->add_option("--traces", traces_path, "trace CSV")->required();
  auto* from_sweep = evaluate->add_option("--sweep", sweep_path, "sweep CSV, row k for trace k");
  auto* from_angles =
      evaluate->add_option("--angles", angles_path, "JSON array of angle lists (rad)");
  from_sweep->excludes(from_angles);
  evaluate->add_option("--theta-start", theta_start, "base rib orientation, rad");
  evaluate->add_option("--rmse-csv", rmse_csv, "also write step,rmse_mm");
  evaluate->add_option("--out", out, "report JSON (default stdout)");

  // synth-traces
  double perturbation = 2.0;
  std::uint64_t seed = 1;
  auto* synth = app.add_subcommand("synth-traces", "synthetic marker traces from a sweep");
  synth->add_option("--config", config_path, "skeleton config JSON (default: calibrated)");
  synth->add_option("--sweep", sweep_path, "sweep CSV")->required();
  synth->add_option("--perturbation", perturbation, "displacement of every rib center, mm");
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("--theta-start", theta_start, "base rib orientation, rad");
  synth->add_option("--out", out, "trace CSV (default stdout)");

  // calibrate
  double target_total = 270.0;
  std::string angles_list;
  auto* calibrate = app.add_subcommand("calibrate", "fit the segment arc length");
  add_model(calibrate);
  calibrate->add_option("--angles", angles_list, "held angles, comma-separated")->required();
  calibrate->add_option("--units", units, "deg or rad")->check(CLI::IsMember({"deg", "rad"}));
  calibrate->add_option("--target-total", target_total, "total string length, mm");
  calibrate->add_option("--out", out, "config JSON (default stdout)");

  // serve
  int port = 8080;
  std::string host = "127.0.0.1", data_dir, static_dir;
  auto* serve = app.add_subcommand("serve", "local HTTP service");
  serve->add_option("--port", port, "TCP port (0: any free port)");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--data-dir", data_dir, "session store directory")
      ->envname("SOFTSNAP_DATA_DIR");
  serve->add_option("--static-dir", static_dir, "static files served under /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (*solve) {
      json request{{"config", load_config(config_path)},
                   {"pattern", load_pattern(pattern_path, offsets)},
                   {"target_length", target_length},
                   {"theta_start", theta_start}};
      write_json(out, service::solve(request));
    } else if (*sweep) {
      json request{{"config", load_config(config_path)},
                   {"pattern", load_pattern(pattern_path, offsets)},
                   {"contraction_max", contraction},
                   {"step", step},
                   {"theta_start", theta_start}};
      json trailer;
      with_output(out, [&](std::ostream& os) {
        if (ndjson) {
          trailer = service::sweep(request, [&](const json& row) {
            os << row.dump() << '\n';
            return true;
          });
          os << trailer.dump() << '\n';
          return;
        }
        std::vector<SweepStep> steps;
        trailer = service::sweep(request, [&](const json& row) {
          SweepStep s;
          s.index = row["step_index"].get<int>();
          s.target_length = row["target_length_mm"].get<double>();
          s.solution.alphas = row["alphas"].get<std::vector<double>>();
          s.solution.energy = row["energy"].get<double>();
          s.midpoint = {row["mid_x_mm"].get<double>(), row["mid_y_mm"].get<double>()};
          steps.push_back(std::move(s));
          return true;
        });
        write_sweep_csv(os, config_from_json(request["config"]).segment_count(), steps);
      });
      if (!trailer["stopped_early"].is_null()) {
        std::cerr << "sweep stopped early: " << trailer["stopped_early"].dump() << '\n';
      }
    } else if (*design) {
      json angles = json::array();
      for (double a : parse_angle_list(target_angles, parse_units(units))) angles.push_back(a);
      json request{{"config", load_config(config_path)},
                   {"target_alphas", angles},
                   {"max_candidates", max_candidates},
                   {"alternates", alternates},
                   {"workers", workers},
                   {"strict_filter", strict}};
      write_json(out, service::design(request));
    } else if (*evaluate) {
      const SkeletonConfig cfg = config_from_json(load_config(config_path));
      std::ifstream tin = open_input(traces_path);
      const std::vector<MarkerTrace> traces = read_trace_csv(tin);
      std::vector<std::vector<double>> sims;
      if (!sweep_path.empty()) {
        std::ifstream sin = open_input(sweep_path);
        for (const SweepRow& row : read_sweep_csv(sin)) sims.push_back(row.alphas);
      } else if (!angles_path.empty()) {
        for (const json& a : read_json_file(angles_path)) {
          sims.push_back(angles_from_json(a, AngleUnits::radians));
        }
      } else {
        throw Error(ErrorCode::invalid_argument, "give --sweep or --angles");
      }
      // traces may cover a subset of the sweep: match by step label when numeric
      std::vector<std::vector<double>> matched;
      for (std::size_t k = 0; k < traces.size(); ++k) {
        std::size_t index = k;
        try {
          index = std::stoul(traces[k].step_label);
        } catch (const std::exception&) {
        }
        if (index >= sims.size()) {
          throw Error(ErrorCode::invalid_argument,
                      "trace step " + traces[k].step_label + " has no simulated row");
        }
        matched.push_back(sims[index]);
      }
      const RmseReport report = rmse_against_angles(traces, matched, cfg, theta_start);
      json doc = rmse_report_to_json(report);
      json labels = json::array();
      for (const MarkerTrace& t : traces) labels.push_back(t.step_label);
      doc["steps"] = labels;
      write_json(out, doc);
      if (!rmse_csv.empty()) {
        with_output(rmse_csv, [&](std::ostream& os) { write_rmse_csv(os, traces, report); });
      }
    } else if (*synth) {
      const SkeletonConfig cfg = config_from_json(load_config(config_path));
      std::ifstream sin = open_input(sweep_path);
      std::mt19937_64 rng(seed);
      std::vector<MarkerTrace> traces;
      for (const SweepRow& row : read_sweep_csv(sin)) {
        traces.push_back(synthesize_trace(cfg, forward_kinematics(cfg, row.alphas, theta_start),
                                          perturbation, rng, std::to_string(row.step_index)));
      }
      with_output(out, [&](std::ostream& os) { write_trace_csv(os, traces); });
    } else if (*calibrate) {
      SkeletonConfig cfg = config_from_json(load_config(config_path));
      const ThreadingPattern pattern = pattern_from_json(load_pattern(pattern_path, offsets));
      const std::vector<double> held = parse_angle_list(angles_list, parse_units(units));
      cfg.segment_arc_length = calibrate_segment_arc_length(cfg, pattern, held, target_total);
      write_json(out, config_to_json(cfg));
    } else if (*serve) {
      service::ServerOptions options;
      options.host = host;
      options.port = port;
      options.data_dir = data_dir.empty() ? service::default_data_dir() : std::filesystem::path(data_dir);
      if (!static_dir.empty()) options.static_dir = static_dir;
      service::Server server(options);
      const int bound = server.bind();
      std::cout << "listening on http://" << host << ':' << bound << " (data "
                << options.data_dir.string() << ")" << std::endl;
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.run();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << service::error_body(e.code(), e.what()).dump() << '\n';
    return e.code() == ErrorCode::invalid_argument ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << service::error_body("internal", e.what()).dump() << '\n';
    return 1;
  }
  return 0;
}
