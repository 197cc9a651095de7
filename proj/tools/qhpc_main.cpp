// qhpc: hybrid quantum-classical cluster simulator front-end.
//
// Subcommands: submit, run, report, validate. Exit codes: 0 ok, 2 bad input,
// 3 infeasible submission, 4 internal invariant abort.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qhpc/commands.hpp"
#include "qhpc/types.hpp"

namespace {

bool parse_weights(const std::string& csv, std::array<double, 4>& out) {
  std::istringstream ss(csv);
  std::string tok;
  size_t i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i >= 4) return false;
    try {
      out[i++] = std::stod(tok);
    } catch (...) {
      return false;
    }
  }
  return i == 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qhpc - deterministic simulator for hybrid quantum-classical clusters"};
  app.require_subcommand(1);

  std::string hwd_path, scenario_path, trace_path, metrics_path, kind = "auto";
  std::string check_path;
  qhpc::RunOptions run_opts;
  std::string mode_str, weights_str;
  std::uint64_t seed = 0;
  double horizon = 0;

  CLI::App* submit = app.add_subcommand(
      "submit", "Validate a descriptor against a scenario's registry");
  submit->add_option("hwd", hwd_path, "descriptor file")->required();
  submit->add_option("scenario", scenario_path, "scenario file")->required();

  CLI::App* run = app.add_subcommand("run", "Run a scenario");
  run->add_option("scenario", scenario_path, "scenario file");
  CLI::Option* seed_opt = run->add_option("--seed", seed, "override scenario seed");
  CLI::Option* horizon_opt =
      run->add_option("--horizon", horizon, "override horizon (seconds)");
  run->add_option("--mode", mode_str,
                  "force co-scheduling mode: auto|simultaneous|interleaved|async");
  run->add_option("--weights", weights_str, "QSS weights f,c,q,l (normalized)");
  run->add_option("--out-dir", run_opts.out_dir, "output directory");
  run->add_option("--trace", run_opts.trace_path, "trace output path");
  run->add_option("--metrics", run_opts.metrics_path, "metrics output path");
  run->add_option("--csv", run_opts.csv_path, "per-job CSV output path");

  CLI::App* report = app.add_subcommand(
      "report", "Recompute metrics and the per-job table from a trace");
  report->add_option("trace", trace_path, "trace file")->required();
  report->add_option("--check", check_path,
                     "metrics file to compare against (1e-9 tolerance)");

  CLI::App* validate =
      app.add_subcommand("validate", "Validate a descriptor or scenario file");
  validate->add_option("file", metrics_path, "file to validate")->required();
  validate->add_option("--kind", kind, "hwd|scenario|auto");

  CLI11_PARSE(app, argc, argv);

  if (submit->parsed()) {
    return qhpc::cmd_submit(hwd_path, scenario_path, std::cout, std::cerr);
  }
  if (run->parsed()) {
    if (scenario_path.empty()) {
      const char* env = std::getenv("QHPC_SIM_CONFIG");
      if (env == nullptr || *env == '\0') {
        std::cerr << "no scenario given and QHPC_SIM_CONFIG is unset\n";
        return qhpc::kExitBadInput;
      }
      scenario_path = env;
    }
    if (*seed_opt) run_opts.seed = seed;
    if (*horizon_opt) run_opts.horizon_s = horizon;
    if (!mode_str.empty()) {
      qhpc::CoschedMode mode;
      if (!qhpc::mode_from_string(mode_str, mode)) {
        std::cerr << "unknown mode '" << mode_str << "'\n";
        return qhpc::kExitBadInput;
      }
      if (mode != qhpc::CoschedMode::auto_select) run_opts.mode = mode;
    }
    if (!weights_str.empty()) {
      std::array<double, 4> w{};
      if (!parse_weights(weights_str, w)) {
        std::cerr << "expected --weights f,c,q,l\n";
        return qhpc::kExitBadInput;
      }
      run_opts.weights = w;
    }
    return qhpc::cmd_run(scenario_path, run_opts, std::cout, std::cerr);
  }
  if (report->parsed()) {
    return qhpc::cmd_report(trace_path, check_path, std::cout, std::cerr);
  }
  if (validate->parsed()) {
    return qhpc::cmd_validate(metrics_path, kind, std::cout, std::cerr);
  }
  return qhpc::kExitBadInput;
}
