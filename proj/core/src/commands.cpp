#include "qhpc/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qhpc/dctg.hpp"
#include "qhpc/errors.hpp"
#include "qhpc/scenario.hpp"
#include "qhpc/scheduler.hpp"
#include "qhpc/trace.hpp"

namespace qhpc {

namespace {

namespace fs = std::filesystem;

std::string read_file_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ScenarioError("cannot write file '" + path + "'");
  out << content;
}

void print_graph_summary(std::ostream& out, const HybridWorkloadDescriptor& hwd,
                         GraphTemplate tmpl) {
  TaskGraph g = build_graph(hwd, tmpl);
  PathClassification cls = classify_paths(g);
  out << "graph: template=" << to_string(tmpl) << " nodes=" << g.nodes.size()
      << " edges=" << g.edges.size() << " loops=" << g.loops.size()
      << " latency_critical_chains=" << cls.latency_critical_chains.size()
      << " latency_tolerant_batches=" << cls.latency_tolerant_batches.size()
      << "\n";
}

}  // namespace

bool metrics_equal(const MetricsReport& a, const MetricsReport& b, double tol) {
  auto close = [tol](double x, double y) { return std::abs(x - y) <= tol; };
  if (!close(a.makespan_s, b.makespan_s)) return false;
  if (a.tier_utilization.size() != b.tier_utilization.size()) return false;
  for (const auto& [tier, util] : a.tier_utilization) {
    auto it = b.tier_utilization.find(tier);
    if (it == b.tier_utilization.end() || !close(util, it->second)) return false;
  }
  return close(a.qpu_idle_fraction, b.qpu_idle_fraction) &&
         close(a.mean_job_wait_s, b.mean_job_wait_s) &&
         a.fallback_gpu_emulation == b.fallback_gpu_emulation &&
         a.fallback_queued == b.fallback_queued &&
         a.fallback_degraded_notice == b.fallback_degraded_notice &&
         a.degraded_job_count == b.degraded_job_count &&
         a.total_shots_executed == b.total_shots_executed &&
         close(a.cpu_idle_core_s, b.cpu_idle_core_s) &&
         a.completed_job_count == b.completed_job_count &&
         a.pending_job_count == b.pending_job_count;
}

int cmd_submit(const std::string& hwd_path, const std::string& scenario_path,
               std::ostream& out, std::ostream& err) {
  HybridWorkloadDescriptor hwd;
  Scenario scn;
  try {
    scn = load_scenario_file(scenario_path);
  } catch (const Error& e) {
    err << "scenario error: " << e.what() << "\n";
    return kExitBadInput;
  }
  try {
    hwd = parse_hwd(read_file_or_throw(hwd_path), scn.config.limits);
  } catch (const Error& e) {
    err << "descriptor error: " << e.what() << "\n";
    return kExitBadInput;
  }

  out << "job " << hwd.job_id << ": priority=" << hwd.priority
      << " mode=" << to_string(hwd.mode_hint)
      << " quantum=" << (hwd.quantum ? "yes" : "no") << "\n";

  // Static feasibility, load ignored.
  bool classical_ok = false;
  for (const ResourceRecord& r : scn.registry) {
    if (r.cpu_cores >= hwd.classical.cpu_cores &&
        r.gpu_count >= hwd.classical.gpu_count &&
        r.memory_gb >= hwd.classical.memory_gb) {
      classical_ok = true;
      break;
    }
  }
  if (!classical_ok) {
    err << "infeasible: no resource satisfies the classical demand\n";
    return kExitInfeasible;
  }

  GraphTemplate tmpl =
      hwd.quantum ? GraphTemplate::vqe_loop : GraphTemplate::classical_only;
  print_graph_summary(out, hwd, tmpl);

  if (!hwd.quantum) {
    out << "qpu candidates: 0\n";
    out << "feasible\n";
    return kExitOk;
  }

  ResourceRegistry registry(scn.registry, scn.seed, scn.config.drift);
  ClusterState state(scn.registry);
  Scheduler scheduler(scn.config);
  std::vector<QpuSelection> ranked =
      rank_qpus(registry, *hwd.quantum, scheduler.weights(), scheduler.norms(),
                scn.config.fabric, state, 0.0);

  out << "qpu candidates: " << ranked.size() << "\n";
  for (size_t i = 0; i < ranked.size(); ++i) {
    const QssBreakdown& b = ranked[i].breakdown;
    out << "  " << (i + 1) << ". " << ranked[i].resource_id
        << " total=" << format_double(b.total)
        << " fidelity=" << format_double(b.fidelity_term)
        << " connectivity=" << format_double(b.connectivity_term)
        << " queue=" << format_double(b.queue_term)
        << " latency=" << format_double(b.latency_term) << "\n";
  }

  if (ranked.empty()) {
    FallbackAction act =
        choose_fallback(*hwd.quantum, registry, scn.config.midware);
    if (act == FallbackAction::gpu_emulation) {
      out << "no feasible QPU; policy routes to GPU emulation\n";
      out << "feasible\n";
      return kExitOk;
    }
    err << "infeasible: no feasible QPU\n";
    return kExitInfeasible;
  }
  out << "feasible\n";
  return kExitOk;
}

int cmd_run(const std::string& scenario_path, const RunOptions& options,
            std::ostream& out, std::ostream& err) {
  Scenario scn;
  try {
    scn = load_scenario_file(scenario_path);
    if (options.seed) scn.seed = *options.seed;
    if (options.horizon_s) scn.horizon_s = *options.horizon_s;
    if (options.mode) force_mode(scn, *options.mode);
    if (options.weights) {
      QssWeights w = QssWeights::normalized((*options.weights)[0],
                                            (*options.weights)[1],
                                            (*options.weights)[2],
                                            (*options.weights)[3]);
      scn.config.policy.w_fidelity = w.w_fidelity;
      scn.config.policy.w_connectivity = w.w_connectivity;
      scn.config.policy.w_queue = w.w_queue;
      scn.config.policy.w_latency = w.w_latency;
    }
  } catch (const Error& e) {
    err << "scenario error: " << e.what() << "\n";
    return kExitBadInput;
  }

  RunResult result;
  try {
    result = run(scn);
  } catch (const InvariantViolation& e) {
    err << "internal invariant violated: " << e.what() << "\n";
    return kExitInternal;
  } catch (const Error& e) {
    err << "scenario error: " << e.what() << "\n";
    return kExitBadInput;
  }

  std::string trace_path = options.trace_path.empty()
                               ? options.out_dir + "/trace.tsv"
                               : options.trace_path;
  std::string metrics_path = options.metrics_path.empty()
                                 ? options.out_dir + "/metrics.txt"
                                 : options.metrics_path;
  try {
    write_file(trace_path, result.trace_text);
    write_file(metrics_path, metrics_to_text(result.metrics));
    if (!options.csv_path.empty())
      write_file(options.csv_path, job_rows_to_csv(result.job_rows));
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitBadInput;
  }

  const MetricsReport& m = result.metrics;
  out << "makespan_s: " << format_double(m.makespan_s) << "\n";
  for (const auto& [tier, util] : m.tier_utilization) {
    out << "util_" << to_string(tier) << ": " << format_double(util) << "\n";
  }
  out << "fallbacks: gpu_emulation=" << m.fallback_gpu_emulation
      << " queued=" << m.fallback_queued
      << " degraded_notice=" << m.fallback_degraded_notice << "\n";
  out << "jobs: completed=" << m.completed_job_count
      << " degraded=" << m.degraded_job_count
      << " pending=" << m.pending_job_count << "\n";
  out << "trace: " << trace_path << "\n";
  out << "metrics: " << metrics_path << "\n";
  return kExitOk;
}

int cmd_report(const std::string& trace_path, const std::string& check_metrics_path,
               std::ostream& out, std::ostream& err) {
  TraceFile trace;
  try {
    trace = parse_trace(read_file_or_throw(trace_path));
  } catch (const Error& e) {
    err << "trace error: " << e.what() << "\n";
    return kExitBadInput;
  }

  std::vector<std::string> problems;
  MetricsReport recomputed;
  std::vector<JobRow> rows;
  try {
    problems = check_trace(trace);
    recomputed = recompute_metrics(trace);
    rows = job_rows_from_trace(trace);
  } catch (const Error& e) {
    err << "trace error: " << e.what() << "\n";
    return kExitBadInput;
  }
  if (!problems.empty()) {
    for (const std::string& p : problems) err << "violation: " << p << "\n";
    return kExitBadInput;
  }

  out << job_rows_to_csv(rows);
  out << metrics_to_text(recomputed);

  if (!check_metrics_path.empty()) {
    MetricsReport emitted;
    try {
      emitted = metrics_from_text(read_file_or_throw(check_metrics_path));
    } catch (const Error& e) {
      err << "metrics error: " << e.what() << "\n";
      return kExitBadInput;
    }
    if (!metrics_equal(recomputed, emitted, 1e-9)) {
      err << "metrics mismatch: recomputed values differ from " <<
          check_metrics_path << "\n";
      return kExitBadInput;
    }
    out << "metrics check: ok\n";
  }
  return kExitOk;
}

int cmd_validate(const std::string& path, const std::string& kind,
                 std::ostream& out, std::ostream& err) {
  std::string text;
  try {
    text = read_file_or_throw(path);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitBadInput;
  }

  std::string effective = kind;
  if (effective == "auto") {
    // Scenario documents carry a registry or horizon at top level.
    effective = (text.find("\nregistry:") != std::string::npos ||
                 text.rfind("registry:", 0) == 0 ||
                 text.find("\nhorizon_s:") != std::string::npos ||
                 text.rfind("horizon_s:", 0) == 0)
                    ? "scenario"
                    : "hwd";
  }
  try {
    if (effective == "scenario") {
      Scenario s = load_scenario_file(path);
      out << "valid scenario: " << s.registry.size() << " resources, "
          << s.jobs.size() << " jobs, horizon " << format_double(s.horizon_s)
          << " s\n";
    } else if (effective == "hwd") {
      HybridWorkloadDescriptor d = parse_hwd(text);
      out << "valid descriptor: " << d.job_id
          << (d.quantum ? " (quantum)" : " (classical)") << "\n";
    } else {
      err << "unknown kind '" << kind << "' (hwd|scenario|auto)\n";
      return kExitBadInput;
    }
  } catch (const Error& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitBadInput;
  }
  return kExitOk;
}

}  // namespace qhpc
