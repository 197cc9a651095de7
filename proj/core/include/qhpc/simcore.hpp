#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qhpc/scenario.hpp"
#include "qhpc/types.hpp"

namespace qhpc {

enum class EventKind {
  job_submit,
  sched_pass,
  task_start,
  task_end,
  qpu_phase_start,
  qpu_phase_end,
  cores_released,
  cores_reacquired,
  calib_poll,
  recalibration,
  fallback,
  job_end,
};

std::string_view to_string(EventKind k);
bool event_kind_from_string(std::string_view s, EventKind& out);

/// Aggregate run statistics. All ratios live in [0,1]; durations are
/// seconds converted from exact nanosecond sums.
struct MetricsReport {
  double makespan_s = 0.0;
  std::map<Tier, double> tier_utilization;  // allocated slot-seconds over capacity
  double qpu_idle_fraction = 0.0;           // horizon-normalized, device-averaged
  double mean_job_wait_s = 0.0;
  std::int64_t fallback_gpu_emulation = 0;
  std::int64_t fallback_queued = 0;
  std::int64_t fallback_degraded_notice = 0;
  std::int64_t degraded_job_count = 0;
  std::int64_t total_shots_executed = 0;    // on QPU hardware
  double cpu_idle_core_s = 0.0;             // allocated-but-idle core-seconds
  std::int64_t completed_job_count = 0;
  std::int64_t pending_job_count = 0;       // truncated by the horizon
};

/// One row of the per-job table.
struct JobRow {
  std::string job_id;
  double submit_s = 0.0;
  double start_s = 0.0;
  double end_s = 0.0;
  double wait_s = 0.0;
  std::string state;  // completed | degraded | pending
  CoschedMode mode = CoschedMode::simultaneous;
  FallbackAction fallback = FallbackAction::none;
  std::string resource_id;
  std::string qpu_id;
  std::int64_t shots_executed = 0;
};

struct RunResult {
  std::string trace_text;
  MetricsReport metrics;
  std::vector<JobRow> job_rows;
};

/// Execute a scenario to completion (or to its horizon). Deterministic:
/// identical scenario and seed produce byte-identical trace text.
/// Throws ScenarioError on invalid input and InvariantViolation if an
/// internal consistency check fails mid-run.
RunResult run(const Scenario& scenario);

struct ReplayDivergence {
  bool equal = false;
  long event_index = -1;    // -1: header-only difference
  std::string field;        // "time" | "seq" | "kind" | payload key | "event_count"
};

/// Compare two traces event by event and localize the first divergence.
/// Header metadata (seed, constants) is not compared; a format version
/// mismatch throws FormatError.
ReplayDivergence replay_check(std::string_view trace_a, std::string_view trace_b);

}  // namespace qhpc
