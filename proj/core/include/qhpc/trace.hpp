#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qhpc/simcore.hpp"
#include "qhpc/types.hpp"

namespace qhpc {

/// One parsed trace event line.
struct TraceEvent {
  SimTimeNs time_ns = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::job_submit;
  std::vector<std::pair<std::string, std::string>> payload;

  const std::string* get(std::string_view key) const;
};

/// Resource summary carried in the trace header, enough to recompute every
/// metric from the event stream alone.
struct TraceResource {
  std::string resource_id;
  Tier tier = Tier::r1;
  int cpu_cores = 0;
  int gpu_count = 0;
  int qpu_count = 0;
};

struct TraceFile {
  int version = 0;
  std::uint64_t seed = 0;
  SimTimeNs horizon_ns = 0;
  std::vector<std::pair<std::string, std::string>> header;  // constants etc.
  std::vector<TraceResource> resources;
  std::vector<TraceEvent> events;
  bool has_footer = false;
  SimTimeNs footer_makespan_ns = 0;
};

/// Parse trace text. Throws FormatError on malformed input or unsupported
/// version.
TraceFile parse_trace(std::string_view text);

/// Recompute the aggregate metrics from a parsed trace: an independent
/// implementation of the metric definitions used by the live engine.
MetricsReport recompute_metrics(const TraceFile& trace);

/// Per-job table from the event stream.
std::vector<JobRow> job_rows_from_trace(const TraceFile& trace);

/// Structural checks over a trace: dependency-free causality (no task_end
/// without its task_start, no start after a missing end at job completion),
/// exclusive QPU phases, balanced release/reacquire brackets. Returns
/// human-readable violation lines; empty means clean.
std::vector<std::string> check_trace(const TraceFile& trace);

/// Key: value serialization of a metrics report, stable order.
std::string metrics_to_text(const MetricsReport& m);

/// Inverse of metrics_to_text. Throws FormatError.
MetricsReport metrics_from_text(std::string_view text);

/// CSV of per-job rows, header included.
std::string job_rows_to_csv(const std::vector<JobRow>& rows);

}  // namespace qhpc
