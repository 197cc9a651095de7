#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <string>

#include "qhpc/simcore.hpp"
#include "qhpc/types.hpp"

namespace qhpc {

// Stable exit codes shared by every subcommand:
//   0 success, 2 parse/validation/format error, 3 infeasible submission,
//   4 internal invariant abort.
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitInternal = 4;

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon_s;
  std::optional<CoschedMode> mode;                // forced on quantum jobs
  std::optional<std::array<double, 4>> weights;   // f, c, q, l (normalized)
  std::string out_dir = ".";
  std::string trace_path;    // default <out_dir>/trace.tsv
  std::string metrics_path;  // default <out_dir>/metrics.txt
  std::string csv_path;      // empty: no per-job CSV
};

/// Validate one descriptor against a scenario's registry: parses the HWD,
/// checks static feasibility (ignoring load), prints the template graph
/// summary and, for quantum jobs, the QSS ranking of candidate devices.
int cmd_submit(const std::string& hwd_path, const std::string& scenario_path,
               std::ostream& out, std::ostream& err);

/// Run a scenario and write trace + metrics (+ optional per-job CSV).
int cmd_run(const std::string& scenario_path, const RunOptions& options,
            std::ostream& out, std::ostream& err);

/// Recompute metrics and the per-job table from a trace; optionally check
/// them against an emitted metrics file (1e-9 tolerance).
int cmd_report(const std::string& trace_path, const std::string& check_metrics_path,
               std::ostream& out, std::ostream& err);

/// Validate an HWD or scenario document. kind: "hwd", "scenario" or "auto".
int cmd_validate(const std::string& path, const std::string& kind,
                 std::ostream& out, std::ostream& err);

/// Field-by-field metrics comparison with the given tolerance on doubles.
bool metrics_equal(const MetricsReport& a, const MetricsReport& b, double tol);

}  // namespace qhpc
