#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qhpc/config.hpp"
#include "qhpc/dctg.hpp"
#include "qhpc/hwd.hpp"
#include "qhpc/registry.hpp"

namespace qhpc {

/// One workload entry of a scenario: a descriptor submitted at a point in
/// simulated time, shaped by a template or by an explicit graph file.
struct JobSpec {
  double submit_s = 0.0;
  HybridWorkloadDescriptor hwd;
  GraphTemplate graph_template = GraphTemplate::classical_only;
  TemplateParams template_params;
  std::optional<TaskGraph> explicit_graph;  // overrides the template
};

/// A full simulation input: inventory, workload, policies, fabric and seed.
struct Scenario {
  std::uint64_t seed = 0;
  double horizon_s = 3600.0;
  SimConfig config;
  std::vector<ResourceRecord> registry;
  std::vector<JobSpec> jobs;
  // Safety valve: a valid scenario must drain its queue long before this.
  std::int64_t max_events = 20000000;
};

/// Parse a scenario document. `base_dir` resolves relative hwd_file /
/// graph_file references. Throws ScenarioError, ParseError or
/// ValidationError.
Scenario load_scenario_text(std::string_view text, const std::string& base_dir);

/// Convenience: read the file and parse, base_dir = its directory.
Scenario load_scenario_file(const std::string& path);

/// Override hook for the command line: force every job's mode hint.
void force_mode(Scenario& s, CoschedMode mode);

}  // namespace qhpc
