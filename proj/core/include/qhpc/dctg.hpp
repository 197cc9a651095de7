#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qhpc/hwd.hpp"
#include "qhpc/types.hpp"

namespace qhpc {

/// Capacity a task occupies while running.
struct ResourceDemand {
  int cpu_cores = 0;
  int gpu_count = 0;
  int qubits = 0;

  bool operator==(const ResourceDemand&) const = default;
};

/// One typed task. CPU/GPU/FPGA nodes carry a fixed service time; QPU nodes
/// carry (shots, depth) from which execution time is derived by the fabric
/// cost model at run time.
struct TaskNode {
  std::string node_id;
  NodeKind kind = NodeKind::cpu;
  double service_time_s = 0.0;   // CPU/GPU/FPGA
  std::int64_t shots = 0;        // QPU
  int circuit_depth = 0;         // QPU
  ResourceDemand demand;

  bool operator==(const TaskNode&) const = default;
};

struct TaskEdge {
  std::string src;
  std::string dst;
  std::int64_t payload_bytes = 0;

  bool operator==(const TaskEdge&) const = default;
};

/// A bounded feedback loop: its member nodes form one simple cycle in the
/// edge set, executed exactly max_iterations times.
struct FeedbackLoop {
  std::vector<std::string> members;
  int max_iterations = 1;

  bool operator==(const FeedbackLoop&) const = default;
};

/// Directed cyclic task graph. Cycles are only legal through declared
/// feedback loops; loops must be vertex-disjoint simple cycles.
struct TaskGraph {
  std::vector<TaskNode> nodes;
  std::vector<TaskEdge> edges;
  std::vector<FeedbackLoop> loops;

  const TaskNode* find_node(std::string_view id) const;

  bool operator==(const TaskGraph&) const = default;
};

enum class GraphTemplate { vqe_loop, batched_circuits, classical_only };

bool graph_template_from_string(std::string_view s, GraphTemplate& out);
std::string_view to_string(GraphTemplate t);

/// Shape knobs for the shipped templates.
struct TemplateParams {
  int max_iterations = 10;      // vqe_loop feedback bound
  int batch_size = 8;           // batched_circuits fan-out
  double classical_phase_s = 1.0;  // service time of generated CPU stages
};

/// Instantiate one of the shipped workload shapes for a descriptor.
/// Throws TemplateError when a quantum template is requested without a
/// quantum descriptor.
TaskGraph build_graph(const HybridWorkloadDescriptor& d, GraphTemplate t,
                      const TemplateParams& params = TemplateParams{});

/// Check all structural invariants; throws GraphError with the first
/// violation found.
void validate_graph(const TaskGraph& g);

/// Back-edges: for each loop, the edge that closes its cycle (from the last
/// member back to the entry). Order follows the loops vector.
std::vector<TaskEdge> back_edges(const TaskGraph& g);

/// Topological order of the graph with back-edges removed; throws GraphError
/// if a cycle survives.
std::vector<std::string> topo_order_without_back_edges(const TaskGraph& g);

struct PathClassification {
  // CPU -> QPU -> CPU dependency chains inside feedback loops.
  std::vector<std::vector<std::string>> latency_critical_chains;
  // Groups of mutually independent QPU nodes, batchable in parallel.
  std::vector<std::vector<std::string>> latency_tolerant_batches;
};

/// Deterministic semantic dependency analysis. Every QPU node lands in
/// exactly one chain or one batch; ties and grouping order are broken by
/// lexicographic node_id.
PathClassification classify_paths(const TaskGraph& g);

/// Bounded loop expansion: every feedback loop is replaced by max_iterations
/// sequential copies of its body, node ids suffixed "@<iteration>". The
/// result is acyclic.
TaskGraph unroll(const TaskGraph& g);

/// Line-oriented export used by golden tests:
///   node <id> <kind> <service_s> <shots> <depth> <cores> <gpus> <qubits>
///   edge <src> <dst> <payload_bytes>
///   loop <id>... <max_iterations>
std::string export_graph(const TaskGraph& g);

/// Inverse of export_graph; also accepts hand-written graph files from
/// scenarios. Throws ParseError / GraphError.
TaskGraph import_graph(std::string_view text);

}  // namespace qhpc
