#include "qhpc/dctg.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "qhpc/errors.hpp"

namespace qhpc {

namespace {

std::string pad3(int n) {
  std::string s = std::to_string(n);
  while (s.size() < 3) s.insert(s.begin(), '0');
  return s;
}

struct GraphIndex {
  std::map<std::string, const TaskNode*> nodes;
  std::map<std::string, std::vector<const TaskEdge*>> out;
  std::map<std::string, std::vector<const TaskEdge*>> in;

  explicit GraphIndex(const TaskGraph& g) {
    for (const TaskNode& n : g.nodes) nodes.emplace(n.node_id, &n);
    for (const TaskEdge& e : g.edges) {
      out[e.src].push_back(&e);
      in[e.dst].push_back(&e);
    }
  }
};

// Loop structure after validation: members in cycle order starting at the
// entry, plus the back-edge that closes the cycle.
struct LoopShape {
  std::vector<std::string> order;  // entry first
  TaskEdge back_edge;
  int max_iterations = 1;
};

bool edge_equal(const TaskEdge& a, const TaskEdge& b) {
  return a.src == b.src && a.dst == b.dst;
}

LoopShape resolve_loop(const TaskGraph& g, const GraphIndex& idx,
                       const FeedbackLoop& loop) {
  if (loop.max_iterations < 1)
    throw GraphError("feedback loop max_iterations must be >= 1");
  if (loop.members.empty()) throw GraphError("feedback loop has no members");

  std::set<std::string> members(loop.members.begin(), loop.members.end());
  if (members.size() != loop.members.size())
    throw GraphError("feedback loop lists a member twice");
  for (const std::string& m : loop.members) {
    if (!idx.nodes.contains(m))
      throw GraphError("feedback loop member '" + m + "' is not a node");
  }

  // Each member needs exactly one successor and one predecessor inside the
  // loop: the members form one simple cycle.
  std::map<std::string, std::string> next;
  for (const std::string& m : loop.members) {
    const TaskEdge* within = nullptr;
    auto it = idx.out.find(m);
    if (it != idx.out.end()) {
      for (const TaskEdge* e : it->second) {
        if (!members.contains(e->dst)) continue;
        if (within)
          throw GraphError("loop member '" + m + "' has two in-loop successors");
        within = e;
      }
    }
    if (!within)
      throw GraphError("loop member '" + m + "' has no in-loop successor");
    next[m] = within->dst;
  }
  std::map<std::string, int> indeg;
  for (const auto& [src, dst] : next) indeg[dst]++;
  for (const std::string& m : loop.members) {
    if (indeg[m] != 1)
      throw GraphError("loop members of '" + loop.members.front() +
                       "' do not form a simple cycle");
  }

  // Entry: the unique member receiving an edge from outside the loop, or the
  // lexicographically smallest member for an isolated cycle.
  std::set<std::string> entries;
  for (const std::string& m : loop.members) {
    auto it = idx.in.find(m);
    if (it == idx.in.end()) continue;
    for (const TaskEdge* e : it->second) {
      if (!members.contains(e->src)) entries.insert(m);
    }
  }
  std::string entry;
  if (entries.size() > 1)
    throw GraphError("feedback loop has multiple entry points");
  if (entries.size() == 1) {
    entry = *entries.begin();
  } else {
    entry = *std::min_element(loop.members.begin(), loop.members.end());
  }

  LoopShape shape;
  shape.max_iterations = loop.max_iterations;
  std::string cur = entry;
  for (size_t i = 0; i < loop.members.size(); ++i) {
    shape.order.push_back(cur);
    cur = next[cur];
  }
  if (cur != entry)
    throw GraphError("loop members of '" + loop.members.front() +
                     "' do not close a single cycle");

  const std::string& last = shape.order.back();
  for (const TaskEdge& e : g.edges) {
    if (e.src == last && e.dst == entry) {
      shape.back_edge = e;
      return shape;
    }
  }
  throw GraphError("loop back-edge not found");  // unreachable after checks
}

std::vector<LoopShape> resolve_loops(const TaskGraph& g, const GraphIndex& idx) {
  std::set<std::string> seen;
  std::vector<LoopShape> shapes;
  for (const FeedbackLoop& loop : g.loops) {
    for (const std::string& m : loop.members) {
      if (!seen.insert(m).second)
        throw GraphError("feedback loops overlap on node '" + m + "'");
    }
    shapes.push_back(resolve_loop(g, idx, loop));
  }
  return shapes;
}

// Kahn's algorithm with lexicographic tie-break; `skip` holds edges treated
// as removed.
std::vector<std::string> topo_sort(const TaskGraph& g,
                                   const std::vector<TaskEdge>& skip) {
  std::map<std::string, int> indeg;
  std::map<std::string, std::vector<std::string>> out;
  for (const TaskNode& n : g.nodes) indeg[n.node_id] = 0;
  for (const TaskEdge& e : g.edges) {
    bool skipped = false;
    for (const TaskEdge& s : skip) {
      if (edge_equal(e, s)) {
        skipped = true;
        break;
      }
    }
    if (skipped) continue;
    out[e.src].push_back(e.dst);
    indeg[e.dst]++;
  }
  std::set<std::string> ready;
  for (const auto& [id, d] : indeg) {
    if (d == 0) ready.insert(id);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const std::string& dst : out[id]) {
      if (--indeg[dst] == 0) ready.insert(dst);
    }
  }
  if (order.size() != g.nodes.size())
    throw GraphError("graph contains a cycle outside declared feedback loops");
  return order;
}

// Reachability over the back-edge-removed graph, by node id.
std::map<std::string, std::set<std::string>> reachability(
    const TaskGraph& g, const std::vector<TaskEdge>& back) {
  std::map<std::string, std::vector<std::string>> out;
  for (const TaskEdge& e : g.edges) {
    bool skipped = false;
    for (const TaskEdge& b : back) {
      if (edge_equal(e, b)) {
        skipped = true;
        break;
      }
    }
    if (!skipped) out[e.src].push_back(e.dst);
  }
  std::map<std::string, std::set<std::string>> reach;
  for (const TaskNode& n : g.nodes) {
    std::vector<std::string> stack{n.node_id};
    std::set<std::string>& r = reach[n.node_id];
    while (!stack.empty()) {
      std::string cur = stack.back();
      stack.pop_back();
      for (const std::string& nxt : out[cur]) {
        if (r.insert(nxt).second) stack.push_back(nxt);
      }
    }
  }
  return reach;
}

}  // namespace

const TaskNode* TaskGraph::find_node(std::string_view id) const {
  for (const TaskNode& n : nodes) {
    if (n.node_id == id) return &n;
  }
  return nullptr;
}

bool graph_template_from_string(std::string_view s, GraphTemplate& out) {
  if (s == "vqe_loop") out = GraphTemplate::vqe_loop;
  else if (s == "batched_circuits") out = GraphTemplate::batched_circuits;
  else if (s == "classical_only") out = GraphTemplate::classical_only;
  else return false;
  return true;
}

std::string_view to_string(GraphTemplate t) {
  switch (t) {
    case GraphTemplate::vqe_loop: return "vqe_loop";
    case GraphTemplate::batched_circuits: return "batched_circuits";
    case GraphTemplate::classical_only: return "classical_only";
  }
  return "?";
}

void validate_graph(const TaskGraph& g) {
  std::set<std::string> ids;
  for (const TaskNode& n : g.nodes) {
    if (!is_valid_identifier(n.node_id))
      throw GraphError("node id '" + n.node_id + "' is not a valid identifier");
    if (!ids.insert(n.node_id).second)
      throw GraphError("duplicate node id '" + n.node_id + "'");
    if (n.kind == NodeKind::qpu) {
      if (n.shots < 1 || n.circuit_depth < 1)
        throw GraphError("QPU node '" + n.node_id +
                         "' needs shots >= 1 and depth >= 1");
    } else {
      if (!(n.service_time_s > 0.0))
        throw GraphError("node '" + n.node_id + "' needs service_time > 0");
    }
    if (n.demand.cpu_cores < 0 || n.demand.gpu_count < 0 || n.demand.qubits < 0)
      throw GraphError("node '" + n.node_id + "' has negative demand");
  }

  std::set<std::pair<std::string, std::string>> edge_set;
  for (const TaskEdge& e : g.edges) {
    if (!ids.contains(e.src) || !ids.contains(e.dst))
      throw GraphError("edge " + e.src + " -> " + e.dst +
                       " references a missing node");
    if (e.payload_bytes < 0)
      throw GraphError("edge " + e.src + " -> " + e.dst + " has negative payload");
    if (!edge_set.emplace(e.src, e.dst).second)
      throw GraphError("duplicate edge " + e.src + " -> " + e.dst);
  }

  GraphIndex idx(g);
  std::vector<LoopShape> shapes = resolve_loops(g, idx);
  std::vector<TaskEdge> back;
  back.reserve(shapes.size());
  for (const LoopShape& s : shapes) back.push_back(s.back_edge);

  topo_sort(g, back);  // throws when an undeclared cycle remains

  // Every cycle must be a declared loop: any path from a loop's entry to its
  // closing node that leaves the member set would form an undeclared cycle
  // through the back-edge.
  if (!shapes.empty()) {
    auto reach = reachability(g, back);
    for (const LoopShape& s : shapes) {
      const std::string& entry = s.order.front();
      const std::string& last = s.order.back();
      std::set<std::string> on_path;
      for (const TaskNode& n : g.nodes) {
        bool from_entry = n.node_id == entry || reach[entry].contains(n.node_id);
        bool to_last = n.node_id == last || reach[n.node_id].contains(last);
        if (from_entry && to_last) on_path.insert(n.node_id);
      }
      std::set<std::string> members(s.order.begin(), s.order.end());
      if (on_path != members)
        throw GraphError("undeclared cycle through feedback loop at '" + entry +
                         "'");
    }
  }
}

std::vector<TaskEdge> back_edges(const TaskGraph& g) {
  GraphIndex idx(g);
  std::vector<LoopShape> shapes = resolve_loops(g, idx);
  std::vector<TaskEdge> out;
  out.reserve(shapes.size());
  for (const LoopShape& s : shapes) out.push_back(s.back_edge);
  return out;
}

std::vector<std::string> topo_order_without_back_edges(const TaskGraph& g) {
  return topo_sort(g, back_edges(g));
}

TaskGraph build_graph(const HybridWorkloadDescriptor& d, GraphTemplate t,
                      const TemplateParams& params) {
  if (params.max_iterations < 1)
    throw TemplateError("max_iterations must be >= 1");
  if (params.batch_size < 1) throw TemplateError("batch_size must be >= 1");
  if (!(params.classical_phase_s > 0))
    throw TemplateError("classical_phase_s must be > 0");

  const ClassicalDescriptor& c = d.classical;
  ResourceDemand cpu_demand{c.cpu_cores, 0, 0};

  TaskGraph g;
  if (t == GraphTemplate::classical_only) {
    if (c.gpu_count == 0) {
      g.nodes.push_back(
          TaskNode{"main", NodeKind::cpu, c.walltime_s, 0, 0, cpu_demand});
    } else {
      g.nodes.push_back(
          TaskNode{"main", NodeKind::cpu, c.walltime_s / 2, 0, 0, cpu_demand});
      g.nodes.push_back(TaskNode{"accel", NodeKind::gpu, c.walltime_s / 2, 0, 0,
                                 ResourceDemand{0, c.gpu_count, 0}});
      g.edges.push_back(TaskEdge{"main", "accel", 0});
    }
    return g;
  }

  if (!d.quantum)
    throw TemplateError(std::string(to_string(t)) +
                        " requires a quantum descriptor");
  const QuantumDescriptor& q = *d.quantum;
  std::int64_t shots = effective_shot_budget(q);
  ResourceDemand qpu_demand{0, 0, q.qubit_count};
  std::int64_t result_bytes =
      shots * ((static_cast<std::int64_t>(q.qubit_count) + 7) / 8);

  if (t == GraphTemplate::vqe_loop) {
    double phase = params.classical_phase_s;
    g.nodes.push_back(TaskNode{"init", NodeKind::cpu, phase, 0, 0, cpu_demand});
    g.nodes.push_back(TaskNode{"opt", NodeKind::cpu, phase, 0, 0, cpu_demand});
    g.nodes.push_back(TaskNode{"eval", NodeKind::qpu, 0, shots, q.circuit_depth,
                               qpu_demand});
    g.nodes.push_back(TaskNode{"measure", NodeKind::cpu, phase, 0, 0, cpu_demand});
    g.nodes.push_back(
        TaskNode{"finalize", NodeKind::cpu, phase, 0, 0, cpu_demand});
    g.edges.push_back(TaskEdge{"init", "opt", 0});
    g.edges.push_back(TaskEdge{"opt", "eval", 0});
    g.edges.push_back(TaskEdge{"eval", "measure", result_bytes});
    g.edges.push_back(TaskEdge{"measure", "finalize", 0});
    g.edges.push_back(TaskEdge{"measure", "opt", 0});  // feedback
    g.loops.push_back(
        FeedbackLoop{{"opt", "eval", "measure"}, params.max_iterations});
    return g;
  }

  // batched_circuits
  g.nodes.push_back(TaskNode{"prep", NodeKind::cpu, params.classical_phase_s, 0,
                             0, cpu_demand});
  for (int i = 1; i <= params.batch_size; ++i) {
    std::string id = "eval" + pad3(i);
    g.nodes.push_back(
        TaskNode{id, NodeKind::qpu, 0, shots, q.circuit_depth, qpu_demand});
    g.edges.push_back(TaskEdge{"prep", id, 0});
    g.edges.push_back(TaskEdge{id, "reduce", result_bytes});
  }
  g.nodes.push_back(TaskNode{"reduce", NodeKind::cpu, params.classical_phase_s,
                             0, 0, cpu_demand});
  return g;
}

PathClassification classify_paths(const TaskGraph& g) {
  validate_graph(g);
  GraphIndex idx(g);
  std::vector<LoopShape> shapes = resolve_loops(g, idx);
  std::vector<TaskEdge> back;
  for (const LoopShape& s : shapes) back.push_back(s.back_edge);

  PathClassification out;
  std::set<std::string> chained;
  for (const LoopShape& s : shapes) {
    size_t m = s.order.size();
    for (size_t i = 0; i < m; ++i) {
      const TaskNode* node = idx.nodes.at(s.order[i]);
      if (node->kind != NodeKind::qpu) continue;
      const TaskNode* pred = idx.nodes.at(s.order[(i + m - 1) % m]);
      const TaskNode* succ = idx.nodes.at(s.order[(i + 1) % m]);
      if (pred->kind == NodeKind::cpu && succ->kind == NodeKind::cpu) {
        out.latency_critical_chains.push_back(
            {pred->node_id, node->node_id, succ->node_id});
        chained.insert(node->node_id);
      }
    }
  }
  std::sort(out.latency_critical_chains.begin(),
            out.latency_critical_chains.end(),
            [](const auto& a, const auto& b) { return a[1] < b[1]; });

  // Remaining QPU nodes: greedy first-fit batching of mutually unreachable
  // nodes, in lexicographic order over the back-edge-removed graph.
  std::vector<std::string> rest;
  for (const TaskNode& n : g.nodes) {
    if (n.kind == NodeKind::qpu && !chained.contains(n.node_id))
      rest.push_back(n.node_id);
  }
  std::sort(rest.begin(), rest.end());
  if (!rest.empty()) {
    auto reach = reachability(g, back);
    for (const std::string& q : rest) {
      bool placed = false;
      for (auto& batch : out.latency_tolerant_batches) {
        bool independent = true;
        for (const std::string& b : batch) {
          if (reach[q].contains(b) || reach[b].contains(q)) {
            independent = false;
            break;
          }
        }
        if (independent) {
          batch.push_back(q);
          placed = true;
          break;
        }
      }
      if (!placed) out.latency_tolerant_batches.push_back({q});
    }
  }
  return out;
}

TaskGraph unroll(const TaskGraph& g) {
  if (g.loops.empty()) return g;
  GraphIndex idx(g);
  std::vector<LoopShape> shapes = resolve_loops(g, idx);

  std::map<std::string, const LoopShape*> loop_of;
  for (const LoopShape& s : shapes) {
    for (const std::string& m : s.order) loop_of[m] = &s;
  }
  auto copy_id = [](const std::string& id, int k) {
    return id + "@" + std::to_string(k);
  };

  TaskGraph out;
  for (const TaskNode& n : g.nodes) {
    auto it = loop_of.find(n.node_id);
    if (it == loop_of.end()) {
      out.nodes.push_back(n);
    } else {
      for (int k = 1; k <= it->second->max_iterations; ++k) {
        TaskNode copy = n;
        copy.node_id = copy_id(n.node_id, k);
        out.nodes.push_back(copy);
      }
    }
  }

  for (const TaskEdge& e : g.edges) {
    const LoopShape* src_loop =
        loop_of.contains(e.src) ? loop_of.at(e.src) : nullptr;
    const LoopShape* dst_loop =
        loop_of.contains(e.dst) ? loop_of.at(e.dst) : nullptr;
    if (!src_loop && !dst_loop) {
      out.edges.push_back(e);
    } else if (!src_loop) {
      out.edges.push_back(TaskEdge{e.src, copy_id(e.dst, 1), e.payload_bytes});
    } else if (!dst_loop) {
      out.edges.push_back(TaskEdge{copy_id(e.src, src_loop->max_iterations),
                                   e.dst, e.payload_bytes});
    } else if (src_loop == dst_loop) {
      int iters = src_loop->max_iterations;
      if (edge_equal(e, src_loop->back_edge)) {
        for (int k = 1; k < iters; ++k) {
          out.edges.push_back(
              TaskEdge{copy_id(e.src, k), copy_id(e.dst, k + 1), e.payload_bytes});
        }
      } else {
        for (int k = 1; k <= iters; ++k) {
          out.edges.push_back(
              TaskEdge{copy_id(e.src, k), copy_id(e.dst, k), e.payload_bytes});
        }
      }
    } else {
      out.edges.push_back(TaskEdge{copy_id(e.src, src_loop->max_iterations),
                                   copy_id(e.dst, 1), e.payload_bytes});
    }
  }
  return out;
}

std::string export_graph(const TaskGraph& g) {
  std::ostringstream out;
  for (const TaskNode& n : g.nodes) {
    out << "node " << n.node_id << ' ' << to_string(n.kind) << ' '
        << format_double(n.service_time_s) << ' ' << n.shots << ' '
        << n.circuit_depth << ' ' << n.demand.cpu_cores << ' '
        << n.demand.gpu_count << ' ' << n.demand.qubits << '\n';
  }
  for (const TaskEdge& e : g.edges) {
    out << "edge " << e.src << ' ' << e.dst << ' ' << e.payload_bytes << '\n';
  }
  for (const FeedbackLoop& l : g.loops) {
    out << "loop";
    for (const std::string& m : l.members) out << ' ' << m;
    out << ' ' << l.max_iterations << '\n';
  }
  return out.str();
}

TaskGraph import_graph(std::string_view text) {
  TaskGraph g;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string line(text.substr(
        pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
    ++line_no;
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::istringstream ss(line);
    std::vector<std::string> tok;
    std::string t;
    while (ss >> t) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;

    auto want = [&](size_t n) {
      if (tok.size() != n)
        throw ParseError(line_no, 1, "expected " + std::to_string(n) +
                                         " fields, got " +
                                         std::to_string(tok.size()));
    };
    auto to_i64 = [&](const std::string& s, const char* what) {
      std::int64_t v = 0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError(line_no, 1, std::string("bad integer for ") + what);
      return v;
    };
    auto to_f64 = [&](const std::string& s, const char* what) {
      double v = 0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError(line_no, 1, std::string("bad number for ") + what);
      return v;
    };

    if (tok[0] == "node") {
      want(9);
      TaskNode n;
      n.node_id = tok[1];
      if (!node_kind_from_string(tok[2], n.kind))
        throw ParseError(line_no, 1, "unknown node kind '" + tok[2] + "'");
      n.service_time_s = to_f64(tok[3], "service_time");
      n.shots = to_i64(tok[4], "shots");
      n.circuit_depth = static_cast<int>(to_i64(tok[5], "depth"));
      n.demand.cpu_cores = static_cast<int>(to_i64(tok[6], "cores"));
      n.demand.gpu_count = static_cast<int>(to_i64(tok[7], "gpus"));
      n.demand.qubits = static_cast<int>(to_i64(tok[8], "qubits"));
      g.nodes.push_back(std::move(n));
    } else if (tok[0] == "edge") {
      want(4);
      g.edges.push_back(TaskEdge{tok[1], tok[2], to_i64(tok[3], "payload")});
    } else if (tok[0] == "loop") {
      if (tok.size() < 3)
        throw ParseError(line_no, 1, "loop needs members and max_iterations");
      FeedbackLoop l;
      for (size_t i = 1; i + 1 < tok.size(); ++i) l.members.push_back(tok[i]);
      l.max_iterations = static_cast<int>(to_i64(tok.back(), "max_iterations"));
      g.loops.push_back(std::move(l));
    } else {
      throw ParseError(line_no, 1, "unknown directive '" + tok[0] + "'");
    }
  }
  return g;
}

}  // namespace qhpc
