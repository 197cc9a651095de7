#include "qhpc/dctg.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "qhpc/errors.hpp"
#include "testutil.hpp"

namespace qhpc {
namespace {

using testutil::classical_hwd;
using testutil::quantum_hwd;

// Brute-force reachability oracle used to cross-check classification.
std::map<std::string, std::set<std::string>> brute_reach(const TaskGraph& g) {
  std::vector<TaskEdge> back = back_edges(g);
  std::map<std::string, std::set<std::string>> direct;
  for (const TaskEdge& e : g.edges) {
    bool is_back = false;
    for (const TaskEdge& b : back) {
      if (b.src == e.src && b.dst == e.dst) is_back = true;
    }
    if (!is_back) direct[e.src].insert(e.dst);
  }
  // Floyd-Warshall over node ids.
  std::map<std::string, std::set<std::string>> reach = direct;
  for (const TaskNode& k : g.nodes) {
    for (const TaskNode& i : g.nodes) {
      if (!reach[i.node_id].contains(k.node_id)) continue;
      for (const std::string& j : reach[k.node_id]) reach[i.node_id].insert(j);
    }
  }
  return reach;
}

TEST(Dctg, ClassicalOnlySingleNode) {
  TaskGraph g = build_graph(classical_hwd("c", 4, 120), GraphTemplate::classical_only);
  EXPECT_EQ(g.nodes.size(), 1u);
  EXPECT_TRUE(g.loops.empty());
  EXPECT_EQ(g.nodes[0].kind, NodeKind::cpu);
  EXPECT_DOUBLE_EQ(g.nodes[0].service_time_s, 120.0);
  for (const TaskNode& n : g.nodes) EXPECT_NE(n.kind, NodeKind::qpu);
}

TEST(Dctg, ClassicalWithGpuChain) {
  HybridWorkloadDescriptor d = classical_hwd("g", 4, 100);
  d.classical.gpu_count = 2;
  TaskGraph g = build_graph(d, GraphTemplate::classical_only);
  ASSERT_EQ(g.nodes.size(), 2u);
  EXPECT_EQ(g.nodes[1].kind, NodeKind::gpu);
  EXPECT_DOUBLE_EQ(g.nodes[0].service_time_s + g.nodes[1].service_time_s, 100.0);
}

TEST(Dctg, VqeLoopShape) {
  TemplateParams params;
  params.max_iterations = 10;
  TaskGraph g = build_graph(
      quantum_hwd("v", 8, 600, 12, Connectivity::linear, 1024, 50),
      GraphTemplate::vqe_loop, params);
  EXPECT_EQ(g.nodes.size(), 5u);
  ASSERT_EQ(g.loops.size(), 1u);
  EXPECT_EQ(g.loops[0].max_iterations, 10);
  EXPECT_EQ(g.loops[0].members.size(), 3u);
  EXPECT_NO_THROW(validate_graph(g));
  EXPECT_NO_THROW(topo_order_without_back_edges(g));
  // with the back-edge present, a plain cycle check must fail
  TaskGraph no_loop_decl = g;
  no_loop_decl.loops.clear();
  EXPECT_THROW(validate_graph(no_loop_decl), GraphError);
}

TEST(Dctg, QuantumTemplateNeedsQuantumDescriptor) {
  EXPECT_THROW(build_graph(classical_hwd("c", 1, 10), GraphTemplate::vqe_loop),
               TemplateError);
  EXPECT_THROW(
      build_graph(classical_hwd("c", 1, 10), GraphTemplate::batched_circuits),
      TemplateError);
}

TEST(Dctg, BatchedClassification) {
  TemplateParams params;
  params.batch_size = 8;
  TaskGraph g = build_graph(
      quantum_hwd("b", 8, 600, 16, Connectivity::linear, 512, 40),
      GraphTemplate::batched_circuits, params);
  EXPECT_EQ(g.nodes.size(), 10u);  // prep + 8 + reduce

  PathClassification cls = classify_paths(g);
  EXPECT_TRUE(cls.latency_critical_chains.empty());
  ASSERT_EQ(cls.latency_tolerant_batches.size(), 1u);
  EXPECT_EQ(cls.latency_tolerant_batches[0].size(), 8u);

  // oracle: every pair of QPU nodes mutually unreachable
  auto reach = brute_reach(g);
  for (const TaskNode& a : g.nodes) {
    if (a.kind != NodeKind::qpu) continue;
    for (const TaskNode& b : g.nodes) {
      if (b.kind != NodeKind::qpu || a.node_id == b.node_id) continue;
      EXPECT_FALSE(reach[a.node_id].contains(b.node_id));
    }
  }
}

TEST(Dctg, VqeClassification) {
  TaskGraph g = build_graph(
      quantum_hwd("v", 8, 600, 12, Connectivity::linear, 1024, 50),
      GraphTemplate::vqe_loop);
  PathClassification cls = classify_paths(g);
  ASSERT_EQ(cls.latency_critical_chains.size(), 1u);
  EXPECT_EQ(cls.latency_critical_chains[0],
            (std::vector<std::string>{"opt", "eval", "measure"}));
  EXPECT_TRUE(cls.latency_tolerant_batches.empty());
}

TEST(Dctg, TwoParallelLoopsClassification) {
  // Two vertex-disjoint vqe-style loops sharing entry/exit fan nodes.
  TaskGraph g;
  auto cpu = [](const std::string& id) {
    return TaskNode{id, NodeKind::cpu, 1.0, 0, 0, ResourceDemand{1, 0, 0}};
  };
  auto qpu = [](const std::string& id) {
    return TaskNode{id, NodeKind::qpu, 0, 128, 10, ResourceDemand{0, 0, 4}};
  };
  g.nodes = {cpu("start"), cpu("a_opt"), qpu("a_eval"), cpu("a_meas"),
             cpu("b_opt"), qpu("b_eval"), cpu("b_meas"), cpu("join")};
  g.edges = {{"start", "a_opt", 0}, {"a_opt", "a_eval", 0},
             {"a_eval", "a_meas", 16}, {"a_meas", "a_opt", 0},
             {"a_meas", "join", 0},  {"start", "b_opt", 0},
             {"b_opt", "b_eval", 0}, {"b_eval", "b_meas", 16},
             {"b_meas", "b_opt", 0}, {"b_meas", "join", 0}};
  g.loops = {{{"a_opt", "a_eval", "a_meas"}, 3}, {{"b_opt", "b_eval", "b_meas"}, 4}};
  EXPECT_NO_THROW(validate_graph(g));

  PathClassification cls = classify_paths(g);
  ASSERT_EQ(cls.latency_critical_chains.size(), 2u);
  EXPECT_TRUE(cls.latency_tolerant_batches.empty());
  // oracle: the two QPU nodes are mutually unreachable yet both sit in loops
  auto reach = brute_reach(g);
  EXPECT_FALSE(reach["a_eval"].contains("b_eval"));
  EXPECT_FALSE(reach["b_eval"].contains("a_eval"));
}

TEST(Dctg, ClassificationPartitionsQpuNodes) {
  for (GraphTemplate t :
       {GraphTemplate::vqe_loop, GraphTemplate::batched_circuits}) {
    TaskGraph g = build_graph(
        quantum_hwd("p", 4, 100, 8, Connectivity::linear, 64, 10), t);
    PathClassification cls = classify_paths(g);
    std::set<std::string> seen;
    size_t qpu_total = 0;
    for (const TaskNode& n : g.nodes) {
      if (n.kind == NodeKind::qpu) ++qpu_total;
    }
    for (const auto& chain : cls.latency_critical_chains) {
      EXPECT_TRUE(seen.insert(chain[1]).second);
    }
    for (const auto& batch : cls.latency_tolerant_batches) {
      for (const std::string& id : batch) EXPECT_TRUE(seen.insert(id).second);
    }
    EXPECT_EQ(seen.size(), qpu_total);
  }
}

TEST(Dctg, UnrollIdentityWithoutLoops) {
  TaskGraph g = build_graph(classical_hwd("c", 2, 50), GraphTemplate::classical_only);
  EXPECT_EQ(unroll(g), g);
}

TEST(Dctg, UnrollCountsAndAcyclicity) {
  TemplateParams params;
  params.max_iterations = 10;
  TaskGraph g = build_graph(
      quantum_hwd("v", 8, 600, 12, Connectivity::linear, 1024, 50),
      GraphTemplate::vqe_loop, params);
  TaskGraph u = unroll(g);
  EXPECT_EQ(u.nodes.size(), 2u + 3u * 10u);  // init, finalize + body x iters
  EXPECT_TRUE(u.loops.empty());
  EXPECT_NO_THROW(topo_order_without_back_edges(u));
  EXPECT_NE(u.find_node("opt@1"), nullptr);
  EXPECT_NE(u.find_node("measure@10"), nullptr);
}

TEST(Dctg, UnrollPreservesShotVolume) {
  for (int iters : {1, 3, 7}) {
    TemplateParams params;
    params.max_iterations = iters;
    TaskGraph g = build_graph(
        quantum_hwd("v", 8, 600, 12, Connectivity::linear, 777, 50),
        GraphTemplate::vqe_loop, params);
    TaskGraph u = unroll(g);
    std::int64_t cyclic_volume = 0;
    for (const TaskNode& n : g.nodes) {
      if (n.kind != NodeKind::qpu) continue;
      bool in_loop = false;
      for (const FeedbackLoop& l : g.loops) {
        for (const std::string& m : l.members) {
          if (m == n.node_id) in_loop = true;
        }
      }
      cyclic_volume += n.shots * (in_loop ? iters : 1);
    }
    std::int64_t unrolled_volume = 0;
    for (const TaskNode& n : u.nodes) {
      if (n.kind == NodeKind::qpu) unrolled_volume += n.shots;
    }
    EXPECT_EQ(unrolled_volume, cyclic_volume);
  }
}

TEST(Dctg, OverlappingLoopsRejected) {
  TaskGraph g;
  auto cpu = [](const std::string& id) {
    return TaskNode{id, NodeKind::cpu, 1.0, 0, 0, ResourceDemand{1, 0, 0}};
  };
  g.nodes = {cpu("a"), cpu("b"), cpu("c")};
  g.edges = {{"a", "b", 0}, {"b", "a", 0}, {"b", "c", 0}, {"c", "b", 0}};
  g.loops = {{{"a", "b"}, 2}, {{"b", "c"}, 2}};
  EXPECT_THROW(validate_graph(g), GraphError);
}

TEST(Dctg, UndeclaredCycleThroughOutsideNodeRejected) {
  TaskGraph g;
  auto cpu = [](const std::string& id) {
    return TaskNode{id, NodeKind::cpu, 1.0, 0, 0, ResourceDemand{1, 0, 0}};
  };
  // declared loop a->b->a, plus a sneaky path a->x->b creating a second cycle
  g.nodes = {cpu("a"), cpu("b"), cpu("x")};
  g.edges = {{"a", "b", 0}, {"b", "a", 0}, {"a", "x", 0}, {"x", "b", 0}};
  g.loops = {{{"a", "b"}, 2}};
  EXPECT_THROW(validate_graph(g), GraphError);
}

TEST(Dctg, InvalidDurationsRejected) {
  TaskGraph g;
  g.nodes = {TaskNode{"n", NodeKind::cpu, 0.0, 0, 0, ResourceDemand{1, 0, 0}}};
  EXPECT_THROW(validate_graph(g), GraphError);
  g.nodes = {TaskNode{"q", NodeKind::qpu, 0.0, 0, 5, ResourceDemand{0, 0, 2}}};
  EXPECT_THROW(validate_graph(g), GraphError);
}

TEST(Dctg, ExportImportRoundTrip) {
  TemplateParams params;
  params.max_iterations = 4;
  TaskGraph g = build_graph(
      quantum_hwd("v", 8, 600, 12, Connectivity::linear, 1024, 50),
      GraphTemplate::vqe_loop, params);
  TaskGraph back = import_graph(export_graph(g));
  EXPECT_EQ(back, g);
}

TEST(Dctg, ImportRejectsMalformedLines) {
  EXPECT_THROW(import_graph("node x cpu\n"), ParseError);
  EXPECT_THROW(import_graph("wibble\n"), ParseError);
  EXPECT_THROW(import_graph("edge a b\n"), ParseError);
  EXPECT_THROW(import_graph("node x cpu 1.5 0 0 1 0 0\nedge x x nanbytes\n"),
               ParseError);
}

}  // namespace
}  // namespace qhpc
