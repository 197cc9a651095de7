#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qhpc/commands.hpp"
#include "qhpc/errors.hpp"
#include "qhpc/scenario.hpp"
#include "qhpc/scheduler.hpp"
#include "qhpc/trace.hpp"
#include "testutil.hpp"

#ifndef QHPC_SCENARIO_DIR
#define QHPC_SCENARIO_DIR "scenarios"
#endif
#ifndef QHPC_BIN
#define QHPC_BIN "qhpc"
#endif

namespace qhpc {
namespace {

namespace fs = std::filesystem;

std::string scenario_path(const std::string& name) {
  return std::string(QHPC_SCENARIO_DIR) + "/" + name;
}

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("qhpc_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

int run_binary(const std::string& args) {
  std::string cmd = std::string(QHPC_BIN) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST(Scenario, LoadsBundledDemo) {
  Scenario s = load_scenario_file(scenario_path("demo.scn"));
  EXPECT_EQ(s.seed, 42u);
  EXPECT_EQ(s.registry.size(), 4u);
  EXPECT_EQ(s.jobs.size(), 3u);
  EXPECT_DOUBLE_EQ(s.config.drift.step_sigma, 0.002);
  EXPECT_EQ(s.jobs[0].graph_template, GraphTemplate::vqe_loop);
  EXPECT_EQ(s.jobs[0].template_params.max_iterations, 8);
  EXPECT_TRUE(s.jobs[1].hwd.quantum.has_value());
  EXPECT_DOUBLE_EQ(*s.jobs[1].hwd.quantum->epsilon, 0.02);
}

TEST(Scenario, UnknownKeysRejected) {
  EXPECT_THROW(load_scenario_text("horizon_s: 10\nturbo: on\n", ""),
               ValidationError);
  EXPECT_THROW(
      load_scenario_text("horizon_s: 10\npolicy:\n  warp_speed: 9\n", ""),
      ValidationError);
}

TEST(Scenario, MissingHorizonRejected) {
  EXPECT_THROW(load_scenario_text("seed: 1\n", ""), ValidationError);
}

TEST(Scenario, LinkOrderingEnforced) {
  std::string text =
      "horizon_s: 10\n"
      "fabric:\n"
      "  intra_node:\n"
      "    rtt_s: 0.2\n";  // would exceed the default wan rtt
  EXPECT_THROW(load_scenario_text(text, ""), ValidationError);
}

TEST(Scenario, JobNeedsExactlyOneHwdSource) {
  std::string text =
      "horizon_s: 10\n"
      "registry:\n"
      "  - resource_id: c\n"
      "    tier: R1\n"
      "    cpu_cores: 4\n"
      "    memory_gb: 8\n"
      "jobs:\n"
      "  - submit_s: 0\n";
  EXPECT_THROW(load_scenario_text(text, ""), ValidationError);
}

TEST(Scenario, TierDefaultsAppliedToAccessClass) {
  std::string text =
      "horizon_s: 10\n"
      "registry:\n"
      "  - resource_id: cloud\n"
      "    tier: R4\n"
      "    qpu:\n"
      "      modality: superconducting\n"
      "      qubit_count: 127\n"
      "      connectivity: heavy_hex\n"
      "      nominal_fidelity: 0.99\n"
      "      coherence_time_us: 150\n";
  Scenario s = load_scenario_text(text, "");
  EXPECT_EQ(s.registry[0].access_latency_class, LinkKind::wan);
}

TEST(Scenario, GraphFileJob) {
  fs::path dir = temp_dir("graphfile");
  write(dir / "g.graph",
        "node a cpu 1.5 0 0 2 0 0\n"
        "node q qpu 0 128 10 0 0 4\n"
        "node b cpu 2.5 0 0 2 0 0\n"
        "edge a q 0\n"
        "edge q b 16\n");
  std::string text =
      "horizon_s: 100\n"
      "registry:\n"
      "  - resource_id: qpu0\n"
      "    tier: R3\n"
      "    cpu_cores: 8\n"
      "    memory_gb: 32\n"
      "    qpu:\n"
      "      modality: superconducting\n"
      "      qubit_count: 16\n"
      "      connectivity: grid\n"
      "      nominal_fidelity: 0.9995\n"
      "      coherence_time_us: 100\n"
      "jobs:\n"
      "  - submit_s: 0\n"
      "    graph_file: g.graph\n"
      "    hwd:\n"
      "      job_id: custom\n"
      "      classical:\n"
      "        cpu_cores: 2\n"
      "        memory_gb: 1\n"
      "        walltime_s: 60\n"
      "        mpi_ranks: 1\n"
      "      quantum:\n"
      "        qubits: 4\n"
      "        connectivity: linear\n"
      "        shots: 128\n"
      "        modalities:\n"
      "          - best_available\n"
      "        depth: 10\n"
      "        fallback: queue_for_qpu\n";
  Scenario s = load_scenario_text(text, dir.string());
  ASSERT_TRUE(s.jobs[0].explicit_graph.has_value());
  EXPECT_EQ(s.jobs[0].explicit_graph->nodes.size(), 3u);

  RunResult result = run(s);
  EXPECT_EQ(result.metrics.completed_job_count, 1);
}

TEST(Commands, ValidateHwdAndScenario) {
  fs::path dir = temp_dir("validate");
  write(dir / "ok.hwd",
        "job_id: ok\n"
        "classical:\n"
        "  cpu_cores: 1\n"
        "  memory_gb: 1\n"
        "  walltime_s: 10\n"
        "  mpi_ranks: 1\n");
  write(dir / "bad.hwd", "job_id: ok\nnope: 1\n");

  std::ostringstream out, err;
  EXPECT_EQ(cmd_validate((dir / "ok.hwd").string(), "auto", out, err), 0);
  EXPECT_NE(out.str().find("valid descriptor"), std::string::npos);
  EXPECT_EQ(cmd_validate((dir / "bad.hwd").string(), "auto", out, err), 2);
  EXPECT_EQ(cmd_validate(scenario_path("demo.scn"), "auto", out, err), 0);
  EXPECT_EQ(cmd_validate((dir / "missing.hwd").string(), "auto", out, err), 2);
}

TEST(Commands, RunAndReportSelfConsistent) {
  fs::path dir = temp_dir("runreport");
  RunOptions opts;
  opts.out_dir = dir.string();
  opts.csv_path = (dir / "jobs.csv").string();
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(scenario_path("demo.scn"), opts, out, err), 0) << err.str();
  EXPECT_TRUE(fs::exists(dir / "trace.tsv"));
  EXPECT_TRUE(fs::exists(dir / "metrics.txt"));
  EXPECT_TRUE(fs::exists(dir / "jobs.csv"));

  std::ostringstream rout, rerr;
  EXPECT_EQ(cmd_report((dir / "trace.tsv").string(),
                       (dir / "metrics.txt").string(), rout, rerr),
            0)
      << rerr.str();
  EXPECT_NE(rout.str().find("metrics check: ok"), std::string::npos);
}

TEST(Commands, ReportFlagsTamperedTrace) {
  fs::path dir = temp_dir("tamper");
  RunOptions opts;
  opts.out_dir = dir.string();
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(scenario_path("demo.scn"), opts, out, err), 0);

  std::ifstream in(dir / "trace.tsv");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  size_t pos = text.find("\ttask_end\t");
  ASSERT_NE(pos, std::string::npos);
  size_t start = text.rfind('\n', pos) + 1;
  text.erase(start, text.find('\n', pos) + 1 - start);
  write(dir / "tampered.tsv", text);

  std::ostringstream rout, rerr;
  EXPECT_EQ(cmd_report((dir / "tampered.tsv").string(), "", rout, rerr), 2);
  EXPECT_NE(rerr.str().find("violation"), std::string::npos);
}

TEST(Commands, SubmitClassical) {
  fs::path dir = temp_dir("submit1");
  write(dir / "c.hwd",
        "job_id: plain\n"
        "classical:\n"
        "  cpu_cores: 8\n"
        "  memory_gb: 16\n"
        "  walltime_s: 100\n"
        "  mpi_ranks: 8\n");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_submit((dir / "c.hwd").string(), scenario_path("demo.scn"), out,
                       err),
            0);
  EXPECT_NE(out.str().find("qpu candidates: 0"), std::string::npos);
  EXPECT_NE(out.str().find("feasible"), std::string::npos);
}

TEST(Commands, SubmitInfeasibleQubitDemand) {
  fs::path dir = temp_dir("submit2");
  write(dir / "big.hwd",
        "job_id: big\n"
        "classical:\n"
        "  cpu_cores: 8\n"
        "  memory_gb: 16\n"
        "  walltime_s: 100\n"
        "  mpi_ranks: 1\n"
        "quantum:\n"
        "  qubits: 200\n"
        "  connectivity: linear\n"
        "  shots: 128\n"
        "  modalities:\n"
        "    - best_available\n"
        "  depth: 10\n"
        "  fallback: queue_for_qpu\n");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_submit((dir / "big.hwd").string(), scenario_path("demo.scn"), out,
                       err),
            3);
  EXPECT_NE(err.str().find("no feasible QPU"), std::string::npos);
}

TEST(Commands, SubmitRankingMatchesSelection) {
  fs::path dir = temp_dir("submit3");
  write(dir / "q.hwd",
        "job_id: ranked\n"
        "classical:\n"
        "  cpu_cores: 8\n"
        "  memory_gb: 16\n"
        "  walltime_s: 100\n"
        "  mpi_ranks: 1\n"
        "quantum:\n"
        "  qubits: 12\n"
        "  connectivity: linear\n"
        "  shots: 128\n"
        "  modalities:\n"
        "    - best_available\n"
        "  depth: 10\n"
        "  fallback: queue_for_qpu\n");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_submit((dir / "q.hwd").string(), scenario_path("demo.scn"), out,
                       err),
            0);

  // cross-check the printed winner against the selection oracle
  Scenario s = load_scenario_file(scenario_path("demo.scn"));
  HybridWorkloadDescriptor d = parse_hwd(
      "job_id: ranked\nclassical:\n  cpu_cores: 8\n  memory_gb: 16\n"
      "  walltime_s: 100\n  mpi_ranks: 1\nquantum:\n  qubits: 12\n"
      "  connectivity: linear\n  shots: 128\n  modalities:\n"
      "    - best_available\n  depth: 10\n  fallback: queue_for_qpu\n");
  ResourceRegistry reg(s.registry, s.seed, s.config.drift);
  ClusterState state(s.registry);
  Scheduler sched(s.config);
  auto sel = select_qpu(reg, *d.quantum, sched.weights(), sched.norms(),
                        s.config.fabric, state, 0.0);
  ASSERT_TRUE(sel.has_value());
  std::string first_line_marker = "  1. " + sel->resource_id;
  EXPECT_NE(out.str().find(first_line_marker), std::string::npos) << out.str();
}

// --- end-to-end through the installed binary ---

TEST(Binary, SubcommandsAndExitCodes) {
  fs::path dir = temp_dir("binary");
  write(dir / "c.hwd",
        "job_id: plain\n"
        "classical:\n"
        "  cpu_cores: 8\n"
        "  memory_gb: 16\n"
        "  walltime_s: 100\n"
        "  mpi_ranks: 8\n");
  write(dir / "garbage.hwd", "job_id:broken\n");

  EXPECT_EQ(run_binary("validate " + scenario_path("demo.scn")), 0);
  EXPECT_EQ(run_binary("validate " + (dir / "garbage.hwd").string()), 2);
  EXPECT_EQ(run_binary("submit " + (dir / "c.hwd").string() + " " +
                       scenario_path("demo.scn")),
            0);
  EXPECT_EQ(run_binary("run " + scenario_path("demo.scn") + " --out-dir " +
                       (dir / "out").string()),
            0);
  EXPECT_EQ(run_binary("report " + (dir / "out" / "trace.tsv").string() +
                       " --check " + (dir / "out" / "metrics.txt").string()),
            0);
}

TEST(Binary, SeedOverrideIsDeterministic) {
  fs::path dir = temp_dir("binseed");
  ASSERT_EQ(run_binary("run " + scenario_path("demo.scn") + " --seed 7 --out-dir " +
                       (dir / "a").string()),
            0);
  ASSERT_EQ(run_binary("run " + scenario_path("demo.scn") + " --seed 7 --out-dir " +
                       (dir / "b").string()),
            0);
  std::ifstream fa(dir / "a" / "trace.tsv"), fb(dir / "b" / "trace.tsv");
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_FALSE(sa.str().empty());
}

TEST(Commands, InternalAbortExitsFour) {
  fs::path dir = temp_dir("valve");
  write(dir / "tiny.scn",
        "seed: 1\n"
        "horizon_s: 3600\n"
        "max_events: 2\n"
        "registry:\n"
        "  - resource_id: qpu0\n"
        "    tier: R3\n"
        "    cpu_cores: 8\n"
        "    memory_gb: 32\n"
        "    qpu:\n"
        "      modality: superconducting\n"
        "      qubit_count: 8\n"
        "      connectivity: grid\n"
        "      nominal_fidelity: 0.99\n"
        "      coherence_time_us: 100\n");
  RunOptions opts;
  opts.out_dir = (dir / "out").string();
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run((dir / "tiny.scn").string(), opts, out, err), 4);
  EXPECT_NE(err.str().find("invariant"), std::string::npos);
}

TEST(Binary, EnvVarDefaultScenario) {
  fs::path dir = temp_dir("binenv");
  std::string cmd = std::string("QHPC_SIM_CONFIG=") + scenario_path("demo.scn") +
                    " " + QHPC_BIN + " run --out-dir " + (dir / "env").string() +
                    " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_TRUE(fs::exists(dir / "env" / "trace.tsv"));
}

}  // namespace
}  // namespace qhpc
