#include <benchmark/benchmark.h>

#include <random>

#include "qhpc/dctg.hpp"
#include "qhpc/hwd.hpp"
#include "qhpc/registry.hpp"
#include "qhpc/scenario.hpp"
#include "qhpc/scheduler.hpp"
#include "qhpc/simcore.hpp"

namespace {

using namespace qhpc;

const char* kDescriptor =
    "job_id: bench\n"
    "priority: 3\n"
    "classical:\n"
    "  cpu_cores: 16\n"
    "  gpu_count: 0\n"
    "  memory_gb: 64\n"
    "  walltime_s: 600\n"
    "  mpi_ranks: 16\n"
    "quantum:\n"
    "  qubits: 24\n"
    "  connectivity: heavy_hex\n"
    "  shots: 4096\n"
    "  modalities:\n"
    "    - superconducting\n"
    "    - trapped_ion\n"
    "  depth: 200\n"
    "  fallback: emulate_on_gpu\n";

void BM_ParseHwd(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_hwd(kDescriptor));
  }
}
BENCHMARK(BM_ParseHwd);

void BM_BuildAndUnrollVqe(benchmark::State& state) {
  HybridWorkloadDescriptor d = parse_hwd(kDescriptor);
  TemplateParams params;
  params.max_iterations = static_cast<int>(state.range(0));
  for (auto _ : state) {
    TaskGraph g = build_graph(d, GraphTemplate::vqe_loop, params);
    benchmark::DoNotOptimize(unroll(g));
  }
}
BENCHMARK(BM_BuildAndUnrollVqe)->Arg(10)->Arg(100);

std::vector<ResourceRecord> bench_registry(int qpus) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> fid(0.9, 0.9999);
  std::vector<ResourceRecord> records;
  ResourceRecord cpu;
  cpu.resource_id = "cpu0";
  cpu.tier = Tier::r1;
  cpu.cpu_cores = 256;
  cpu.memory_gb = 1024;
  records.push_back(cpu);
  for (int i = 0; i < qpus; ++i) {
    ResourceRecord r;
    r.resource_id = "qpu" + std::to_string(i);
    r.tier = Tier::r3;
    r.cpu_cores = 32;
    r.gpu_count = 1;
    r.memory_gb = 128;
    r.access_latency_class = LinkKind::intra_node;
    QpuProfile q;
    q.modality = i % 2 == 0 ? Modality::superconducting : Modality::trapped_ion;
    q.qubit_count = 16 + 8 * (i % 8);
    q.connectivity = Connectivity::heavy_hex;
    q.calibration.two_qubit_fidelity = fid(gen);
    q.calibration.nominal_fidelity = q.calibration.two_qubit_fidelity;
    q.calibration.coherence_time_us = 150;
    r.qpu = q;
    records.push_back(r);
  }
  return records;
}

void BM_SelectQpu(benchmark::State& state) {
  std::vector<ResourceRecord> records = bench_registry(static_cast<int>(state.range(0)));
  ResourceRegistry reg(records, 1, DriftConfig{});
  ClusterState cluster(records);
  HybridWorkloadDescriptor d = parse_hwd(kDescriptor);
  QssWeights w;
  QssNorms norms;
  FabricConfig fabric;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        select_qpu(reg, *d.quantum, w, norms, fabric, cluster, 0.0));
  }
}
BENCHMARK(BM_SelectQpu)->Arg(4)->Arg(32);

void BM_SchedulePass(benchmark::State& state) {
  std::vector<ResourceRecord> records = bench_registry(4);
  ResourceRegistry reg(records, 1, DriftConfig{});
  ClusterState cluster(records);
  Scheduler sched({});
  HybridWorkloadDescriptor d = parse_hwd(kDescriptor);

  std::vector<PendingJob> pending;
  for (int i = 0; i < static_cast<int>(state.range(0)); ++i) {
    PendingJob j;
    j.job_id = "job" + std::to_string(i);
    j.priority = i % 5;
    j.submit_s = i;
    j.classical = d.classical;
    j.quantum = i % 2 == 0 ? &d.quantum.value() : nullptr;
    j.has_latency_critical = i % 2 == 0;
    j.qpu_work = {{4096, 200}};
    pending.push_back(j);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(sched.schedule_step(pending, reg, cluster, 0.0));
  }
}
BENCHMARK(BM_SchedulePass)->Arg(8)->Arg(64);

void BM_FullRun(benchmark::State& state) {
  Scenario s;
  s.seed = 9;
  s.horizon_s = 4000;
  s.config.drift.step_sigma = 0.002;
  s.registry = bench_registry(2);
  for (int i = 0; i < static_cast<int>(state.range(0)); ++i) {
    JobSpec spec;
    spec.submit_s = 3.0 * i;
    HybridWorkloadDescriptor d = parse_hwd(kDescriptor);
    d.job_id = "job" + std::to_string(i);
    spec.hwd = d;
    spec.graph_template =
        i % 3 == 0 ? GraphTemplate::batched_circuits : GraphTemplate::vqe_loop;
    spec.template_params.max_iterations = 3;
    spec.template_params.batch_size = 4;
    spec.template_params.classical_phase_s = 0.5;
    s.jobs.push_back(spec);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(run(s));
  }
}
BENCHMARK(BM_FullRun)->Arg(4)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
