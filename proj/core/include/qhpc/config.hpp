#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qhpc/types.hpp"

namespace qhpc {

/// One class of interconnect: round-trip latency plus bandwidth.
struct LinkClass {
  LinkKind kind = LinkKind::intra_node;
  double rtt_s = 0.0;
  double bandwidth_bytes_per_s = 1.0;
};

/// Interconnect and QPU execution-time parameters. Defaults follow the
/// published budgets: sub-4 us / ~64 Gb/s intra-node, sub-10 us inter-node,
/// and a 50 ms WAN round trip (midpoint of the 10-100 ms band).
struct FabricConfig {
  LinkClass intra_node{LinkKind::intra_node, 4e-6, 8e9};
  LinkClass inter_node{LinkKind::inter_node, 1e-5, 2.5e10};
  LinkClass wan{LinkKind::wan, 0.05, 1.25e8};

  // Per-layer gate times by modality, representative of published ranges
  // (superconducting 10-100 ns, trapped-ion and neutral-atom 1-100 us,
  // photonic <1 ns).
  double gate_time_superconducting_s = 50e-9;
  double gate_time_trapped_ion_s = 10e-6;
  double gate_time_neutral_atom_s = 10e-6;
  double gate_time_photonic_s = 1e-9;

  // Reset + readout cost charged once per shot.
  double per_shot_overhead_s = 1e-3;

  double gate_time_s(Modality m) const;
  const LinkClass& link(LinkKind k) const;
};

/// Compilation-pipeline and GPU-emulation cost constants.
struct MidwareConfig {
  double opt_factor = 0.8;          // logical-optimization depth factor
  double routing_overhead = 1.25;   // depth multiplier unless all_to_all hardware
  double compile_c0_s = 0.1;        // fixed compile latency
  double compile_c1_s = 1e-4;       // per input-depth-layer compile latency
  double mitigation_none_threshold = 0.999;  // fidelity >= this: no mitigation
  double mitigation_zne_threshold = 0.99;    // fidelity >= this: ZNE, below: PEC
  double zne_shot_multiplier = 3.0;
  double pec_shot_multiplier = 10.0;
  double flops_per_amp_layer = 16.0;   // state-vector update cost per amplitude
  double gpu_flops_effective = 1e13;
  double shot_sample_cost_s = 1e-6;    // per-shot sampling cost during emulation
  int emulation_qubit_cap = 34;
};

/// Calibration polling and drift parameters. Poll period defaults to the
/// 15-minute vendor-API cadence.
struct DriftConfig {
  double poll_period_s = 900.0;
  double recalibration_period_s = 86400.0;
  double step_sigma = 0.0;       // per-poll fidelity random-walk std-dev
  double fidelity_floor = 0.5;   // drift never takes fidelity below this
};

/// Scheduler policy knobs.
struct PolicyConfig {
  double w_fidelity = 0.4;
  double w_connectivity = 0.2;
  double w_queue = 0.2;
  double w_latency = 0.2;
  double max_wait_s = 900.0;    // queue-wait normalization constant
  double max_latency_s = 0.1;   // access-latency normalization constant
  double interleave_threshold_s = 1.0;
  bool backfill = true;
};

/// Cluster-wide maxima enforced on submitted descriptors, plus the default
/// accuracy target for the confidence-to-shots conversion.
struct HwdLimits {
  int max_cpu_cores = 4096;
  int max_gpu_count = 64;
  double max_memory_gb = 65536.0;
  double max_walltime_s = 30.0 * 86400.0;
  int max_mpi_ranks = 65536;
  double default_epsilon = 0.01;
};

struct SimConfig {
  FabricConfig fabric;
  MidwareConfig midware;
  DriftConfig drift;
  PolicyConfig policy;
  HwdLimits limits;
};

/// Flattened key=value view of every cost-model constant, in a stable order.
/// Emitted into each trace header so runs are reproducible from the trace
/// alone.
std::vector<std::pair<std::string, std::string>> config_to_kv(const SimConfig& cfg);

}  // namespace qhpc
