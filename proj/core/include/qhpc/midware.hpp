#pragma once

#include <cstdint>

#include "qhpc/config.hpp"
#include "qhpc/hwd.hpp"
#include "qhpc/registry.hpp"
#include "qhpc/types.hpp"

namespace qhpc {

/// Output of the modeled four-stage compilation pipeline: depth after
/// logical optimization and routing, aggregate compile latency, and the
/// error-mitigation strategy picked from the target's noise profile.
struct CompilationEstimate {
  int input_depth = 1;
  int optimized_depth = 1;
  double compile_time_s = 0.0;
  Mitigation mitigation = Mitigation::none;
  double mitigation_shot_multiplier = 1.0;

  bool operator==(const CompilationEstimate&) const = default;
};

/// Estimate compilation for a demand on a concrete target.
///   depth:    ceil(depth * opt_factor), then ceil(* routing_overhead)
///             unless the hardware is all_to_all (routing-free).
///   time:     c0 + c1 * input depth.
///   mitigation: fidelity >= 0.999 none; >= 0.99 ZNE (x3); below PEC (x10).
/// Throws InfeasibleTarget when the target cannot host the demand.
CompilationEstimate compile_estimate(const QuantumDescriptor& demand,
                                     const QpuProfile& target,
                                     const MidwareConfig& cfg);

/// GPU state-vector emulation wall time:
///   flops_per_amp_layer * depth * 2^qubits / gpu_flops + shots * sample cost.
/// Throws CapExceeded above the emulation qubit cap.
double emulation_cost_s(int qubits, int depth, std::int64_t shots,
                        const MidwareConfig& cfg);

/// The depth transform the pipeline applies (optimization then routing),
/// usable per task node. Never exceeds the input depth.
int transformed_depth(int node_depth, Connectivity hardware,
                      const MidwareConfig& cfg);

}  // namespace qhpc
