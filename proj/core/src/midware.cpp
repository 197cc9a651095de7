#include "qhpc/midware.hpp"

#include <cmath>

#include "qhpc/errors.hpp"

namespace qhpc {

CompilationEstimate compile_estimate(const QuantumDescriptor& demand,
                                     const QpuProfile& target,
                                     const MidwareConfig& cfg) {
  if (target.qubit_count < demand.qubit_count)
    throw InfeasibleTarget("target has too few qubits");
  if (!connectivity_satisfiable(demand.connectivity, target.connectivity))
    throw InfeasibleTarget("target connectivity cannot host the request");

  CompilationEstimate est;
  est.input_depth = demand.circuit_depth;
  est.optimized_depth =
      transformed_depth(demand.circuit_depth, target.connectivity, cfg);

  // Stages (i)-(iii) aggregate latency.
  est.compile_time_s =
      cfg.compile_c0_s + cfg.compile_c1_s * static_cast<double>(demand.circuit_depth);

  // Stage (iv): mitigation from the target's current noise profile.
  double fidelity = target.calibration.two_qubit_fidelity;
  if (fidelity >= cfg.mitigation_none_threshold) {
    est.mitigation = Mitigation::none;
    est.mitigation_shot_multiplier = 1.0;
  } else if (fidelity >= cfg.mitigation_zne_threshold) {
    est.mitigation = Mitigation::zne;
    est.mitigation_shot_multiplier = cfg.zne_shot_multiplier;
  } else {
    est.mitigation = Mitigation::pec;
    est.mitigation_shot_multiplier = cfg.pec_shot_multiplier;
  }
  return est;
}

int transformed_depth(int node_depth, Connectivity hardware,
                      const MidwareConfig& cfg) {
  // Stage (i): logical optimization.
  double depth = std::ceil(static_cast<double>(node_depth) * cfg.opt_factor);
  // Stage (ii): mapping and routing; all_to_all hardware needs no SWAPs.
  if (hardware != Connectivity::all_to_all) {
    depth = std::ceil(depth * cfg.routing_overhead);
  }
  int out = static_cast<int>(depth);
  if (out < 1) out = 1;
  // The two ceilings can overshoot the input by a layer or two at small
  // depths; optimization never publishes a depth above the input.
  if (out > node_depth) out = node_depth;
  return out;
}

double emulation_cost_s(int qubits, int depth, std::int64_t shots,
                        const MidwareConfig& cfg) {
  if (qubits < 1 || depth < 1 || shots < 0)
    throw DomainError("emulation_cost requires qubits >= 1, depth >= 1, shots >= 0");
  if (qubits > cfg.emulation_qubit_cap)
    throw CapExceeded("qubit count exceeds the emulation cap");
  double amps = std::ldexp(1.0, qubits);  // 2^qubits
  return cfg.flops_per_amp_layer * static_cast<double>(depth) * amps /
             cfg.gpu_flops_effective +
         static_cast<double>(shots) * cfg.shot_sample_cost_s;
}

}  // namespace qhpc
