#include "qhpc/config.hpp"

#include "qhpc/errors.hpp"

namespace qhpc {

double FabricConfig::gate_time_s(Modality m) const {
  switch (m) {
    case Modality::superconducting: return gate_time_superconducting_s;
    case Modality::trapped_ion: return gate_time_trapped_ion_s;
    case Modality::neutral_atom: return gate_time_neutral_atom_s;
    case Modality::photonic: return gate_time_photonic_s;
    case Modality::best_available: break;
  }
  throw DomainError("no gate time for modality wildcard");
}

const LinkClass& FabricConfig::link(LinkKind k) const {
  switch (k) {
    case LinkKind::intra_node: return intra_node;
    case LinkKind::inter_node: return inter_node;
    case LinkKind::wan: return wan;
  }
  throw DomainError("unknown link kind");
}

std::vector<std::pair<std::string, std::string>> config_to_kv(const SimConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto put = [&kv](const char* key, double v) {
    kv.emplace_back(key, format_double(v));
  };
  put("fabric.intra_node.rtt_s", cfg.fabric.intra_node.rtt_s);
  put("fabric.intra_node.bw_Bps", cfg.fabric.intra_node.bandwidth_bytes_per_s);
  put("fabric.inter_node.rtt_s", cfg.fabric.inter_node.rtt_s);
  put("fabric.inter_node.bw_Bps", cfg.fabric.inter_node.bandwidth_bytes_per_s);
  put("fabric.wan.rtt_s", cfg.fabric.wan.rtt_s);
  put("fabric.wan.bw_Bps", cfg.fabric.wan.bandwidth_bytes_per_s);
  put("fabric.gate_time.superconducting_s", cfg.fabric.gate_time_superconducting_s);
  put("fabric.gate_time.trapped_ion_s", cfg.fabric.gate_time_trapped_ion_s);
  put("fabric.gate_time.neutral_atom_s", cfg.fabric.gate_time_neutral_atom_s);
  put("fabric.gate_time.photonic_s", cfg.fabric.gate_time_photonic_s);
  put("fabric.per_shot_overhead_s", cfg.fabric.per_shot_overhead_s);
  put("midware.opt_factor", cfg.midware.opt_factor);
  put("midware.routing_overhead", cfg.midware.routing_overhead);
  put("midware.compile_c0_s", cfg.midware.compile_c0_s);
  put("midware.compile_c1_s", cfg.midware.compile_c1_s);
  put("midware.mitigation_none_threshold", cfg.midware.mitigation_none_threshold);
  put("midware.mitigation_zne_threshold", cfg.midware.mitigation_zne_threshold);
  put("midware.zne_shot_multiplier", cfg.midware.zne_shot_multiplier);
  put("midware.pec_shot_multiplier", cfg.midware.pec_shot_multiplier);
  put("midware.flops_per_amp_layer", cfg.midware.flops_per_amp_layer);
  put("midware.gpu_flops_effective", cfg.midware.gpu_flops_effective);
  put("midware.shot_sample_cost_s", cfg.midware.shot_sample_cost_s);
  kv.emplace_back("midware.emulation_qubit_cap",
                  std::to_string(cfg.midware.emulation_qubit_cap));
  put("drift.poll_period_s", cfg.drift.poll_period_s);
  put("drift.recalibration_period_s", cfg.drift.recalibration_period_s);
  put("drift.step_sigma", cfg.drift.step_sigma);
  put("drift.fidelity_floor", cfg.drift.fidelity_floor);
  put("policy.w_fidelity", cfg.policy.w_fidelity);
  put("policy.w_connectivity", cfg.policy.w_connectivity);
  put("policy.w_queue", cfg.policy.w_queue);
  put("policy.w_latency", cfg.policy.w_latency);
  put("policy.max_wait_s", cfg.policy.max_wait_s);
  put("policy.max_latency_s", cfg.policy.max_latency_s);
  put("policy.interleave_threshold_s", cfg.policy.interleave_threshold_s);
  kv.emplace_back("policy.backfill", cfg.policy.backfill ? "true" : "false");
  return kv;
}

}  // namespace qhpc
