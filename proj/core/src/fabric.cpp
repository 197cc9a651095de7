#include "qhpc/fabric.hpp"

#include "qhpc/errors.hpp"

namespace qhpc {

QrtpPayload make_qrtp_payload(std::int64_t shots, int qubit_count) {
  if (shots < 0) throw DomainError("payload shots must be >= 0");
  if (qubit_count < 0) throw DomainError("payload qubit_count must be >= 0");
  QrtpPayload p;
  p.shots = shots;
  p.qubit_count = qubit_count;
  p.bytes = shots * ((static_cast<std::int64_t>(qubit_count) + 7) / 8);
  return p;
}

double transfer_time_s(std::int64_t payload_bytes, const LinkClass& link) {
  if (payload_bytes < 0) throw DomainError("payload_bytes must be >= 0");
  return link.rtt_s + static_cast<double>(payload_bytes) / link.bandwidth_bytes_per_s;
}

double qpu_exec_time_s(std::int64_t shots, int circuit_depth, Modality modality,
                       const FabricConfig& fabric) {
  if (shots < 1 || circuit_depth < 1)
    throw DomainError("qpu_exec_time requires shots >= 1 and depth >= 1");
  double s = static_cast<double>(shots);
  return s * static_cast<double>(circuit_depth) * fabric.gate_time_s(modality) +
         fabric.per_shot_overhead_s * s;
}

double feedback_rtt_s(Tier tier, const QrtpPayload& payload,
                      const FabricConfig& fabric) {
  switch (tier) {
    case Tier::r3: return transfer_time_s(payload.bytes, fabric.intra_node);
    case Tier::r4: return transfer_time_s(payload.bytes, fabric.wan);
    default: throw DomainError("feedback_rtt is defined for QPU tiers R3/R4 only");
  }
}

double access_rtt_s(LinkKind access_class, const FabricConfig& fabric) {
  return fabric.link(access_class).rtt_s;
}

}  // namespace qhpc
