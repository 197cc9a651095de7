#pragma once

#include <cstdint>

#include "qhpc/config.hpp"
#include "qhpc/types.hpp"

namespace qhpc {

/// Shot-result payload: one packed measurement bitstring per shot.
struct QrtpPayload {
  std::int64_t shots = 0;
  int qubit_count = 0;
  std::int64_t bytes = 0;  // shots * ceil(qubit_count / 8)
};

QrtpPayload make_qrtp_payload(std::int64_t shots, int qubit_count);

/// Latency + bandwidth transfer cost: rtt + payload / bandwidth.
double transfer_time_s(std::int64_t payload_bytes, const LinkClass& link);

/// QPU wall time: shots * depth * gate_time(modality) + shots * per-shot
/// reset/readout overhead.
double qpu_exec_time_s(std::int64_t shots, int circuit_depth, Modality modality,
                       const FabricConfig& fabric);

/// Round trip for one result payload: co-located (R3) devices ride the
/// intra-node link, remote (R4) devices the WAN link.
double feedback_rtt_s(Tier tier, const QrtpPayload& payload,
                      const FabricConfig& fabric);

/// Round-trip latency of a resource's access class, used by the scheduler's
/// latency scoring term.
double access_rtt_s(LinkKind access_class, const FabricConfig& fabric);

}  // namespace qhpc
