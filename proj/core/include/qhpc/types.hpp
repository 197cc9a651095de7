#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace qhpc {

// Simulation time is carried as a 64-bit nanosecond count so that event
// ordering stays exact across the us-to-hours range the cost models span.
using SimTimeNs = std::int64_t;

SimTimeNs ns_from_s(double seconds);
double s_from_ns(SimTimeNs ns);

enum class NodeKind { cpu, gpu, qpu, fpga };

enum class Modality {
  superconducting,
  trapped_ion,
  neutral_atom,
  photonic,
  best_available,  // wildcard, valid only in preference lists
};

enum class Connectivity { linear, ring, grid, heavy_hex, all_to_all };

enum class Tier { r1, r2, r3, r4 };

enum class LinkKind { intra_node, inter_node, wan };

enum class CoschedMode { simultaneous, interleaved, async_streaming, auto_select };

enum class FallbackPolicy { emulate_on_gpu, queue_for_qpu, fail_degraded };

enum class FallbackAction { none, gpu_emulation, queued, degraded_notice };

enum class Mitigation { none, zne, pec, cdr };

std::string_view to_string(NodeKind k);
std::string_view to_string(Modality m);
std::string_view to_string(Connectivity c);
std::string_view to_string(Tier t);
std::string_view to_string(LinkKind l);
std::string_view to_string(CoschedMode m);
std::string_view to_string(FallbackPolicy p);
std::string_view to_string(FallbackAction a);
std::string_view to_string(Mitigation m);

// All from_* helpers return false on unknown spellings and leave `out` alone.
bool node_kind_from_string(std::string_view s, NodeKind& out);
bool modality_from_string(std::string_view s, Modality& out);
bool connectivity_from_string(std::string_view s, Connectivity& out);
bool tier_from_string(std::string_view s, Tier& out);
bool link_kind_from_string(std::string_view s, LinkKind& out);
bool mode_from_string(std::string_view s, CoschedMode& out);
bool fallback_policy_from_string(std::string_view s, FallbackPolicy& out);

// Identifier charset accepted for job and resource ids. Keeping ids to this
// set makes the tab-separated trace and the line-oriented graph format
// unambiguous.
bool is_valid_identifier(std::string_view s);

// Shortest round-trippable decimal form of a double (std::to_chars).
std::string format_double(double v);

}  // namespace qhpc
