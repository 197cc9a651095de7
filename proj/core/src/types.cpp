#include "qhpc/types.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace qhpc {

SimTimeNs ns_from_s(double seconds) {
  return static_cast<SimTimeNs>(std::llround(seconds * 1e9));
}

double s_from_ns(SimTimeNs ns) { return static_cast<double>(ns) / 1e9; }

std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::cpu: return "cpu";
    case NodeKind::gpu: return "gpu";
    case NodeKind::qpu: return "qpu";
    case NodeKind::fpga: return "fpga";
  }
  return "?";
}

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::superconducting: return "superconducting";
    case Modality::trapped_ion: return "trapped_ion";
    case Modality::neutral_atom: return "neutral_atom";
    case Modality::photonic: return "photonic";
    case Modality::best_available: return "best_available";
  }
  return "?";
}

std::string_view to_string(Connectivity c) {
  switch (c) {
    case Connectivity::linear: return "linear";
    case Connectivity::ring: return "ring";
    case Connectivity::grid: return "grid";
    case Connectivity::heavy_hex: return "heavy_hex";
    case Connectivity::all_to_all: return "all_to_all";
  }
  return "?";
}

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::r1: return "R1";
    case Tier::r2: return "R2";
    case Tier::r3: return "R3";
    case Tier::r4: return "R4";
  }
  return "?";
}

std::string_view to_string(LinkKind l) {
  switch (l) {
    case LinkKind::intra_node: return "intra_node";
    case LinkKind::inter_node: return "inter_node";
    case LinkKind::wan: return "wan";
  }
  return "?";
}

std::string_view to_string(CoschedMode m) {
  switch (m) {
    case CoschedMode::simultaneous: return "simultaneous";
    case CoschedMode::interleaved: return "interleaved";
    case CoschedMode::async_streaming: return "async_streaming";
    case CoschedMode::auto_select: return "auto";
  }
  return "?";
}

std::string_view to_string(FallbackPolicy p) {
  switch (p) {
    case FallbackPolicy::emulate_on_gpu: return "emulate_on_gpu";
    case FallbackPolicy::queue_for_qpu: return "queue_for_qpu";
    case FallbackPolicy::fail_degraded: return "fail_degraded";
  }
  return "?";
}

std::string_view to_string(FallbackAction a) {
  switch (a) {
    case FallbackAction::none: return "none";
    case FallbackAction::gpu_emulation: return "gpu_emulation";
    case FallbackAction::queued: return "queued";
    case FallbackAction::degraded_notice: return "degraded_notice";
  }
  return "?";
}

std::string_view to_string(Mitigation m) {
  switch (m) {
    case Mitigation::none: return "none";
    case Mitigation::zne: return "zne";
    case Mitigation::pec: return "pec";
    case Mitigation::cdr: return "cdr";
  }
  return "?";
}

bool node_kind_from_string(std::string_view s, NodeKind& out) {
  if (s == "cpu") out = NodeKind::cpu;
  else if (s == "gpu") out = NodeKind::gpu;
  else if (s == "qpu") out = NodeKind::qpu;
  else if (s == "fpga") out = NodeKind::fpga;
  else return false;
  return true;
}

bool modality_from_string(std::string_view s, Modality& out) {
  if (s == "superconducting") out = Modality::superconducting;
  else if (s == "trapped_ion") out = Modality::trapped_ion;
  else if (s == "neutral_atom") out = Modality::neutral_atom;
  else if (s == "photonic") out = Modality::photonic;
  else if (s == "best_available") out = Modality::best_available;
  else return false;
  return true;
}

bool connectivity_from_string(std::string_view s, Connectivity& out) {
  if (s == "linear") out = Connectivity::linear;
  else if (s == "ring") out = Connectivity::ring;
  else if (s == "grid") out = Connectivity::grid;
  else if (s == "heavy_hex") out = Connectivity::heavy_hex;
  else if (s == "all_to_all") out = Connectivity::all_to_all;
  else return false;
  return true;
}

bool tier_from_string(std::string_view s, Tier& out) {
  if (s == "R1" || s == "r1") out = Tier::r1;
  else if (s == "R2" || s == "r2") out = Tier::r2;
  else if (s == "R3" || s == "r3") out = Tier::r3;
  else if (s == "R4" || s == "r4") out = Tier::r4;
  else return false;
  return true;
}

bool link_kind_from_string(std::string_view s, LinkKind& out) {
  if (s == "intra_node") out = LinkKind::intra_node;
  else if (s == "inter_node") out = LinkKind::inter_node;
  else if (s == "wan") out = LinkKind::wan;
  else return false;
  return true;
}

bool mode_from_string(std::string_view s, CoschedMode& out) {
  if (s == "simultaneous") out = CoschedMode::simultaneous;
  else if (s == "interleaved") out = CoschedMode::interleaved;
  else if (s == "async_streaming" || s == "async") out = CoschedMode::async_streaming;
  else if (s == "auto") out = CoschedMode::auto_select;
  else return false;
  return true;
}

bool fallback_policy_from_string(std::string_view s, FallbackPolicy& out) {
  if (s == "emulate_on_gpu") out = FallbackPolicy::emulate_on_gpu;
  else if (s == "queue_for_qpu") out = FallbackPolicy::queue_for_qpu;
  else if (s == "fail_degraded") out = FallbackPolicy::fail_degraded;
  else return false;
  return true;
}

bool is_valid_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, res.ptr);
}

}  // namespace qhpc
