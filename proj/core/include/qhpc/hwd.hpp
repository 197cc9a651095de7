#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qhpc/config.hpp"
#include "qhpc/types.hpp"

namespace qhpc {

/// Classical half of a hybrid workload descriptor.
struct ClassicalDescriptor {
  int cpu_cores = 1;
  int gpu_count = 0;
  double memory_gb = 1.0;
  double walltime_s = 60.0;
  int mpi_ranks = 1;

  bool operator==(const ClassicalDescriptor&) const = default;
};

/// Quantum half: circuit requirements plus scarcity policy. The circuit body
/// is carried verbatim and never interpreted; only qubit count, connectivity
/// class and depth feed the cost models.
struct QuantumDescriptor {
  int qubit_count = 1;
  Connectivity connectivity = Connectivity::linear;
  std::optional<std::int64_t> shot_budget;    // exactly one of these two
  std::optional<double> target_confidence;
  std::optional<double> epsilon;              // present iff target_confidence is
  std::vector<Modality> modality_preference;  // ordered, best_available last if present
  int circuit_depth = 1;
  std::string circuit_text;
  FallbackPolicy fallback_policy = FallbackPolicy::queue_for_qpu;

  bool operator==(const QuantumDescriptor&) const = default;
};

struct HybridWorkloadDescriptor {
  std::string job_id;
  ClassicalDescriptor classical;
  std::optional<QuantumDescriptor> quantum;
  CoschedMode mode_hint = CoschedMode::auto_select;
  int priority = 0;

  bool operator==(const HybridWorkloadDescriptor&) const = default;
};

/// Parse and canonicalize one descriptor document. Unknown keys are a hard
/// error. Defaults applied: priority 0, mode auto, gpu_count 0, epsilon 0.01
/// when confidence is given without one.
/// Throws ParseError (syntax) or ValidationError (semantics).
HybridWorkloadDescriptor parse_hwd(std::string_view text,
                                   const HwdLimits& limits = HwdLimits{});

/// Canonical text form: fixed key order, shortest-round-trip numbers.
/// parse_hwd(serialize_hwd(d)) == d for every valid descriptor.
std::string serialize_hwd(const HybridWorkloadDescriptor& d);

/// Hoeffding bound: shots needed to estimate a bounded observable to
/// +-epsilon at the given confidence: ceil(ln(2/(1-c)) / (2 eps^2)).
std::int64_t shots_from_confidence(double target_confidence, double epsilon);

/// The descriptor's shot budget: explicit, or converted from its confidence
/// target and epsilon.
std::int64_t effective_shot_budget(const QuantumDescriptor& q);

}  // namespace qhpc
