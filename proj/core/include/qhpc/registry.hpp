#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qhpc/config.hpp"
#include "qhpc/rng.hpp"
#include "qhpc/types.hpp"

namespace qhpc {

/// Most recent calibration observation for one QPU.
struct CalibrationProfile {
  double two_qubit_fidelity = 0.99;
  double coherence_time_us = 100.0;
  double timestamp_s = 0.0;
  double nominal_fidelity = 0.99;  // value restored by a recalibration

  bool operator==(const CalibrationProfile&) const = default;
};

struct QpuProfile {
  Modality modality = Modality::superconducting;
  int qubit_count = 1;
  Connectivity connectivity = Connectivity::linear;
  CalibrationProfile calibration;

  bool operator==(const QpuProfile&) const = default;
};

/// One entry of the unified resource registry.
struct ResourceRecord {
  std::string resource_id;
  Tier tier = Tier::r1;
  int cpu_cores = 0;
  int gpu_count = 0;
  double memory_gb = 0.0;
  std::optional<QpuProfile> qpu;
  LinkKind access_latency_class = LinkKind::inter_node;

  bool operator==(const ResourceRecord&) const = default;
};

/// Tier invariants: R1 CPU-only, R2 adds GPUs, R3 co-located QPU on the
/// intra-node fabric, R4 remote QPU over WAN. Throws ValidationError.
void validate_record(const ResourceRecord& r);

/// Whether a requested connectivity class can run on the given hardware
/// class. Explicit table, monotone along
/// linear < {ring, heavy_hex} < grid < all_to_all:
///   - linear runs anywhere
///   - ring needs ring, grid or all_to_all
///   - heavy_hex needs heavy_hex, grid or all_to_all
///   - grid needs grid or all_to_all
///   - all_to_all needs all_to_all
bool connectivity_satisfiable(Connectivity request, Connectivity hardware);

/// Seeded fidelity random walk with periodic recalibration reset: the drift
/// law behind dynamic QPU resources. A trajectory is a pure function of
/// (seed, poll sequence).
class CalibrationWalk {
 public:
  CalibrationWalk(std::uint64_t seed, const DriftConfig& drift)
      : sampler_(seed), drift_(drift) {}

  struct StepResult {
    CalibrationProfile profile;
    bool recalibrated = false;
  };

  /// Advance one poll: reset to nominal first if a recalibration boundary
  /// was crossed since the last poll, then add clamped Gaussian noise.
  /// Throws StaleClockError when now_s precedes the profile timestamp.
  StepResult step(const CalibrationProfile& current, double now_s);

 private:
  GaussianSampler sampler_;
  DriftConfig drift_;
};

struct QueryPredicate {
  int min_qubits = 0;
  std::optional<Connectivity> connectivity;
  std::vector<Modality> modalities;  // empty = any; best_available = any
  std::set<Tier> tier_set;           // empty = any
};

struct PollResult {
  std::string resource_id;
  CalibrationProfile profile;
  bool recalibrated = false;
};

/// The unified resource registry: static classical inventory plus drifting
/// QPU calibration state. Single-writer (the simulation loop); query results
/// are value snapshots.
class ResourceRegistry {
 public:
  ResourceRegistry() = default;
  ResourceRegistry(std::vector<ResourceRecord> records, std::uint64_t seed,
                   const DriftConfig& drift);

  /// Poll every QPU, in resource_id order. Emits one result per device.
  std::vector<PollResult> poll_all(double now_s);

  /// Poll a single device. Throws DomainError for unknown or QPU-less ids.
  PollResult poll(const std::string& resource_id, double now_s);

  /// All records matching every predicate clause, ordered by resource_id.
  std::vector<ResourceRecord> query(const QueryPredicate& p) const;

  const ResourceRecord* find(const std::string& resource_id) const;
  const std::vector<ResourceRecord>& records() const { return records_; }

  /// Line-oriented snapshot for golden tests: one record per line.
  std::string snapshot_text() const;

 private:
  std::vector<ResourceRecord> records_;  // sorted by resource_id
  std::map<std::string, CalibrationWalk> walks_;
};

}  // namespace qhpc
