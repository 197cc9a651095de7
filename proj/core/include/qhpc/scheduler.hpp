#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qhpc/config.hpp"
#include "qhpc/fabric.hpp"
#include "qhpc/hwd.hpp"
#include "qhpc/midware.hpp"
#include "qhpc/registry.hpp"
#include "qhpc/types.hpp"

namespace qhpc {

/// Convex weights over the four QSS terms. Must sum to 1 (within 1e-9).
struct QssWeights {
  double w_fidelity = 0.4;
  double w_connectivity = 0.2;
  double w_queue = 0.2;
  double w_latency = 0.2;

  /// Throws DomainError when a weight is negative or the sum is off 1.
  void validate() const;

  /// Scale-free construction: divides by the sum.
  static QssWeights normalized(double f, double c, double q, double l);
};

/// Normalization constants for the wait and latency terms; scenario-global.
struct QssNorms {
  double max_wait_s = 900.0;
  double max_latency_s = 0.1;
};

struct QssBreakdown {
  double fidelity_term = 0.0;
  double connectivity_term = 0.0;
  double queue_term = 0.0;
  double latency_term = 0.0;
  double total = 0.0;
  bool feasible = false;  // capacity and connectivity cuts passed
};

/// Score one candidate device for a demand. Infeasible candidates (too few
/// qubits, or connectivity cannot embed) keep their per-term values but have
/// total forced to 0 and feasible=false. Throws NoQpuError for records
/// without a QPU.
QssBreakdown qss(const ResourceRecord& candidate, const QuantumDescriptor& demand,
                 double queue_wait_s, const QssWeights& weights,
                 const QssNorms& norms, const FabricConfig& fabric);

/// Virtual QPU device token: the selection context frozen at issuance.
struct QpuToken {
  std::string token_id;
  std::string resource_id;
  double issued_at_s = 0.0;
  CalibrationProfile calibration_snapshot;
  double expires_at_s = 0.0;
};

struct ClassicalAllocation {
  std::string resource_id;
  int cores = 0;
  int gpus = 0;
  double memory_gb = 0.0;
};

/// One placement produced by a scheduling pass.
struct ScheduleDecision {
  std::string job_id;
  CoschedMode mode = CoschedMode::simultaneous;
  ClassicalAllocation classical_allocation;
  std::optional<QpuToken> qpu_token;
  double start_time_s = 0.0;
  FallbackAction fallback_taken = FallbackAction::none;

  // Execution parameters derived at placement time.
  double shot_multiplier = 1.0;         // mitigation multiplier
  int optimized_depth = 0;              // descriptor depth after compilation
  double compile_time_s = 0.0;          // charged before the first task
  Mitigation mitigation = Mitigation::none;
};

/// Scheduler-facing view of one pending job.
struct PendingJob {
  std::string job_id;
  int priority = 0;
  double submit_s = 0.0;
  ClassicalDescriptor classical;
  const QuantumDescriptor* quantum = nullptr;  // null: purely classical
  CoschedMode mode_hint = CoschedMode::auto_select;
  bool has_latency_critical = false;
  bool has_batches = false;
  // (shots, depth) of each QPU node; drives the mean-phase mode rule.
  std::vector<std::pair<std::int64_t, int>> qpu_work;
};

/// Fair-share order: priority descending, then submit time, then job id.
bool fair_share_less(const PendingJob& a, const PendingJob& b);

struct ResourceUsage {
  int cores_allocated = 0;
  int gpus_allocated = 0;
  double memory_allocated_gb = 0.0;
};

/// Live cluster occupancy. Mutated only by the simulation loop; the
/// scheduler reads a consistent snapshot.
class ClusterState {
 public:
  ClusterState() = default;
  explicit ClusterState(const std::vector<ResourceRecord>& records);

  struct ActiveJob {
    std::string job_id;
    ClassicalAllocation alloc;
    double declared_end_s = 0.0;  // start + walltime, reservation estimate
    bool cores_released = false;  // interleaved: cores handed back mid-job
  };

  // -- mutations (simulation loop only) --
  void start_job(const ScheduleDecision& d, double walltime_s);
  void end_job(const std::string& job_id);
  void release_cores(const std::string& job_id);
  void reacquire_cores(const std::string& job_id);
  /// Exclusive device occupancy (a phase or a whole-job hold).
  void occupy_device(const std::string& device_id, const std::string& job_id,
                     double until_s);
  void vacate_device(const std::string& device_id, const std::string& job_id);
  /// Extend a device's expected-busy horizon without holder semantics;
  /// used for pass-local what-if probing.
  void raise_device_busy(const std::string& device_id, double until_s);

  // -- queries --
  bool fits_now(const std::string& resource_id, int cores, int gpus,
                double memory_gb) const;
  int free_cores(const std::string& resource_id) const;
  double device_busy_until(const std::string& device_id, double now_s) const;
  const std::string* device_holder(const std::string& device_id) const;
  const std::vector<ActiveJob>& active_jobs() const { return active_; }
  const std::map<std::string, ResourceUsage>& usage() const { return usage_; }

  /// Conservation invariant: allocated <= capacity everywhere. Throws
  /// InvariantViolation on violation.
  void check_conservation() const;

 private:
  struct Capacity {
    Tier tier = Tier::r1;
    int cpu_cores = 0;
    int gpu_count = 0;
    double memory_gb = 0.0;
    bool has_qpu = false;
  };

  std::map<std::string, Capacity> capacity_;
  std::map<std::string, ResourceUsage> usage_;
  std::vector<ActiveJob> active_;
  struct DeviceState {
    std::string holder;
    double busy_until_s = 0.0;
  };
  std::map<std::string, DeviceState> devices_;

  friend class Scheduler;
};

struct QpuSelection {
  std::string resource_id;
  QssBreakdown breakdown;
};

/// Calibration-aware device choice. The modality preference list is a strict
/// tiering: any feasible device of an earlier listed modality beats every
/// later one. Within a modality tier the QSS total decides, ties broken by
/// lexicographic resource_id. Returns nullopt when no candidate is feasible.
std::optional<QpuSelection> select_qpu(const ResourceRegistry& registry,
                                       const QuantumDescriptor& demand,
                                       const QssWeights& weights,
                                       const QssNorms& norms,
                                       const FabricConfig& fabric,
                                       const ClusterState& state, double now_s);

/// Full ranking that select_qpu chooses from, best first. Used by the
/// submission front-end to show candidates.
std::vector<QpuSelection> rank_qpus(const ResourceRegistry& registry,
                                    const QuantumDescriptor& demand,
                                    const QssWeights& weights, const QssNorms& norms,
                                    const FabricConfig& fabric,
                                    const ClusterState& state, double now_s);

/// Scarcity routing when no feasible QPU exists right now.
FallbackAction choose_fallback(const QuantumDescriptor& demand,
                               const ResourceRegistry& registry,
                               const MidwareConfig& midware);

/// The policy engine: QSS-based selection, fair-share order with
/// reservation-respecting conservative backfill, per-job mode assignment,
/// fallback routing. A pure function of its inputs.
class Scheduler {
 public:
  Scheduler(const SimConfig& cfg) : cfg_(cfg) {
    weights_ = QssWeights{cfg.policy.w_fidelity, cfg.policy.w_connectivity,
                          cfg.policy.w_queue, cfg.policy.w_latency};
    weights_.validate();
    norms_ = QssNorms{cfg.policy.max_wait_s, cfg.policy.max_latency_s};
  }

  /// One scheduling pass. Jobs it cannot start are simply absent from the
  /// result (they stay pending); queued-fallback markers are reported via
  /// `queued_out` so the caller can trace them once.
  std::vector<ScheduleDecision> schedule_step(
      const std::vector<PendingJob>& pending, const ResourceRegistry& registry,
      const ClusterState& state, double now_s,
      std::vector<std::string>* queued_out = nullptr) const;

  const QssWeights& weights() const { return weights_; }
  const QssNorms& norms() const { return norms_; }

 private:
  struct Placement {
    ScheduleDecision decision;
    bool ok = false;
  };

  Placement try_place(const PendingJob& job, const ResourceRegistry& registry,
                      const ClusterState& scratch, double now_s,
                      bool* wants_queue) const;

  std::optional<double> earliest_start(const PendingJob& job,
                                       const ResourceRegistry& registry,
                                       const ClusterState& state,
                                       double now_s) const;

  CoschedMode resolve_mode(const PendingJob& job, double mean_phase_s) const;

  SimConfig cfg_;
  QssWeights weights_;
  QssNorms norms_;
};

}  // namespace qhpc
