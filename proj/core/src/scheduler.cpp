#include "qhpc/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "qhpc/errors.hpp"

namespace qhpc {

void QssWeights::validate() const {
  if (w_fidelity < 0 || w_connectivity < 0 || w_queue < 0 || w_latency < 0)
    throw DomainError("QSS weights must be >= 0");
  double sum = w_fidelity + w_connectivity + w_queue + w_latency;
  if (std::abs(sum - 1.0) > 1e-9)
    throw DomainError("QSS weights must sum to 1");
}

QssWeights QssWeights::normalized(double f, double c, double q, double l) {
  if (f < 0 || c < 0 || q < 0 || l < 0)
    throw DomainError("QSS weights must be >= 0");
  double sum = f + c + q + l;
  if (!(sum > 0)) throw DomainError("QSS weights must not all be zero");
  return QssWeights{f / sum, c / sum, q / sum, l / sum};
}

QssBreakdown qss(const ResourceRecord& candidate, const QuantumDescriptor& demand,
                 double queue_wait_s, const QssWeights& weights,
                 const QssNorms& norms, const FabricConfig& fabric) {
  if (!candidate.qpu) throw NoQpuError("candidate has no QPU");
  if (!(norms.max_wait_s > 0) || !(norms.max_latency_s > 0))
    throw DomainError("QSS norms must be positive");
  const QpuProfile& q = *candidate.qpu;

  QssBreakdown b;
  b.fidelity_term = q.calibration.two_qubit_fidelity;
  b.connectivity_term =
      connectivity_satisfiable(demand.connectivity, q.connectivity) ? 1.0 : 0.0;
  b.queue_term = 1.0 - std::min(queue_wait_s / norms.max_wait_s, 1.0);
  double rtt = access_rtt_s(candidate.access_latency_class, fabric);
  b.latency_term = 1.0 - std::min(rtt / norms.max_latency_s, 1.0);

  b.feasible = q.qubit_count >= demand.qubit_count && b.connectivity_term > 0;
  b.total = b.feasible
                ? weights.w_fidelity * b.fidelity_term +
                      weights.w_connectivity * b.connectivity_term +
                      weights.w_queue * b.queue_term +
                      weights.w_latency * b.latency_term
                : 0.0;
  return b;
}

bool fair_share_less(const PendingJob& a, const PendingJob& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  if (a.submit_s != b.submit_s) return a.submit_s < b.submit_s;
  return a.job_id < b.job_id;
}

// ---------------------------------------------------------------------------
// ClusterState

ClusterState::ClusterState(const std::vector<ResourceRecord>& records) {
  for (const ResourceRecord& r : records) {
    capacity_[r.resource_id] =
        Capacity{r.tier, r.cpu_cores, r.gpu_count, r.memory_gb, r.qpu.has_value()};
    usage_[r.resource_id] = ResourceUsage{};
    if (r.qpu) devices_[r.resource_id] = DeviceState{};
  }
}

void ClusterState::start_job(const ScheduleDecision& d, double walltime_s) {
  const ClassicalAllocation& a = d.classical_allocation;
  if (!fits_now(a.resource_id, a.cores, a.gpus, a.memory_gb))
    throw InvariantViolation("allocation for '" + d.job_id +
                             "' would oversubscribe '" + a.resource_id + "'");
  ResourceUsage& u = usage_.at(a.resource_id);
  u.cores_allocated += a.cores;
  u.gpus_allocated += a.gpus;
  u.memory_allocated_gb += a.memory_gb;
  active_.push_back(
      ActiveJob{d.job_id, a, d.start_time_s + walltime_s, false});
  check_conservation();
}

void ClusterState::end_job(const std::string& job_id) {
  for (size_t i = 0; i < active_.size(); ++i) {
    if (active_[i].job_id != job_id) continue;
    const ActiveJob& j = active_[i];
    ResourceUsage& u = usage_.at(j.alloc.resource_id);
    if (!j.cores_released) u.cores_allocated -= j.alloc.cores;
    u.gpus_allocated -= j.alloc.gpus;
    u.memory_allocated_gb -= j.alloc.memory_gb;
    active_.erase(active_.begin() + static_cast<long>(i));
    return;
  }
  throw InvariantViolation("end_job for unknown job '" + job_id + "'");
}

void ClusterState::release_cores(const std::string& job_id) {
  for (ActiveJob& j : active_) {
    if (j.job_id != job_id) continue;
    if (j.cores_released)
      throw InvariantViolation("double core release for '" + job_id + "'");
    j.cores_released = true;
    usage_.at(j.alloc.resource_id).cores_allocated -= j.alloc.cores;
    return;
  }
  throw InvariantViolation("release_cores for unknown job '" + job_id + "'");
}

void ClusterState::reacquire_cores(const std::string& job_id) {
  for (ActiveJob& j : active_) {
    if (j.job_id != job_id) continue;
    if (!j.cores_released)
      throw InvariantViolation("reacquire without release for '" + job_id + "'");
    j.cores_released = false;
    usage_.at(j.alloc.resource_id).cores_allocated += j.alloc.cores;
    check_conservation();
    return;
  }
  throw InvariantViolation("reacquire_cores for unknown job '" + job_id + "'");
}

void ClusterState::occupy_device(const std::string& device_id,
                                 const std::string& job_id, double until_s) {
  DeviceState& d = devices_.at(device_id);
  if (!d.holder.empty() && d.holder != job_id)
    throw InvariantViolation("QPU '" + device_id + "' already held by '" +
                             d.holder + "'");
  d.holder = job_id;
  d.busy_until_s = std::max(d.busy_until_s, until_s);
}

void ClusterState::vacate_device(const std::string& device_id,
                                 const std::string& job_id) {
  DeviceState& d = devices_.at(device_id);
  if (d.holder != job_id)
    throw InvariantViolation("QPU '" + device_id + "' vacated by non-holder");
  d.holder.clear();
}

void ClusterState::raise_device_busy(const std::string& device_id,
                                     double until_s) {
  DeviceState& d = devices_.at(device_id);
  d.busy_until_s = std::max(d.busy_until_s, until_s);
}

bool ClusterState::fits_now(const std::string& resource_id, int cores, int gpus,
                            double memory_gb) const {
  auto it = capacity_.find(resource_id);
  if (it == capacity_.end()) return false;
  const Capacity& cap = it->second;
  const ResourceUsage& u = usage_.at(resource_id);
  // Memory is compared with a small slack: repeated add/subtract of job
  // memories can leave sub-nanobyte floating residue on an exact-fit node.
  return cap.cpu_cores - u.cores_allocated >= cores &&
         cap.gpu_count - u.gpus_allocated >= gpus &&
         cap.memory_gb - u.memory_allocated_gb >= memory_gb - 1e-9;
}

int ClusterState::free_cores(const std::string& resource_id) const {
  auto it = capacity_.find(resource_id);
  if (it == capacity_.end()) return 0;
  return it->second.cpu_cores - usage_.at(resource_id).cores_allocated;
}

double ClusterState::device_busy_until(const std::string& device_id,
                                       double now_s) const {
  auto it = devices_.find(device_id);
  if (it == devices_.end()) return now_s;
  return std::max(now_s, it->second.busy_until_s);
}

const std::string* ClusterState::device_holder(const std::string& device_id) const {
  auto it = devices_.find(device_id);
  if (it == devices_.end() || it->second.holder.empty()) return nullptr;
  return &it->second.holder;
}

void ClusterState::check_conservation() const {
  for (const auto& [id, cap] : capacity_) {
    const ResourceUsage& u = usage_.at(id);
    if (u.cores_allocated < 0 || u.cores_allocated > cap.cpu_cores ||
        u.gpus_allocated < 0 || u.gpus_allocated > cap.gpu_count ||
        u.memory_allocated_gb < -1e-9 ||
        u.memory_allocated_gb > cap.memory_gb + 1e-9) {
      throw InvariantViolation("capacity conservation violated on '" + id + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// Selection

namespace {

std::vector<Modality> preference_or_default(const QuantumDescriptor& demand) {
  if (!demand.modality_preference.empty()) return demand.modality_preference;
  return {Modality::best_available};
}

}  // namespace

std::vector<QpuSelection> rank_qpus(const ResourceRegistry& registry,
                                    const QuantumDescriptor& demand,
                                    const QssWeights& weights, const QssNorms& norms,
                                    const FabricConfig& fabric,
                                    const ClusterState& state, double now_s) {
  std::vector<QpuSelection> ranked;
  std::set<std::string> listed;
  for (Modality pref : preference_or_default(demand)) {
    std::vector<QpuSelection> tier;
    for (const ResourceRecord& r : registry.records()) {
      if (!r.qpu) continue;
      if (r.tier != Tier::r3 && r.tier != Tier::r4) continue;
      if (pref != Modality::best_available && r.qpu->modality != pref) continue;
      if (listed.contains(r.resource_id)) continue;
      double wait = state.device_busy_until(r.resource_id, now_s) - now_s;
      QssBreakdown b = qss(r, demand, wait, weights, norms, fabric);
      if (!b.feasible) continue;
      tier.push_back(QpuSelection{r.resource_id, b});
    }
    std::sort(tier.begin(), tier.end(),
              [](const QpuSelection& a, const QpuSelection& b) {
                if (a.breakdown.total != b.breakdown.total)
                  return a.breakdown.total > b.breakdown.total;
                return a.resource_id < b.resource_id;
              });
    for (QpuSelection& s : tier) {
      listed.insert(s.resource_id);
      ranked.push_back(std::move(s));
    }
  }
  return ranked;
}

std::optional<QpuSelection> select_qpu(const ResourceRegistry& registry,
                                       const QuantumDescriptor& demand,
                                       const QssWeights& weights,
                                       const QssNorms& norms,
                                       const FabricConfig& fabric,
                                       const ClusterState& state, double now_s) {
  std::vector<QpuSelection> ranked =
      rank_qpus(registry, demand, weights, norms, fabric, state, now_s);
  if (ranked.empty()) return std::nullopt;
  return ranked.front();
}

FallbackAction choose_fallback(const QuantumDescriptor& demand,
                               const ResourceRegistry& registry,
                               const MidwareConfig& midware) {
  if (demand.fallback_policy == FallbackPolicy::fail_degraded)
    return FallbackAction::degraded_notice;
  if (demand.fallback_policy == FallbackPolicy::emulate_on_gpu) {
    if (demand.qubit_count <= midware.emulation_qubit_cap) {
      for (const ResourceRecord& r : registry.records()) {
        if (r.tier == Tier::r2 && r.gpu_count >= 1)
          return FallbackAction::gpu_emulation;
      }
    }
    // No emulation capacity: fall through to queueing.
  }
  return FallbackAction::queued;
}

// ---------------------------------------------------------------------------
// Scheduler

CoschedMode Scheduler::resolve_mode(const PendingJob& job,
                                    double mean_phase_s) const {
  if (!job.quantum) return CoschedMode::simultaneous;
  if (job.mode_hint != CoschedMode::auto_select) return job.mode_hint;
  if (job.has_latency_critical) {
    return mean_phase_s < cfg_.policy.interleave_threshold_s
               ? CoschedMode::simultaneous
               : CoschedMode::interleaved;
  }
  if (job.has_batches) return CoschedMode::async_streaming;
  return CoschedMode::simultaneous;
}

Scheduler::Placement Scheduler::try_place(const PendingJob& job,
                                          const ResourceRegistry& registry,
                                          const ClusterState& scratch,
                                          double now_s, bool* wants_queue) const {
  Placement out;
  ScheduleDecision& d = out.decision;
  d.job_id = job.job_id;
  d.start_time_s = now_s;
  d.mode = CoschedMode::simultaneous;

  int need_gpus = job.classical.gpu_count;
  std::string preferred_resource;

  if (job.quantum) {
    std::optional<QpuSelection> sel = select_qpu(
        registry, *job.quantum, weights_, norms_, cfg_.fabric, scratch, now_s);
    if (sel) {
      const ResourceRecord* device = registry.find(sel->resource_id);
      CompilationEstimate est =
          compile_estimate(*job.quantum, *device->qpu, cfg_.midware);
      d.shot_multiplier = est.mitigation_shot_multiplier;
      d.optimized_depth = est.optimized_depth;
      d.compile_time_s = est.compile_time_s;
      d.mitigation = est.mitigation;

      double phase_sum = 0.0;
      for (const auto& [shots, depth] : job.qpu_work) {
        std::int64_t eff = static_cast<std::int64_t>(std::ceil(
            static_cast<double>(shots) * est.mitigation_shot_multiplier));
        phase_sum += qpu_exec_time_s(
            eff, transformed_depth(depth, device->qpu->connectivity, cfg_.midware),
            device->qpu->modality, cfg_.fabric);
      }
      double mean_phase =
          job.qpu_work.empty() ? 0.0
                               : phase_sum / static_cast<double>(job.qpu_work.size());
      d.mode = resolve_mode(job, mean_phase);

      if (d.mode == CoschedMode::simultaneous) {
        // Whole-job co-allocation needs the device free right now.
        if (scratch.device_busy_until(sel->resource_id, now_s) > now_s ||
            scratch.device_holder(sel->resource_id) != nullptr)
          return out;  // not placeable in this pass
      }

      d.qpu_token = QpuToken{"tok-" + job.job_id, sel->resource_id, now_s,
                             device->qpu->calibration,
                             now_s + job.classical.walltime_s};
      preferred_resource = sel->resource_id;
    } else {
      FallbackAction act = choose_fallback(*job.quantum, registry, cfg_.midware);
      if (act == FallbackAction::queued) {
        if (wants_queue) *wants_queue = true;
        return out;
      }
      d.fallback_taken = act;
      if (act == FallbackAction::gpu_emulation) need_gpus = std::max(1, need_gpus);
      d.mode = CoschedMode::simultaneous;
    }
  }

  // Classical placement over the pass-local free capacities. Co-locate with
  // the selected device when it fits; otherwise lowest tier first, then id.
  auto fits = [&](const std::string& rid) {
    return scratch.fits_now(rid, job.classical.cpu_cores, need_gpus,
                            job.classical.memory_gb);
  };

  std::string chosen;
  if (!preferred_resource.empty() && fits(preferred_resource)) {
    chosen = preferred_resource;
  } else {
    std::vector<const ResourceRecord*> order;
    for (const ResourceRecord& r : registry.records()) order.push_back(&r);
    std::sort(order.begin(), order.end(),
              [](const ResourceRecord* a, const ResourceRecord* b) {
                if (a->tier != b->tier) return a->tier < b->tier;
                return a->resource_id < b->resource_id;
              });
    for (const ResourceRecord* r : order) {
      if (fits(r->resource_id)) {
        chosen = r->resource_id;
        break;
      }
    }
  }
  if (chosen.empty()) return out;

  d.classical_allocation = ClassicalAllocation{chosen, job.classical.cpu_cores,
                                               need_gpus, job.classical.memory_gb};
  out.ok = true;
  return out;
}

std::optional<double> Scheduler::earliest_start(const PendingJob& job,
                                                const ResourceRegistry& registry,
                                                const ClusterState& state,
                                                double now_s) const {
  // Reservation estimate: allocations vacate at their declared ends
  // (start + walltime); released interleaved cores still count as taken
  // since their owner reclaims them.
  int need_gpus = job.classical.gpu_count;
  bool needs_free_device = false;
  std::string device_id;
  if (job.quantum) {
    std::optional<QpuSelection> sel = select_qpu(
        registry, *job.quantum, weights_, norms_, cfg_.fabric, state, now_s);
    if (sel) {
      const ResourceRecord* device = registry.find(sel->resource_id);
      CompilationEstimate est =
          compile_estimate(*job.quantum, *device->qpu, cfg_.midware);
      double phase_sum = 0.0;
      for (const auto& [shots, depth] : job.qpu_work) {
        std::int64_t eff = static_cast<std::int64_t>(std::ceil(
            static_cast<double>(shots) * est.mitigation_shot_multiplier));
        phase_sum += qpu_exec_time_s(
            eff, transformed_depth(depth, device->qpu->connectivity, cfg_.midware),
            device->qpu->modality, cfg_.fabric);
      }
      double mean_phase =
          job.qpu_work.empty() ? 0.0
                               : phase_sum / static_cast<double>(job.qpu_work.size());
      if (resolve_mode(job, mean_phase) == CoschedMode::simultaneous) {
        needs_free_device = true;
        device_id = sel->resource_id;
      }
    } else {
      FallbackAction act = choose_fallback(*job.quantum, registry, cfg_.midware);
      if (act == FallbackAction::queued) return std::nullopt;  // waits for a QPU
      if (act == FallbackAction::gpu_emulation) need_gpus = std::max(1, need_gpus);
    }
  }

  std::set<double> times{now_s};
  for (const ClusterState::ActiveJob& a : state.active_jobs()) {
    if (a.declared_end_s > now_s) times.insert(a.declared_end_s);
  }
  if (needs_free_device) {
    times.insert(state.device_busy_until(device_id, now_s));
  }

  for (double t : times) {
    if (needs_free_device && state.device_busy_until(device_id, now_s) > t)
      continue;
    // Capacity at time t under the declared-end model.
    bool found = false;
    for (const ResourceRecord& r : registry.records()) {
      int cores = r.cpu_cores;
      int gpus = r.gpu_count;
      double mem = r.memory_gb;
      for (const ClusterState::ActiveJob& a : state.active_jobs()) {
        if (a.alloc.resource_id != r.resource_id) continue;
        if (a.declared_end_s <= t) continue;
        cores -= a.alloc.cores;
        gpus -= a.alloc.gpus;
        mem -= a.alloc.memory_gb;
      }
      if (cores >= job.classical.cpu_cores && gpus >= need_gpus &&
          mem >= job.classical.memory_gb) {
        found = true;
        break;
      }
    }
    if (found) return t;
  }
  return std::nullopt;  // never startable under current commitments
}

std::vector<ScheduleDecision> Scheduler::schedule_step(
    const std::vector<PendingJob>& pending, const ResourceRegistry& registry,
    const ClusterState& state, double now_s,
    std::vector<std::string>* queued_out) const {
  std::vector<PendingJob> order = pending;
  std::sort(order.begin(), order.end(), fair_share_less);

  // Decisions accumulate into a pass-local copy of the live state, so both
  // later placements and the head's reservation see them.
  ClusterState scratch = state;

  std::vector<ScheduleDecision> decisions;
  std::optional<double> head_reservation;

  for (const PendingJob& job : order) {
    bool wants_queue = false;
    Placement p = try_place(job, registry, scratch, now_s, &wants_queue);
    if (wants_queue) {
      if (queued_out) queued_out->push_back(job.job_id);
      continue;  // stays pending until a QPU frees up or appears
    }
    if (p.ok) {
      bool admit = !head_reservation.has_value();
      if (!admit) {
        // Conservative backfill: must not be able to delay the head's
        // reservation, i.e. it finishes (by declared walltime) first.
        admit = cfg_.policy.backfill &&
                now_s + job.classical.walltime_s <= *head_reservation;
      }
      if (admit) {
        const ScheduleDecision& d = p.decision;
        scratch.start_job(d, job.classical.walltime_s);
        if (d.qpu_token && d.mode == CoschedMode::simultaneous) {
          scratch.occupy_device(d.qpu_token->resource_id, d.job_id,
                                now_s + job.classical.walltime_s);
        }
        decisions.push_back(p.decision);
        continue;
      }
    }
    if (!head_reservation) {
      // First job that cannot start now becomes the head and reserves,
      // seeing every allocation granted so far in this pass.
      std::optional<double> t = earliest_start(job, registry, scratch, now_s);
      if (t) head_reservation = t;
      // A job that can never start under current commitments blocks nothing.
    }
  }
  return decisions;
}

}  // namespace qhpc
