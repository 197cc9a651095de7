#include "qhpc/registry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qhpc/errors.hpp"

namespace qhpc {

void validate_record(const ResourceRecord& r) {
  if (!is_valid_identifier(r.resource_id))
    throw ValidationError("resource_id", "must be non-empty over [A-Za-z0-9_.-]");
  if (r.cpu_cores < 0 || r.gpu_count < 0 || r.memory_gb < 0)
    throw ValidationError(r.resource_id, "capacities must be >= 0");

  switch (r.tier) {
    case Tier::r1:
      if (r.gpu_count != 0)
        throw ValidationError(r.resource_id, "R1 must have gpu_count = 0");
      if (r.qpu)
        throw ValidationError(r.resource_id, "R1 must not carry a QPU profile");
      break;
    case Tier::r2:
      if (r.gpu_count < 1)
        throw ValidationError(r.resource_id, "R2 must have gpu_count >= 1");
      if (r.qpu)
        throw ValidationError(r.resource_id, "R2 must not carry a QPU profile");
      break;
    case Tier::r3:
      if (!r.qpu)
        throw ValidationError(r.resource_id, "R3 requires a QPU profile");
      if (r.access_latency_class != LinkKind::intra_node)
        throw ValidationError(r.resource_id, "R3 access class must be intra_node");
      break;
    case Tier::r4:
      if (!r.qpu)
        throw ValidationError(r.resource_id, "R4 requires a QPU profile");
      if (r.access_latency_class != LinkKind::wan)
        throw ValidationError(r.resource_id, "R4 access class must be wan");
      break;
  }

  if (r.qpu) {
    const QpuProfile& q = *r.qpu;
    if (q.modality == Modality::best_available)
      throw ValidationError(r.resource_id, "QPU modality cannot be best_available");
    if (q.qubit_count < 1)
      throw ValidationError(r.resource_id, "QPU qubit_count must be >= 1");
    const CalibrationProfile& c = q.calibration;
    if (!(c.two_qubit_fidelity > 0.0 && c.two_qubit_fidelity <= 1.0))
      throw ValidationError(r.resource_id, "two_qubit_fidelity must lie in (0, 1]");
    if (!(c.nominal_fidelity > 0.0 && c.nominal_fidelity <= 1.0))
      throw ValidationError(r.resource_id, "nominal_fidelity must lie in (0, 1]");
    if (!(c.coherence_time_us > 0.0))
      throw ValidationError(r.resource_id, "coherence_time_us must be > 0");
  }
}

bool connectivity_satisfiable(Connectivity request, Connectivity hardware) {
  switch (request) {
    case Connectivity::linear:
      return true;
    case Connectivity::ring:
      return hardware == Connectivity::ring || hardware == Connectivity::grid ||
             hardware == Connectivity::all_to_all;
    case Connectivity::heavy_hex:
      return hardware == Connectivity::heavy_hex ||
             hardware == Connectivity::grid ||
             hardware == Connectivity::all_to_all;
    case Connectivity::grid:
      return hardware == Connectivity::grid ||
             hardware == Connectivity::all_to_all;
    case Connectivity::all_to_all:
      return hardware == Connectivity::all_to_all;
  }
  return false;
}

CalibrationWalk::StepResult CalibrationWalk::step(const CalibrationProfile& current,
                                                  double now_s) {
  if (now_s < current.timestamp_s)
    throw StaleClockError("poll time precedes calibration timestamp");

  StepResult out;
  out.profile = current;

  // Recalibration boundaries are the multiples of the recalibration period;
  // a boundary in (prev, now] restores nominal fidelity before noise.
  double period = drift_.recalibration_period_s;
  if (period > 0) {
    double prev_k = std::floor(current.timestamp_s / period);
    double now_k = std::floor(now_s / period);
    if (now_k > prev_k) {
      out.profile.two_qubit_fidelity = current.nominal_fidelity;
      out.recalibrated = true;
    }
  }

  double noise = sampler_.next() * drift_.step_sigma;
  double f = out.profile.two_qubit_fidelity + noise;
  f = std::min(1.0, std::max(drift_.fidelity_floor, f));
  out.profile.two_qubit_fidelity = f;
  out.profile.timestamp_s = now_s;
  return out;
}

ResourceRegistry::ResourceRegistry(std::vector<ResourceRecord> records,
                                   std::uint64_t seed, const DriftConfig& drift)
    : records_(std::move(records)) {
  std::sort(records_.begin(), records_.end(),
            [](const ResourceRecord& a, const ResourceRecord& b) {
              return a.resource_id < b.resource_id;
            });
  for (size_t i = 0; i + 1 < records_.size(); ++i) {
    if (records_[i].resource_id == records_[i + 1].resource_id)
      throw ValidationError(records_[i].resource_id, "duplicate resource_id");
  }
  for (const ResourceRecord& r : records_) {
    validate_record(r);
    if (r.qpu) {
      walks_.emplace(r.resource_id,
                     CalibrationWalk(seed_mix(seed, r.resource_id), drift));
    }
  }
}

std::vector<PollResult> ResourceRegistry::poll_all(double now_s) {
  std::vector<PollResult> out;
  for (ResourceRecord& r : records_) {
    if (!r.qpu) continue;
    auto it = walks_.find(r.resource_id);
    CalibrationWalk::StepResult step = it->second.step(r.qpu->calibration, now_s);
    r.qpu->calibration = step.profile;
    out.push_back(PollResult{r.resource_id, step.profile, step.recalibrated});
  }
  return out;
}

PollResult ResourceRegistry::poll(const std::string& resource_id, double now_s) {
  for (ResourceRecord& r : records_) {
    if (r.resource_id != resource_id) continue;
    if (!r.qpu) throw DomainError("resource '" + resource_id + "' has no QPU");
    auto it = walks_.find(resource_id);
    CalibrationWalk::StepResult step = it->second.step(r.qpu->calibration, now_s);
    r.qpu->calibration = step.profile;
    return PollResult{resource_id, step.profile, step.recalibrated};
  }
  throw DomainError("unknown resource '" + resource_id + "'");
}

std::vector<ResourceRecord> ResourceRegistry::query(const QueryPredicate& p) const {
  std::vector<ResourceRecord> out;
  bool any_modality = p.modalities.empty() ||
                      std::find(p.modalities.begin(), p.modalities.end(),
                                Modality::best_available) != p.modalities.end();
  for (const ResourceRecord& r : records_) {
    if (!p.tier_set.empty() && !p.tier_set.contains(r.tier)) continue;
    if (p.min_qubits > 0) {
      if (!r.qpu || r.qpu->qubit_count < p.min_qubits) continue;
    }
    if (p.connectivity) {
      if (!r.qpu || !connectivity_satisfiable(*p.connectivity, r.qpu->connectivity))
        continue;
    }
    if (!any_modality) {
      if (!r.qpu) continue;
      if (std::find(p.modalities.begin(), p.modalities.end(), r.qpu->modality) ==
          p.modalities.end())
        continue;
    }
    out.push_back(r);
  }
  return out;  // records_ is id-sorted already
}

const ResourceRecord* ResourceRegistry::find(const std::string& resource_id) const {
  for (const ResourceRecord& r : records_) {
    if (r.resource_id == resource_id) return &r;
  }
  return nullptr;
}

std::string ResourceRegistry::snapshot_text() const {
  std::ostringstream out;
  for (const ResourceRecord& r : records_) {
    out << "resource " << r.resource_id << ' ' << to_string(r.tier) << ' '
        << r.cpu_cores << ' ' << r.gpu_count << ' ' << format_double(r.memory_gb)
        << ' ' << to_string(r.access_latency_class);
    if (r.qpu) {
      out << " qpu " << to_string(r.qpu->modality) << ' ' << r.qpu->qubit_count
          << ' ' << to_string(r.qpu->connectivity) << ' '
          << format_double(r.qpu->calibration.two_qubit_fidelity) << ' '
          << format_double(r.qpu->calibration.coherence_time_us) << ' '
          << format_double(r.qpu->calibration.timestamp_s) << ' '
          << format_double(r.qpu->calibration.nominal_fidelity);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace qhpc
