#include "qhpc/hwd.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "qhpc/doc.hpp"
#include "qhpc/errors.hpp"

namespace qhpc {

namespace {

const DocNode& require_scalar(const DocNode& n, const std::string& path) {
  if (n.kind != DocNode::Kind::scalar)
    throw ValidationError(path, "expected a scalar value", n.line);
  return n;
}

std::int64_t parse_int(const DocNode& n, const std::string& path) {
  require_scalar(n, path);
  std::int64_t v = 0;
  const std::string& s = n.scalar;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError(path, "expected an integer, got '" + s + "'", n.line);
  return v;
}

double parse_num(const DocNode& n, const std::string& path) {
  require_scalar(n, path);
  double v = 0;
  const std::string& s = n.scalar;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError(path, "expected a number, got '" + s + "'", n.line);
  if (!std::isfinite(v))
    throw ValidationError(path, "number must be finite", n.line);
  return v;
}

void reject_unknown_keys(const DocNode& map, const std::set<std::string>& known,
                         const std::string& prefix) {
  for (const auto& [key, value] : map.entries) {
    if (!known.contains(key))
      throw ValidationError(prefix + key, "unknown key", value.line);
  }
}

ClassicalDescriptor parse_classical(const DocNode& n, const HwdLimits& limits) {
  if (n.kind != DocNode::Kind::map)
    throw ValidationError("classical", "expected a map", n.line);
  reject_unknown_keys(
      n, {"cpu_cores", "gpu_count", "memory_gb", "walltime_s", "mpi_ranks"},
      "classical.");

  ClassicalDescriptor c;
  const DocNode* f = n.find("cpu_cores");
  if (!f) throw ValidationError("classical.cpu_cores", "required key missing", n.line);
  c.cpu_cores = static_cast<int>(parse_int(*f, "classical.cpu_cores"));
  if (c.cpu_cores < 1)
    throw ValidationError("classical.cpu_cores", "must be >= 1", f->line);
  if (c.cpu_cores > limits.max_cpu_cores)
    throw ValidationError("classical.cpu_cores", "exceeds cluster maximum", f->line);

  if ((f = n.find("gpu_count"))) {
    c.gpu_count = static_cast<int>(parse_int(*f, "classical.gpu_count"));
    if (c.gpu_count < 0)
      throw ValidationError("classical.gpu_count", "must be >= 0", f->line);
    if (c.gpu_count > limits.max_gpu_count)
      throw ValidationError("classical.gpu_count", "exceeds cluster maximum", f->line);
  }

  f = n.find("memory_gb");
  if (!f) throw ValidationError("classical.memory_gb", "required key missing", n.line);
  c.memory_gb = parse_num(*f, "classical.memory_gb");
  if (c.memory_gb <= 0)
    throw ValidationError("classical.memory_gb", "must be > 0", f->line);
  if (c.memory_gb > limits.max_memory_gb)
    throw ValidationError("classical.memory_gb", "exceeds cluster maximum", f->line);

  f = n.find("walltime_s");
  if (!f) throw ValidationError("classical.walltime_s", "required key missing", n.line);
  c.walltime_s = parse_num(*f, "classical.walltime_s");
  if (c.walltime_s <= 0)
    throw ValidationError("classical.walltime_s", "must be > 0", f->line);
  if (c.walltime_s > limits.max_walltime_s)
    throw ValidationError("classical.walltime_s", "exceeds cluster maximum", f->line);

  f = n.find("mpi_ranks");
  if (!f) throw ValidationError("classical.mpi_ranks", "required key missing", n.line);
  c.mpi_ranks = static_cast<int>(parse_int(*f, "classical.mpi_ranks"));
  if (c.mpi_ranks < 1)
    throw ValidationError("classical.mpi_ranks", "must be >= 1", f->line);
  if (c.mpi_ranks > limits.max_mpi_ranks)
    throw ValidationError("classical.mpi_ranks", "exceeds cluster maximum", f->line);

  return c;
}

QuantumDescriptor parse_quantum(const DocNode& n, const HwdLimits& limits) {
  if (n.kind != DocNode::Kind::map)
    throw ValidationError("quantum", "expected a map", n.line);
  reject_unknown_keys(n,
                      {"qubits", "connectivity", "shots", "confidence", "epsilon",
                       "modalities", "depth", "circuit", "fallback"},
                      "quantum.");

  QuantumDescriptor q;
  const DocNode* f = n.find("qubits");
  if (!f) throw ValidationError("quantum.qubits", "required key missing", n.line);
  q.qubit_count = static_cast<int>(parse_int(*f, "quantum.qubits"));
  if (q.qubit_count < 1)
    throw ValidationError("quantum.qubits", "must be >= 1", f->line);

  f = n.find("connectivity");
  if (!f) throw ValidationError("quantum.connectivity", "required key missing", n.line);
  require_scalar(*f, "quantum.connectivity");
  if (!connectivity_from_string(f->scalar, q.connectivity))
    throw ValidationError("quantum.connectivity",
                          "unknown connectivity '" + f->scalar + "'", f->line);

  const DocNode* shots = n.find("shots");
  const DocNode* conf = n.find("confidence");
  if (shots && conf)
    throw ValidationError("quantum.shots",
                          "shots and confidence are mutually exclusive",
                          shots->line);
  if (!shots && !conf)
    throw ValidationError("quantum.shots",
                          "exactly one of shots or confidence is required",
                          n.line);
  if (shots) {
    q.shot_budget = parse_int(*shots, "quantum.shots");
    if (*q.shot_budget < 1)
      throw ValidationError("quantum.shots", "must be >= 1", shots->line);
  } else {
    q.target_confidence = parse_num(*conf, "quantum.confidence");
    if (!(*q.target_confidence > 0.0 && *q.target_confidence < 1.0))
      throw ValidationError("quantum.confidence", "must lie in (0, 1)", conf->line);
  }

  if ((f = n.find("epsilon"))) {
    if (!conf)
      throw ValidationError("quantum.epsilon",
                            "epsilon is only meaningful with confidence", f->line);
    q.epsilon = parse_num(*f, "quantum.epsilon");
    if (*q.epsilon <= 0)
      throw ValidationError("quantum.epsilon", "must be > 0", f->line);
  } else if (conf) {
    q.epsilon = limits.default_epsilon;
  }

  f = n.find("modalities");
  if (!f) throw ValidationError("quantum.modalities", "required key missing", n.line);
  if (f->kind != DocNode::Kind::seq)
    throw ValidationError("quantum.modalities", "expected a list", f->line);
  if (f->items.empty())
    throw ValidationError("quantum.modalities", "must be non-empty", f->line);
  for (const DocNode& item : f->items) {
    require_scalar(item, "quantum.modalities");
    Modality m;
    if (!modality_from_string(item.scalar, m))
      throw ValidationError("quantum.modalities",
                            "unknown modality '" + item.scalar + "'", item.line);
    q.modality_preference.push_back(m);
  }
  for (size_t i = 0; i + 1 < q.modality_preference.size(); ++i) {
    if (q.modality_preference[i] == Modality::best_available)
      throw ValidationError("quantum.modalities",
                            "best_available must be the last entry", f->line);
  }

  f = n.find("depth");
  if (!f) throw ValidationError("quantum.depth", "required key missing", n.line);
  q.circuit_depth = static_cast<int>(parse_int(*f, "quantum.depth"));
  if (q.circuit_depth < 1)
    throw ValidationError("quantum.depth", "must be >= 1", f->line);

  if ((f = n.find("circuit"))) {
    require_scalar(*f, "quantum.circuit");
    q.circuit_text = f->scalar;
  }

  f = n.find("fallback");
  if (!f) throw ValidationError("quantum.fallback", "required key missing", n.line);
  require_scalar(*f, "quantum.fallback");
  if (!fallback_policy_from_string(f->scalar, q.fallback_policy))
    throw ValidationError("quantum.fallback",
                          "unknown fallback policy '" + f->scalar + "'", f->line);

  return q;
}

}  // namespace

HybridWorkloadDescriptor parse_hwd(std::string_view text, const HwdLimits& limits) {
  DocNode root = parse_document(text);
  reject_unknown_keys(root, {"job_id", "priority", "mode", "classical", "quantum"},
                      "");

  HybridWorkloadDescriptor d;
  const DocNode* f = root.find("job_id");
  if (!f) throw ValidationError("job_id", "required key missing", root.line);
  require_scalar(*f, "job_id");
  d.job_id = f->scalar;
  if (!is_valid_identifier(d.job_id))
    throw ValidationError("job_id",
                          "must be non-empty over [A-Za-z0-9_.-]", f->line);

  if ((f = root.find("priority"))) {
    d.priority = static_cast<int>(parse_int(*f, "priority"));
    if (d.priority < 0) throw ValidationError("priority", "must be >= 0", f->line);
  }

  if ((f = root.find("mode"))) {
    require_scalar(*f, "mode");
    if (!mode_from_string(f->scalar, d.mode_hint))
      throw ValidationError("mode", "unknown mode '" + f->scalar + "'", f->line);
  }

  f = root.find("classical");
  if (!f) throw ValidationError("classical", "required key missing", root.line);
  d.classical = parse_classical(*f, limits);

  if ((f = root.find("quantum"))) {
    d.quantum = parse_quantum(*f, limits);
  } else if (d.mode_hint != CoschedMode::auto_select) {
    throw ValidationError("mode",
                          "a co-scheduling mode requires a quantum block",
                          root.find("mode")->line);
  }

  return d;
}

std::string serialize_hwd(const HybridWorkloadDescriptor& d) {
  std::ostringstream out;
  out << "job_id: " << d.job_id << "\n";
  out << "priority: " << d.priority << "\n";
  out << "mode: " << to_string(d.mode_hint) << "\n";
  out << "classical:\n";
  out << "  cpu_cores: " << d.classical.cpu_cores << "\n";
  out << "  gpu_count: " << d.classical.gpu_count << "\n";
  out << "  memory_gb: " << format_double(d.classical.memory_gb) << "\n";
  out << "  walltime_s: " << format_double(d.classical.walltime_s) << "\n";
  out << "  mpi_ranks: " << d.classical.mpi_ranks << "\n";
  if (d.quantum) {
    const QuantumDescriptor& q = *d.quantum;
    out << "quantum:\n";
    out << "  qubits: " << q.qubit_count << "\n";
    out << "  connectivity: " << to_string(q.connectivity) << "\n";
    if (q.shot_budget) {
      out << "  shots: " << *q.shot_budget << "\n";
    } else {
      out << "  confidence: " << format_double(*q.target_confidence) << "\n";
      out << "  epsilon: " << format_double(*q.epsilon) << "\n";
    }
    out << "  modalities:\n";
    for (Modality m : q.modality_preference) {
      out << "    - " << to_string(m) << "\n";
    }
    out << "  depth: " << q.circuit_depth << "\n";
    if (!q.circuit_text.empty()) {
      out << "  circuit: " << q.circuit_text << "\n";
    }
    out << "  fallback: " << to_string(q.fallback_policy) << "\n";
  }
  return out.str();
}

std::int64_t shots_from_confidence(double target_confidence, double epsilon) {
  if (!(target_confidence > 0.0 && target_confidence < 1.0))
    throw DomainError("target_confidence must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be > 0");
  double shots = std::ceil(std::log(2.0 / (1.0 - target_confidence)) /
                           (2.0 * epsilon * epsilon));
  if (!(shots < 9e18)) throw DomainError("shot count overflows 64 bits");
  return static_cast<std::int64_t>(shots);
}

std::int64_t effective_shot_budget(const QuantumDescriptor& q) {
  if (q.shot_budget) return *q.shot_budget;
  return shots_from_confidence(*q.target_confidence,
                               q.epsilon.value_or(0.01));
}

}  // namespace qhpc
