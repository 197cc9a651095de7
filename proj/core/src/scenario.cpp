#include "qhpc/scenario.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qhpc/doc.hpp"
#include "qhpc/errors.hpp"

namespace qhpc {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / p).string();
}

std::int64_t get_int(const DocNode& n, const std::string& path) {
  if (n.kind != DocNode::Kind::scalar)
    throw ValidationError(path, "expected a scalar", n.line);
  std::int64_t v = 0;
  auto res = std::from_chars(n.scalar.data(), n.scalar.data() + n.scalar.size(), v);
  if (res.ec != std::errc() || res.ptr != n.scalar.data() + n.scalar.size())
    throw ValidationError(path, "expected an integer, got '" + n.scalar + "'",
                          n.line);
  return v;
}

double get_num(const DocNode& n, const std::string& path) {
  if (n.kind != DocNode::Kind::scalar)
    throw ValidationError(path, "expected a scalar", n.line);
  double v = 0;
  auto res = std::from_chars(n.scalar.data(), n.scalar.data() + n.scalar.size(), v);
  if (res.ec != std::errc() || res.ptr != n.scalar.data() + n.scalar.size())
    throw ValidationError(path, "expected a number, got '" + n.scalar + "'",
                          n.line);
  return v;
}

bool get_bool(const DocNode& n, const std::string& path) {
  if (n.kind == DocNode::Kind::scalar) {
    if (n.scalar == "true" || n.scalar == "on") return true;
    if (n.scalar == "false" || n.scalar == "off") return false;
  }
  throw ValidationError(path, "expected true/false", n.line);
}

void known_keys(const DocNode& map, const std::set<std::string>& known,
                const std::string& prefix) {
  for (const auto& [key, value] : map.entries) {
    if (!known.contains(key))
      throw ValidationError(prefix + key, "unknown key", value.line);
  }
}

// Re-emit a parsed subtree as document text, so inline HWD blocks go through
// the same strict parser as .hwd files.
void emit_doc(const DocNode& n, int indent, std::ostream& out) {
  std::string pad(static_cast<size_t>(indent), ' ');
  switch (n.kind) {
    case DocNode::Kind::map:
      for (const auto& [key, value] : n.entries) {
        if (value.kind == DocNode::Kind::scalar) {
          out << pad << key << ": " << value.scalar << "\n";
        } else {
          out << pad << key << ":\n";
          emit_doc(value, indent + 2, out);
        }
      }
      break;
    case DocNode::Kind::seq:
      for (const DocNode& item : n.items) {
        if (item.kind == DocNode::Kind::scalar) {
          out << pad << "- " << item.scalar << "\n";
        } else if (item.kind == DocNode::Kind::map && !item.entries.empty()) {
          const auto& [k0, v0] = item.entries.front();
          if (v0.kind != DocNode::Kind::scalar)
            throw ValidationError(k0, "nested block cannot start a list item",
                                  v0.line);
          out << pad << "- " << k0 << ": " << v0.scalar << "\n";
          for (size_t i = 1; i < item.entries.size(); ++i) {
            const auto& [k, v] = item.entries[i];
            if (v.kind == DocNode::Kind::scalar) {
              out << pad << "  " << k << ": " << v.scalar << "\n";
            } else {
              out << pad << "  " << k << ":\n";
              emit_doc(v, indent + 4, out);
            }
          }
        }
      }
      break;
    case DocNode::Kind::scalar:
      out << pad << n.scalar << "\n";
      break;
  }
}

void load_policy(const DocNode& n, SimConfig& cfg) {
  known_keys(n,
             {"weights", "max_wait_s", "max_latency_s", "interleave_threshold_s",
              "backfill"},
             "policy.");
  if (const DocNode* w = n.find("weights")) {
    known_keys(*w, {"fidelity", "connectivity", "queue", "latency"},
               "policy.weights.");
    if (const DocNode* f = w->find("fidelity"))
      cfg.policy.w_fidelity = get_num(*f, "policy.weights.fidelity");
    if (const DocNode* f = w->find("connectivity"))
      cfg.policy.w_connectivity = get_num(*f, "policy.weights.connectivity");
    if (const DocNode* f = w->find("queue"))
      cfg.policy.w_queue = get_num(*f, "policy.weights.queue");
    if (const DocNode* f = w->find("latency"))
      cfg.policy.w_latency = get_num(*f, "policy.weights.latency");
  }
  if (const DocNode* f = n.find("max_wait_s"))
    cfg.policy.max_wait_s = get_num(*f, "policy.max_wait_s");
  if (const DocNode* f = n.find("max_latency_s"))
    cfg.policy.max_latency_s = get_num(*f, "policy.max_latency_s");
  if (const DocNode* f = n.find("interleave_threshold_s"))
    cfg.policy.interleave_threshold_s = get_num(*f, "policy.interleave_threshold_s");
  if (const DocNode* f = n.find("backfill"))
    cfg.policy.backfill = get_bool(*f, "policy.backfill");
}

void load_drift(const DocNode& n, SimConfig& cfg) {
  known_keys(n,
             {"poll_period_s", "recalibration_period_s", "step_sigma",
              "fidelity_floor"},
             "drift.");
  if (const DocNode* f = n.find("poll_period_s"))
    cfg.drift.poll_period_s = get_num(*f, "drift.poll_period_s");
  if (const DocNode* f = n.find("recalibration_period_s"))
    cfg.drift.recalibration_period_s = get_num(*f, "drift.recalibration_period_s");
  if (const DocNode* f = n.find("step_sigma"))
    cfg.drift.step_sigma = get_num(*f, "drift.step_sigma");
  if (const DocNode* f = n.find("fidelity_floor"))
    cfg.drift.fidelity_floor = get_num(*f, "drift.fidelity_floor");

  if (!(cfg.drift.poll_period_s > 0))
    throw ValidationError("drift.poll_period_s", "must be > 0", n.line);
  if (!(cfg.drift.recalibration_period_s > 0))
    throw ValidationError("drift.recalibration_period_s", "must be > 0", n.line);
  if (cfg.drift.step_sigma < 0)
    throw ValidationError("drift.step_sigma", "must be >= 0", n.line);
  if (!(cfg.drift.fidelity_floor > 0 && cfg.drift.fidelity_floor <= 1))
    throw ValidationError("drift.fidelity_floor", "must lie in (0, 1]", n.line);
}

void load_link(const DocNode& n, const std::string& path, LinkClass& link) {
  known_keys(n, {"rtt_s", "bandwidth_bytes_per_s"}, path + ".");
  if (const DocNode* f = n.find("rtt_s")) link.rtt_s = get_num(*f, path + ".rtt_s");
  if (const DocNode* f = n.find("bandwidth_bytes_per_s"))
    link.bandwidth_bytes_per_s = get_num(*f, path + ".bandwidth_bytes_per_s");
}

void load_fabric(const DocNode& n, SimConfig& cfg) {
  known_keys(n,
             {"intra_node", "inter_node", "wan", "gate_time",
              "per_shot_overhead_s"},
             "fabric.");
  if (const DocNode* f = n.find("intra_node"))
    load_link(*f, "fabric.intra_node", cfg.fabric.intra_node);
  if (const DocNode* f = n.find("inter_node"))
    load_link(*f, "fabric.inter_node", cfg.fabric.inter_node);
  if (const DocNode* f = n.find("wan")) load_link(*f, "fabric.wan", cfg.fabric.wan);
  if (const DocNode* g = n.find("gate_time")) {
    known_keys(*g, {"superconducting", "trapped_ion", "neutral_atom", "photonic"},
               "fabric.gate_time.");
    if (const DocNode* f = g->find("superconducting"))
      cfg.fabric.gate_time_superconducting_s =
          get_num(*f, "fabric.gate_time.superconducting");
    if (const DocNode* f = g->find("trapped_ion"))
      cfg.fabric.gate_time_trapped_ion_s = get_num(*f, "fabric.gate_time.trapped_ion");
    if (const DocNode* f = g->find("neutral_atom"))
      cfg.fabric.gate_time_neutral_atom_s =
          get_num(*f, "fabric.gate_time.neutral_atom");
    if (const DocNode* f = g->find("photonic"))
      cfg.fabric.gate_time_photonic_s = get_num(*f, "fabric.gate_time.photonic");
  }
  if (const DocNode* f = n.find("per_shot_overhead_s"))
    cfg.fabric.per_shot_overhead_s = get_num(*f, "fabric.per_shot_overhead_s");
}

void load_midware(const DocNode& n, SimConfig& cfg) {
  known_keys(n,
             {"opt_factor", "routing_overhead", "compile_c0_s", "compile_c1_s",
              "mitigation_none_threshold", "mitigation_zne_threshold",
              "zne_shot_multiplier", "pec_shot_multiplier", "flops_per_amp_layer",
              "gpu_flops_effective", "shot_sample_cost_s", "emulation_qubit_cap"},
             "midware.");
  MidwareConfig& m = cfg.midware;
  if (const DocNode* f = n.find("opt_factor")) m.opt_factor = get_num(*f, "midware.opt_factor");
  if (const DocNode* f = n.find("routing_overhead"))
    m.routing_overhead = get_num(*f, "midware.routing_overhead");
  if (const DocNode* f = n.find("compile_c0_s"))
    m.compile_c0_s = get_num(*f, "midware.compile_c0_s");
  if (const DocNode* f = n.find("compile_c1_s"))
    m.compile_c1_s = get_num(*f, "midware.compile_c1_s");
  if (const DocNode* f = n.find("mitigation_none_threshold"))
    m.mitigation_none_threshold = get_num(*f, "midware.mitigation_none_threshold");
  if (const DocNode* f = n.find("mitigation_zne_threshold"))
    m.mitigation_zne_threshold = get_num(*f, "midware.mitigation_zne_threshold");
  if (const DocNode* f = n.find("zne_shot_multiplier"))
    m.zne_shot_multiplier = get_num(*f, "midware.zne_shot_multiplier");
  if (const DocNode* f = n.find("pec_shot_multiplier"))
    m.pec_shot_multiplier = get_num(*f, "midware.pec_shot_multiplier");
  if (const DocNode* f = n.find("flops_per_amp_layer"))
    m.flops_per_amp_layer = get_num(*f, "midware.flops_per_amp_layer");
  if (const DocNode* f = n.find("gpu_flops_effective"))
    m.gpu_flops_effective = get_num(*f, "midware.gpu_flops_effective");
  if (const DocNode* f = n.find("shot_sample_cost_s"))
    m.shot_sample_cost_s = get_num(*f, "midware.shot_sample_cost_s");
  if (const DocNode* f = n.find("emulation_qubit_cap"))
    m.emulation_qubit_cap =
        static_cast<int>(get_int(*f, "midware.emulation_qubit_cap"));
}

void load_limits(const DocNode& n, SimConfig& cfg) {
  known_keys(n,
             {"max_cpu_cores", "max_gpu_count", "max_memory_gb", "max_walltime_s",
              "max_mpi_ranks", "default_epsilon"},
             "limits.");
  HwdLimits& l = cfg.limits;
  if (const DocNode* f = n.find("max_cpu_cores"))
    l.max_cpu_cores = static_cast<int>(get_int(*f, "limits.max_cpu_cores"));
  if (const DocNode* f = n.find("max_gpu_count"))
    l.max_gpu_count = static_cast<int>(get_int(*f, "limits.max_gpu_count"));
  if (const DocNode* f = n.find("max_memory_gb"))
    l.max_memory_gb = get_num(*f, "limits.max_memory_gb");
  if (const DocNode* f = n.find("max_walltime_s"))
    l.max_walltime_s = get_num(*f, "limits.max_walltime_s");
  if (const DocNode* f = n.find("max_mpi_ranks"))
    l.max_mpi_ranks = static_cast<int>(get_int(*f, "limits.max_mpi_ranks"));
  if (const DocNode* f = n.find("default_epsilon"))
    l.default_epsilon = get_num(*f, "limits.default_epsilon");
}

ResourceRecord load_resource(const DocNode& n) {
  if (n.kind != DocNode::Kind::map)
    throw ValidationError("registry", "expected a map entry", n.line);
  known_keys(n,
             {"resource_id", "tier", "cpu_cores", "gpu_count", "memory_gb",
              "access_latency_class", "qpu"},
             "registry.");
  ResourceRecord r;
  const DocNode* f = n.find("resource_id");
  if (!f) throw ValidationError("registry.resource_id", "required key missing", n.line);
  r.resource_id = f->scalar;

  f = n.find("tier");
  if (!f) throw ValidationError("registry.tier", "required key missing", n.line);
  if (!tier_from_string(f->scalar, r.tier))
    throw ValidationError("registry.tier", "unknown tier '" + f->scalar + "'",
                          f->line);

  if ((f = n.find("cpu_cores")))
    r.cpu_cores = static_cast<int>(get_int(*f, "registry.cpu_cores"));
  if ((f = n.find("gpu_count")))
    r.gpu_count = static_cast<int>(get_int(*f, "registry.gpu_count"));
  if ((f = n.find("memory_gb"))) r.memory_gb = get_num(*f, "registry.memory_gb");

  switch (r.tier) {
    case Tier::r1:
    case Tier::r2: r.access_latency_class = LinkKind::inter_node; break;
    case Tier::r3: r.access_latency_class = LinkKind::intra_node; break;
    case Tier::r4: r.access_latency_class = LinkKind::wan; break;
  }
  if ((f = n.find("access_latency_class"))) {
    if (!link_kind_from_string(f->scalar, r.access_latency_class))
      throw ValidationError("registry.access_latency_class",
                            "unknown class '" + f->scalar + "'", f->line);
  }

  if ((f = n.find("qpu"))) {
    known_keys(*f,
               {"modality", "qubit_count", "connectivity", "nominal_fidelity",
                "initial_fidelity", "coherence_time_us"},
               "registry.qpu.");
    QpuProfile q;
    const DocNode* g = f->find("modality");
    if (!g) throw ValidationError("registry.qpu.modality", "required key missing", f->line);
    if (!modality_from_string(g->scalar, q.modality))
      throw ValidationError("registry.qpu.modality",
                            "unknown modality '" + g->scalar + "'", g->line);
    g = f->find("qubit_count");
    if (!g) throw ValidationError("registry.qpu.qubit_count", "required key missing", f->line);
    q.qubit_count = static_cast<int>(get_int(*g, "registry.qpu.qubit_count"));
    g = f->find("connectivity");
    if (!g) throw ValidationError("registry.qpu.connectivity", "required key missing", f->line);
    if (!connectivity_from_string(g->scalar, q.connectivity))
      throw ValidationError("registry.qpu.connectivity",
                            "unknown connectivity '" + g->scalar + "'", g->line);
    if ((g = f->find("nominal_fidelity")))
      q.calibration.nominal_fidelity = get_num(*g, "registry.qpu.nominal_fidelity");
    q.calibration.two_qubit_fidelity = q.calibration.nominal_fidelity;
    if ((g = f->find("initial_fidelity")))
      q.calibration.two_qubit_fidelity = get_num(*g, "registry.qpu.initial_fidelity");
    if ((g = f->find("coherence_time_us")))
      q.calibration.coherence_time_us = get_num(*g, "registry.qpu.coherence_time_us");
    q.calibration.timestamp_s = 0.0;
    r.qpu = q;
  }
  validate_record(r);
  return r;
}

JobSpec load_job(const DocNode& n, const std::string& base_dir,
                 const HwdLimits& limits) {
  if (n.kind != DocNode::Kind::map)
    throw ValidationError("jobs", "expected a map entry", n.line);
  known_keys(n,
             {"submit_s", "template", "iterations", "batch_size",
              "classical_phase_s", "hwd", "hwd_file", "graph_file"},
             "jobs.");
  JobSpec spec;
  if (const DocNode* f = n.find("submit_s"))
    spec.submit_s = get_num(*f, "jobs.submit_s");

  const DocNode* inline_hwd = n.find("hwd");
  const DocNode* hwd_file = n.find("hwd_file");
  if (!!inline_hwd == !!hwd_file)
    throw ValidationError("jobs.hwd", "exactly one of hwd / hwd_file required",
                          n.line);
  std::string hwd_text;
  if (hwd_file) {
    hwd_text = read_file(resolve(base_dir, hwd_file->scalar));
  } else {
    std::ostringstream ss;
    emit_doc(*inline_hwd, 0, ss);
    hwd_text = ss.str();
  }
  spec.hwd = parse_hwd(hwd_text, limits);

  spec.graph_template = spec.hwd.quantum ? GraphTemplate::vqe_loop
                                         : GraphTemplate::classical_only;
  if (const DocNode* f = n.find("template")) {
    if (!graph_template_from_string(f->scalar, spec.graph_template))
      throw ValidationError("jobs.template", "unknown template '" + f->scalar + "'",
                            f->line);
  }
  if (const DocNode* f = n.find("iterations"))
    spec.template_params.max_iterations =
        static_cast<int>(get_int(*f, "jobs.iterations"));
  if (const DocNode* f = n.find("batch_size"))
    spec.template_params.batch_size =
        static_cast<int>(get_int(*f, "jobs.batch_size"));
  if (const DocNode* f = n.find("classical_phase_s"))
    spec.template_params.classical_phase_s = get_num(*f, "jobs.classical_phase_s");

  if (const DocNode* f = n.find("graph_file")) {
    TaskGraph g = import_graph(read_file(resolve(base_dir, f->scalar)));
    validate_graph(g);
    spec.explicit_graph = std::move(g);
  }
  return spec;
}

}  // namespace

Scenario load_scenario_text(std::string_view text, const std::string& base_dir) {
  DocNode root = parse_document(text);
  known_keys(root,
             {"seed", "horizon_s", "max_events", "policy", "drift", "fabric",
              "midware", "limits", "registry", "jobs"},
             "");

  Scenario s;
  if (const DocNode* f = root.find("seed"))
    s.seed = static_cast<std::uint64_t>(get_int(*f, "seed"));
  const DocNode* f = root.find("horizon_s");
  if (!f) throw ValidationError("horizon_s", "required key missing", root.line);
  s.horizon_s = get_num(*f, "horizon_s");
  if (!(s.horizon_s > 0))
    throw ValidationError("horizon_s", "must be > 0", f->line);
  if ((f = root.find("max_events"))) {
    s.max_events = get_int(*f, "max_events");
    if (s.max_events < 1)
      throw ValidationError("max_events", "must be >= 1", f->line);
  }

  if ((f = root.find("policy"))) load_policy(*f, s.config);
  if ((f = root.find("drift"))) load_drift(*f, s.config);
  if ((f = root.find("fabric"))) load_fabric(*f, s.config);
  if ((f = root.find("midware"))) load_midware(*f, s.config);
  if ((f = root.find("limits"))) load_limits(*f, s.config);

  const FabricConfig& fab = s.config.fabric;
  if (!(fab.intra_node.rtt_s < fab.inter_node.rtt_s &&
        fab.inter_node.rtt_s < fab.wan.rtt_s))
    throw ValidationError("fabric",
                          "link rtts must satisfy intra < inter < wan");
  for (const LinkClass* l : {&fab.intra_node, &fab.inter_node, &fab.wan}) {
    if (!(l->rtt_s > 0) || !(l->bandwidth_bytes_per_s > 0))
      throw ValidationError("fabric", "rtt and bandwidth must be > 0");
  }

  if ((f = root.find("registry"))) {
    if (f->kind != DocNode::Kind::seq)
      throw ValidationError("registry", "expected a list", f->line);
    for (const DocNode& item : f->items) s.registry.push_back(load_resource(item));
  }
  if ((f = root.find("jobs"))) {
    if (f->kind != DocNode::Kind::seq)
      throw ValidationError("jobs", "expected a list", f->line);
    for (const DocNode& item : f->items)
      s.jobs.push_back(load_job(item, base_dir, s.config.limits));
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::string text = read_file(path);
  std::string dir = fs::path(path).parent_path().string();
  return load_scenario_text(text, dir);
}

void force_mode(Scenario& s, CoschedMode mode) {
  for (JobSpec& j : s.jobs) {
    if (j.hwd.quantum) j.hwd.mode_hint = mode;
  }
}

}  // namespace qhpc
