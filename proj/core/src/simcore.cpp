#include "qhpc/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "qhpc/errors.hpp"
#include "qhpc/fabric.hpp"
#include "qhpc/midware.hpp"
#include "qhpc/scheduler.hpp"
#include "qhpc/trace.hpp"

namespace qhpc {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::job_submit: return "job_submit";
    case EventKind::sched_pass: return "sched_pass";
    case EventKind::task_start: return "task_start";
    case EventKind::task_end: return "task_end";
    case EventKind::qpu_phase_start: return "qpu_phase_start";
    case EventKind::qpu_phase_end: return "qpu_phase_end";
    case EventKind::cores_released: return "cores_released";
    case EventKind::cores_reacquired: return "cores_reacquired";
    case EventKind::calib_poll: return "calib_poll";
    case EventKind::recalibration: return "recalibration";
    case EventKind::fallback: return "fallback";
    case EventKind::job_end: return "job_end";
  }
  return "?";
}

bool event_kind_from_string(std::string_view s, EventKind& out) {
  static const std::pair<std::string_view, EventKind> table[] = {
      {"job_submit", EventKind::job_submit},
      {"sched_pass", EventKind::sched_pass},
      {"task_start", EventKind::task_start},
      {"task_end", EventKind::task_end},
      {"qpu_phase_start", EventKind::qpu_phase_start},
      {"qpu_phase_end", EventKind::qpu_phase_end},
      {"cores_released", EventKind::cores_released},
      {"cores_reacquired", EventKind::cores_reacquired},
      {"calib_poll", EventKind::calib_poll},
      {"recalibration", EventKind::recalibration},
      {"fallback", EventKind::fallback},
      {"job_end", EventKind::job_end},
  };
  for (const auto& [name, kind] : table) {
    if (s == name) {
      out = kind;
      return true;
    }
  }
  return false;
}

namespace {

constexpr int kTraceVersion = 1;

// ---------------------------------------------------------------------------
// Trace writing

class TraceWriter {
 public:
  void header(const Scenario& scn) {
    out_ << "#qhpc-trace v" << kTraceVersion << "\tseed=" << scn.seed
         << "\thorizon_ns=" << ns_from_s(scn.horizon_s);
    for (const auto& [k, v] : config_to_kv(scn.config)) {
      out_ << '\t' << k << '=' << v;
    }
    out_ << '\n';
    for (const ResourceRecord& r : scn.registry) {
      out_ << "#resource\t" << r.resource_id << '\t' << to_string(r.tier) << '\t'
           << r.cpu_cores << '\t' << r.gpu_count << '\t' << (r.qpu ? 1 : 0)
           << '\n';
    }
  }

  void event(SimTimeNs t, EventKind kind,
             std::initializer_list<std::pair<std::string_view, std::string>> kv) {
    out_ << t << '\t' << seq_++ << '\t' << to_string(kind);
    for (const auto& [k, v] : kv) out_ << '\t' << k << '=' << v;
    out_ << '\n';
  }

  void footer(SimTimeNs makespan_ns) {
    out_ << "#end\tmakespan_ns=" << makespan_ns << "\tevents=" << seq_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  std::uint64_t seq_ = 0;
};

// ---------------------------------------------------------------------------
// Metric accumulation (live side; an independent recomputation lives in
// trace.cpp)

struct ResourceAccum {
  Tier tier = Tier::r1;
  int capacity_slots = 0;  // cores + gpus + qpu count
  int cores_alloc = 0;
  int gpus_alloc = 0;
  int cores_busy = 0;
  bool qpu_active = false;  // whole-job hold or executing phase
  SimTimeNs last_ns = 0;
  std::int64_t alloc_core_ns = 0;
  std::int64_t alloc_gpu_ns = 0;
  std::int64_t idle_core_ns = 0;
  std::int64_t qpu_util_ns = 0;

  void flush(SimTimeNs now) {
    SimTimeNs dt = now - last_ns;
    if (dt < 0) throw InvariantViolation("metrics time ran backwards");
    alloc_core_ns += static_cast<std::int64_t>(cores_alloc) * dt;
    alloc_gpu_ns += static_cast<std::int64_t>(gpus_alloc) * dt;
    idle_core_ns += static_cast<std::int64_t>(cores_alloc - cores_busy) * dt;
    if (qpu_active) qpu_util_ns += dt;
    last_ns = now;
  }
};

struct DeviceAccum {
  SimTimeNs exec_ns = 0;  // time actually executing phases
};

// ---------------------------------------------------------------------------
// Engine

struct NodeRt {
  TaskNode node;
  std::vector<size_t> out_edges;
  int deps_remaining = 0;
  SimTimeNs arrival_ns = 0;
  SimTimeNs phase_start_ns = 0;
  bool started = false;
  bool done = false;
};

enum class JobPhase { pending, running, completed, degraded };

struct JobRt {
  size_t index = 0;
  const JobSpec* spec = nullptr;
  PendingJob view;
  TaskGraph dag;  // unrolled, possibly rewritten for emulation
  std::vector<NodeRt> nodes;
  std::map<std::string, size_t> node_of;

  JobPhase phase = JobPhase::pending;
  ScheduleDecision decision;
  bool skip_qpu = false;
  bool emulated = false;
  bool queue_fallback_traced = false;
  SimTimeNs submit_ns = 0;
  SimTimeNs start_ns = 0;
  SimTimeNs end_ns = 0;
  size_t nodes_done = 0;

  // job-level execution gates
  int running_cores = 0;
  int running_gpus = 0;
  std::deque<size_t> node_backlog;  // classical nodes waiting for the job gate

  // interleaved bookkeeping
  bool cores_released = false;
  SimTimeNs reacquire_requested_ns = 0;
  bool phase_in_flight = false;
  std::deque<size_t> phase_backlog;
  std::deque<size_t> waiting_classical;
  bool reacquire_queued = false;

  std::int64_t shots_executed = 0;
};

struct DeviceRt {
  Tier tier = Tier::r1;
  Modality modality = Modality::superconducting;
  Connectivity connectivity = Connectivity::linear;
  bool executing = false;
  std::deque<std::pair<size_t, size_t>> queue;  // (job, node) waiting
};

enum class ItemKind {
  job_submit,
  sched_pass,
  node_ready,
  task_end,
  phase_end,
  calib_poll,
};

struct QueueItem {
  SimTimeNs time_ns = 0;
  std::uint64_t order = 0;
  ItemKind kind = ItemKind::sched_pass;
  size_t job = 0;
  size_t node = 0;
  std::string tag;  // device id or pass reason
};

struct ItemAfter {
  bool operator()(const QueueItem& a, const QueueItem& b) const {
    if (a.time_ns != b.time_ns) return a.time_ns > b.time_ns;
    return a.order > b.order;
  }
};

class Engine {
 public:
  explicit Engine(const Scenario& scn)
      : scn_(scn),
        cfg_(scn.config),
        registry_(scn.registry, scn.seed, scn.config.drift),
        state_(scn.registry),
        scheduler_(scn.config) {}

  RunResult run();

 private:
  void prepare_jobs();
  void enqueue(SimTimeNs t, ItemKind k, size_t job = 0, size_t node = 0,
               std::string tag = {});
  void dispatch(const QueueItem& item);

  void on_job_submit(size_t j);
  void on_sched_pass(const std::string& reason);
  void on_node_ready(size_t j, size_t n);
  void on_task_end(size_t j, size_t n);
  void on_phase_end(size_t j, size_t n);
  void on_calib_poll(const std::string& device);

  void apply_decision(const ScheduleDecision& d);
  void try_start_node(size_t j, size_t n);
  void start_task(size_t j, size_t n);
  void start_phase(size_t j, size_t n);
  void complete_node(size_t j, size_t n);
  void pump_device(const std::string& device);
  void serve_reacquires(const std::string& resource);
  void check_job_done(size_t j);
  void drain_backlog(size_t j);

  SimTimeNs transfer_ns(const JobRt& job, const TaskEdge& e) const;
  void touch_resource(const std::string& resource);

  std::string encode_decisions(const std::vector<ScheduleDecision>& ds) const;

  // inputs
  const Scenario& scn_;
  const SimConfig& cfg_;
  ResourceRegistry registry_;
  ClusterState state_;
  Scheduler scheduler_;

  // runtime
  std::priority_queue<QueueItem, std::vector<QueueItem>, ItemAfter> queue_;
  std::uint64_t next_order_ = 0;
  SimTimeNs now_ns_ = 0;
  SimTimeNs horizon_ns_ = 0;
  std::int64_t processed_ = 0;

  std::vector<JobRt> jobs_;
  std::map<std::string, DeviceRt> devices_;
  std::map<std::string, std::deque<size_t>> reacquire_queue_;  // resource -> jobs
  std::set<size_t> pending_;

  TraceWriter trace_;
  std::map<std::string, ResourceAccum> accum_;
  std::map<std::string, DeviceAccum> device_accum_;
  SimTimeNs makespan_ns_ = 0;
  MetricsReport metrics_;
};

void Engine::enqueue(SimTimeNs t, ItemKind k, size_t job, size_t node,
                     std::string tag) {
  queue_.push(QueueItem{t, next_order_++, k, job, node, std::move(tag)});
}

void Engine::touch_resource(const std::string& resource) {
  accum_.at(resource).flush(now_ns_);
}

SimTimeNs Engine::transfer_ns(const JobRt& job, const TaskEdge& e) const {
  // Intra-job classical exchanges share the allocation's memory: free.
  // Edges touching a QPU phase ride the device's feedback link (intra-node
  // for co-located R3 devices, WAN for remote R4 ones).
  const TaskNode& src = job.nodes[job.node_of.at(e.src)].node;
  const TaskNode& dst = job.nodes[job.node_of.at(e.dst)].node;
  bool qpu_edge = (src.kind == NodeKind::qpu || dst.kind == NodeKind::qpu) &&
                  !job.emulated && !job.skip_qpu;
  if (!qpu_edge || !job.decision.qpu_token) return 0;
  const ResourceRecord* dev = registry_.find(job.decision.qpu_token->resource_id);
  const LinkClass& link = dev->tier == Tier::r3 ? cfg_.fabric.intra_node
                                                : cfg_.fabric.wan;
  return ns_from_s(transfer_time_s(e.payload_bytes, link));
}

void Engine::prepare_jobs() {
  std::set<std::string> ids;
  for (size_t i = 0; i < scn_.jobs.size(); ++i) {
    const JobSpec& spec = scn_.jobs[i];
    if (!ids.insert(spec.hwd.job_id).second)
      throw ScenarioError("duplicate job_id '" + spec.hwd.job_id + "'");
    if (spec.submit_s < 0) throw ScenarioError("submit_s must be >= 0");

    JobRt job;
    job.index = i;
    job.spec = &spec;
    job.submit_ns = ns_from_s(spec.submit_s);

    TaskGraph cyclic;
    if (spec.explicit_graph) {
      cyclic = *spec.explicit_graph;
    } else {
      cyclic = build_graph(spec.hwd, spec.graph_template, spec.template_params);
    }
    validate_graph(cyclic);
    PathClassification cls = classify_paths(cyclic);
    job.dag = unroll(cyclic);

    for (const TaskNode& n : job.dag.nodes) {
      if (n.kind == NodeKind::qpu) continue;  // rewritten nodes get 1 GPU
      if (n.demand.cpu_cores > spec.hwd.classical.cpu_cores ||
          n.demand.gpu_count > spec.hwd.classical.gpu_count)
        throw ScenarioError("node '" + n.node_id + "' of job '" +
                            spec.hwd.job_id + "' demands more than the job");
    }

    job.view.job_id = spec.hwd.job_id;
    job.view.priority = spec.hwd.priority;
    job.view.submit_s = spec.submit_s;
    job.view.classical = spec.hwd.classical;
    job.view.quantum = spec.hwd.quantum ? &spec.hwd.quantum.value() : nullptr;
    job.view.mode_hint = spec.hwd.mode_hint;
    job.view.has_latency_critical = !cls.latency_critical_chains.empty();
    job.view.has_batches = !cls.latency_tolerant_batches.empty();
    for (const TaskNode& n : job.dag.nodes) {
      if (n.kind == NodeKind::qpu)
        job.view.qpu_work.emplace_back(n.shots, n.circuit_depth);
    }

    std::map<std::string, size_t> index;
    for (const TaskNode& n : job.dag.nodes) {
      index[n.node_id] = job.nodes.size();
      job.nodes.push_back(NodeRt{n, {}, 0, 0, false, false});
    }
    for (size_t e = 0; e < job.dag.edges.size(); ++e) {
      const TaskEdge& edge = job.dag.edges[e];
      job.nodes[index.at(edge.src)].out_edges.push_back(e);
      job.nodes[index.at(edge.dst)].deps_remaining++;
    }
    job.node_of = std::move(index);
    jobs_.push_back(std::move(job));
  }

  for (const ResourceRecord& r : scn_.registry) {
    accum_[r.resource_id] = ResourceAccum{
        r.tier, r.cpu_cores + r.gpu_count + (r.qpu ? 1 : 0), 0, 0, 0, false, 0,
        0, 0, 0, 0};
    if (r.qpu) {
      devices_[r.resource_id] =
          DeviceRt{r.tier, r.qpu->modality, r.qpu->connectivity, false, {}};
      device_accum_[r.resource_id] = DeviceAccum{};
    }
  }
}

std::string Engine::encode_decisions(
    const std::vector<ScheduleDecision>& ds) const {
  if (ds.empty()) return "-";
  std::string out;
  for (const ScheduleDecision& d : ds) {
    if (!out.empty()) out += ';';
    out += d.job_id;
    out += ':';
    out += d.classical_allocation.resource_id;
    out += ':';
    out += std::to_string(d.classical_allocation.cores);
    out += ':';
    out += std::to_string(d.classical_allocation.gpus);
    out += ':';
    out += to_string(d.mode);
    out += ':';
    out += to_string(d.fallback_taken);
    out += ':';
    out += d.qpu_token ? d.qpu_token->resource_id : "-";
  }
  return out;
}

RunResult Engine::run() {
  horizon_ns_ = ns_from_s(scn_.horizon_s);
  if (horizon_ns_ <= 0) throw ScenarioError("horizon_s must be > 0");

  prepare_jobs();
  trace_.header(scn_);

  for (size_t i = 0; i < jobs_.size(); ++i) {
    enqueue(jobs_[i].submit_ns, ItemKind::job_submit, i);
  }
  SimTimeNs poll_ns = ns_from_s(cfg_.drift.poll_period_s);
  if (poll_ns > 0) {
    for (const auto& [id, dev] : devices_) {
      if (poll_ns <= horizon_ns_) enqueue(poll_ns, ItemKind::calib_poll, 0, 0, id);
    }
  }

  while (!queue_.empty()) {
    QueueItem item = queue_.top();
    if (item.time_ns > horizon_ns_) break;  // heap is time-ordered
    queue_.pop();
    if (item.time_ns < now_ns_)
      throw InvariantViolation("event queue time ran backwards");
    now_ns_ = item.time_ns;
    if (++processed_ > scn_.max_events)
      throw InvariantViolation("max-event safety valve tripped");
    dispatch(item);
  }

  // Close integrals at the horizon: levels are zero after the last job end,
  // so this is exact for completed runs and correct for truncated ones.
  for (auto& [id, acc] : accum_) acc.flush(horizon_ns_);

  metrics_.makespan_s = s_from_ns(makespan_ns_);

  std::int64_t pending = 0;
  for (const JobRt& j : jobs_) {
    if (j.phase == JobPhase::pending || j.phase == JobPhase::running) ++pending;
  }
  metrics_.pending_job_count = pending;

  SimTimeNs window_ns = pending > 0 ? horizon_ns_ : makespan_ns_;
  std::map<Tier, std::int64_t> used, avail;
  for (const auto& [id, acc] : accum_) {
    used[acc.tier] += acc.alloc_core_ns + acc.alloc_gpu_ns + acc.qpu_util_ns;
    avail[acc.tier] += static_cast<std::int64_t>(acc.capacity_slots) * window_ns;
  }
  for (Tier t : {Tier::r1, Tier::r2, Tier::r3, Tier::r4}) {
    if (avail.contains(t) && avail[t] > 0) {
      metrics_.tier_utilization[t] =
          static_cast<double>(used[t]) / static_cast<double>(avail[t]);
    }
  }

  if (!device_accum_.empty()) {
    double sum = 0;
    for (const auto& [id, acc] : device_accum_) {
      sum += static_cast<double>(horizon_ns_ - acc.exec_ns) /
             static_cast<double>(horizon_ns_);
    }
    metrics_.qpu_idle_fraction = sum / static_cast<double>(device_accum_.size());
  }

  std::int64_t wait_sum_ns = 0;
  std::int64_t ended = 0;
  std::int64_t idle_core_ns = 0;
  for (const JobRt& j : jobs_) {
    if (j.phase == JobPhase::completed || j.phase == JobPhase::degraded) {
      wait_sum_ns += j.start_ns - j.submit_ns;
      ++ended;
    }
  }
  for (const auto& [id, acc] : accum_) idle_core_ns += acc.idle_core_ns;
  metrics_.mean_job_wait_s =
      ended > 0 ? s_from_ns(wait_sum_ns) / static_cast<double>(ended) : 0.0;
  metrics_.cpu_idle_core_s = s_from_ns(idle_core_ns);

  trace_.footer(makespan_ns_);

  RunResult result;
  result.trace_text = trace_.str();
  result.metrics = metrics_;
  for (const JobRt& j : jobs_) {
    JobRow row;
    row.job_id = j.spec->hwd.job_id;
    row.submit_s = s_from_ns(j.submit_ns);
    bool started = j.phase != JobPhase::pending;
    row.start_s = started ? s_from_ns(j.start_ns) : 0.0;
    row.end_s =
        (j.phase == JobPhase::completed || j.phase == JobPhase::degraded)
            ? s_from_ns(j.end_ns)
            : 0.0;
    row.wait_s = started ? s_from_ns(j.start_ns - j.submit_ns) : 0.0;
    row.state = j.phase == JobPhase::completed   ? "completed"
                : j.phase == JobPhase::degraded  ? "degraded"
                                                 : "pending";
    row.mode = j.decision.mode;
    row.fallback = j.decision.fallback_taken;
    row.resource_id = started ? j.decision.classical_allocation.resource_id : "";
    row.qpu_id = j.decision.qpu_token ? j.decision.qpu_token->resource_id : "";
    row.shots_executed = j.shots_executed;
    result.job_rows.push_back(std::move(row));
  }
  return result;
}

void Engine::dispatch(const QueueItem& item) {
  switch (item.kind) {
    case ItemKind::job_submit: on_job_submit(item.job); break;
    case ItemKind::sched_pass: on_sched_pass(item.tag); break;
    case ItemKind::node_ready: on_node_ready(item.job, item.node); break;
    case ItemKind::task_end: on_task_end(item.job, item.node); break;
    case ItemKind::phase_end: on_phase_end(item.job, item.node); break;
    case ItemKind::calib_poll: on_calib_poll(item.tag); break;
  }
}

void Engine::on_job_submit(size_t j) {
  JobRt& job = jobs_[j];
  trace_.event(now_ns_, EventKind::job_submit, {{"job", job.view.job_id}});
  pending_.insert(j);
  enqueue(now_ns_, ItemKind::sched_pass, 0, 0, "submit");
}

void Engine::on_sched_pass(const std::string& reason) {
  std::vector<PendingJob> views;
  for (size_t j : pending_) views.push_back(jobs_[j].view);

  std::vector<std::string> queued;
  std::vector<ScheduleDecision> decisions = scheduler_.schedule_step(
      views, registry_, state_, s_from_ns(now_ns_), &queued);

  trace_.event(now_ns_, EventKind::sched_pass,
               {{"reason", reason},
                {"pending", std::to_string(pending_.size())},
                {"decisions", encode_decisions(decisions)}});

  for (const std::string& id : queued) {
    for (size_t j : pending_) {
      JobRt& job = jobs_[j];
      if (job.view.job_id != id || job.queue_fallback_traced) continue;
      job.queue_fallback_traced = true;
      job.decision.fallback_taken = FallbackAction::queued;
      metrics_.fallback_queued++;
      trace_.event(now_ns_, EventKind::fallback,
                   {{"job", id}, {"action", "queued"}});
    }
  }

  for (const ScheduleDecision& d : decisions) apply_decision(d);
}

void Engine::apply_decision(const ScheduleDecision& d) {
  size_t j = SIZE_MAX;
  for (size_t idx : pending_) {
    if (jobs_[idx].view.job_id == d.job_id) {
      j = idx;
      break;
    }
  }
  if (j == SIZE_MAX) throw InvariantViolation("decision for non-pending job");
  JobRt& job = jobs_[j];
  if (job.view.quantum && !d.qpu_token &&
      d.fallback_taken == FallbackAction::none)
    throw InvariantViolation("quantum decision without token or fallback");
  pending_.erase(j);

  job.decision = d;
  job.phase = JobPhase::running;
  job.start_ns = now_ns_;

  const std::string& res = d.classical_allocation.resource_id;
  touch_resource(res);
  state_.start_job(d, job.view.classical.walltime_s);
  accum_.at(res).cores_alloc += d.classical_allocation.cores;
  accum_.at(res).gpus_alloc += d.classical_allocation.gpus;

  if (d.fallback_taken == FallbackAction::gpu_emulation) {
    job.emulated = true;
    metrics_.fallback_gpu_emulation++;
    trace_.event(now_ns_, EventKind::fallback,
                 {{"job", d.job_id}, {"action", "gpu_emulation"}});
    for (NodeRt& n : job.nodes) {
      if (n.node.kind != NodeKind::qpu) continue;
      double dur = emulation_cost_s(job.view.quantum->qubit_count,
                                    n.node.circuit_depth, n.node.shots,
                                    cfg_.midware);
      n.node.kind = NodeKind::gpu;
      n.node.service_time_s = dur;
      n.node.demand = ResourceDemand{0, 1, 0};
      n.node.shots = 0;
      n.node.circuit_depth = 0;
    }
  } else if (d.fallback_taken == FallbackAction::degraded_notice) {
    job.skip_qpu = true;
    metrics_.fallback_degraded_notice++;
    trace_.event(now_ns_, EventKind::fallback,
                 {{"job", d.job_id}, {"action", "degraded_notice"}});
  }

  if (d.qpu_token) {
    double stale_s =
        s_from_ns(now_ns_) - d.qpu_token->calibration_snapshot.timestamp_s;
    if (cfg_.drift.poll_period_s > 0 &&
        stale_s > cfg_.drift.poll_period_s + 1e-9)
      throw InvariantViolation("token issued with a stale calibration snapshot");
  }
  if (d.qpu_token && d.mode == CoschedMode::simultaneous) {
    const std::string& dev = d.qpu_token->resource_id;
    state_.occupy_device(dev, d.job_id, d.start_time_s +
                                            job.view.classical.walltime_s);
    touch_resource(dev);
    accum_.at(dev).qpu_active = true;
  }

  SimTimeNs first_ready =
      now_ns_ + (d.qpu_token ? ns_from_s(d.compile_time_s) : 0);
  for (size_t n = 0; n < job.nodes.size(); ++n) {
    if (job.nodes[n].deps_remaining == 0) {
      job.nodes[n].arrival_ns = first_ready;
      enqueue(first_ready, ItemKind::node_ready, j, n);
    }
  }
  check_job_done(j);  // zero-node graphs complete immediately
}

void Engine::on_node_ready(size_t j, size_t n) {
  try_start_node(j, n);
}

void Engine::try_start_node(size_t j, size_t n) {
  JobRt& job = jobs_[j];
  NodeRt& node = job.nodes[n];
  if (node.started || node.done)
    throw InvariantViolation("node dispatched twice");
  if (node.deps_remaining != 0)
    throw InvariantViolation("causality: node ready with open dependencies");

  if (node.node.kind == NodeKind::qpu && job.skip_qpu) {
    // Degraded completion: the phase is skipped, successors proceed.
    node.started = true;
    complete_node(j, n);
    check_job_done(j);
    return;
  }

  if (node.node.kind == NodeKind::qpu) {
    if (!job.decision.qpu_token)
      throw InvariantViolation("QPU phase without a token");
    if (job.decision.mode == CoschedMode::interleaved && job.phase_in_flight) {
      job.phase_backlog.push_back(n);
      return;
    }
    const std::string& dev = job.decision.qpu_token->resource_id;
    DeviceRt& device = devices_.at(dev);
    const std::string* holder = state_.device_holder(dev);
    bool admissible = !device.executing &&
                      (holder == nullptr || *holder == job.view.job_id);
    if (!admissible) {
      device.queue.emplace_back(j, n);
      return;
    }
    start_phase(j, n);
    return;
  }

  // Classical task (cpu / gpu / fpga).
  if (job.decision.mode == CoschedMode::interleaved && job.cores_released) {
    job.waiting_classical.push_back(n);
    return;
  }
  const ClassicalAllocation& alloc = job.decision.classical_allocation;
  if (job.running_cores + node.node.demand.cpu_cores > alloc.cores ||
      job.running_gpus + node.node.demand.gpu_count > alloc.gpus) {
    job.node_backlog.push_back(n);
    return;
  }
  start_task(j, n);
}

void Engine::start_task(size_t j, size_t n) {
  JobRt& job = jobs_[j];
  NodeRt& node = job.nodes[n];
  const std::string& res = job.decision.classical_allocation.resource_id;

  node.started = true;
  job.running_cores += node.node.demand.cpu_cores;
  job.running_gpus += node.node.demand.gpu_count;

  touch_resource(res);
  accum_.at(res).cores_busy += node.node.demand.cpu_cores;

  SimTimeNs dur = ns_from_s(node.node.service_time_s);
  trace_.event(now_ns_, EventKind::task_start,
               {{"job", job.view.job_id},
                {"node", node.node.node_id},
                {"kind", std::string(to_string(node.node.kind))},
                {"resource", res},
                {"cores", std::to_string(node.node.demand.cpu_cores)},
                {"gpus", std::to_string(node.node.demand.gpu_count)},
                {"dur_ns", std::to_string(dur)}});
  enqueue(now_ns_ + dur, ItemKind::task_end, j, n);
}

void Engine::start_phase(size_t j, size_t n) {
  JobRt& job = jobs_[j];
  NodeRt& node = job.nodes[n];
  const QpuToken& token = *job.decision.qpu_token;
  const std::string& dev = token.resource_id;
  DeviceRt& device = devices_.at(dev);
  const ResourceRecord* record = registry_.find(dev);

  if (job.decision.mode == CoschedMode::interleaved) {
    if (!job.cores_released) {
      const std::string& res = job.decision.classical_allocation.resource_id;
      touch_resource(res);
      state_.release_cores(job.view.job_id);
      accum_.at(res).cores_alloc -= job.decision.classical_allocation.cores;
      job.cores_released = true;
      trace_.event(
          now_ns_, EventKind::cores_released,
          {{"job", job.view.job_id},
           {"resource", res},
           {"cores", std::to_string(job.decision.classical_allocation.cores)}});
      serve_reacquires(res);
      enqueue(now_ns_, ItemKind::sched_pass, 0, 0, "release");
    }
    job.phase_in_flight = true;
  }

  std::int64_t eff_shots = static_cast<std::int64_t>(std::ceil(
      static_cast<double>(node.node.shots) * job.decision.shot_multiplier));
  int eff_depth = transformed_depth(node.node.circuit_depth,
                                    record->qpu->connectivity, cfg_.midware);
  SimTimeNs dur = ns_from_s(
      qpu_exec_time_s(eff_shots, eff_depth, record->qpu->modality, cfg_.fabric));

  node.started = true;
  node.phase_start_ns = now_ns_;
  device.executing = true;
  if (job.decision.mode != CoschedMode::simultaneous) {
    state_.occupy_device(dev, job.view.job_id, s_from_ns(now_ns_ + dur));
    touch_resource(dev);
    accum_.at(dev).qpu_active = true;
  }

  job.shots_executed += eff_shots;
  metrics_.total_shots_executed += eff_shots;

  trace_.event(now_ns_, EventKind::qpu_phase_start,
               {{"job", job.view.job_id},
                {"node", node.node.node_id},
                {"device", dev},
                {"token", token.token_id},
                {"shots", std::to_string(eff_shots)},
                {"depth", std::to_string(eff_depth)},
                {"dur_ns", std::to_string(dur)}});
  enqueue(now_ns_ + dur, ItemKind::phase_end, j, n);
}

void Engine::complete_node(size_t j, size_t n) {
  JobRt& job = jobs_[j];
  NodeRt& node = job.nodes[n];
  node.done = true;
  job.nodes_done++;
  for (size_t e : node.out_edges) {
    const TaskEdge& edge = job.dag.edges[e];
    size_t dst = job.node_of.at(edge.dst);
    NodeRt& next = job.nodes[dst];
    SimTimeNs arrive = now_ns_ + transfer_ns(job, edge);
    next.arrival_ns = std::max(next.arrival_ns, arrive);
    if (--next.deps_remaining == 0) {
      enqueue(next.arrival_ns, ItemKind::node_ready, j, dst);
    }
    if (next.deps_remaining < 0)
      throw InvariantViolation("dependency count underflow");
  }
}

void Engine::drain_backlog(size_t j) {
  JobRt& job = jobs_[j];
  const ClassicalAllocation& alloc = job.decision.classical_allocation;
  // FIFO over the job-gate backlog; stop at the first node that still
  // does not fit, to keep admission order deterministic.
  while (!job.node_backlog.empty()) {
    size_t n = job.node_backlog.front();
    NodeRt& node = job.nodes[n];
    if (job.decision.mode == CoschedMode::interleaved && job.cores_released) {
      job.node_backlog.pop_front();
      job.waiting_classical.push_back(n);
      continue;
    }
    if (job.running_cores + node.node.demand.cpu_cores > alloc.cores ||
        job.running_gpus + node.node.demand.gpu_count > alloc.gpus) {
      break;
    }
    job.node_backlog.pop_front();
    start_task(j, n);
  }
}

void Engine::on_task_end(size_t j, size_t n) {
  JobRt& job = jobs_[j];
  NodeRt& node = job.nodes[n];
  const std::string& res = job.decision.classical_allocation.resource_id;

  trace_.event(now_ns_, EventKind::task_end,
               {{"job", job.view.job_id},
                {"node", node.node.node_id},
                {"resource", res}});

  job.running_cores -= node.node.demand.cpu_cores;
  job.running_gpus -= node.node.demand.gpu_count;
  touch_resource(res);
  accum_.at(res).cores_busy -= node.node.demand.cpu_cores;

  complete_node(j, n);
  drain_backlog(j);
  enqueue(now_ns_, ItemKind::sched_pass, 0, 0, "task_end");
  check_job_done(j);
}

void Engine::on_phase_end(size_t j, size_t n) {
  JobRt& job = jobs_[j];
  NodeRt& node = job.nodes[n];
  const std::string& dev = job.decision.qpu_token->resource_id;
  DeviceRt& device = devices_.at(dev);

  trace_.event(now_ns_, EventKind::qpu_phase_end,
               {{"job", job.view.job_id},
                {"node", node.node.node_id},
                {"device", dev}});

  device.executing = false;
  device_accum_.at(dev).exec_ns += now_ns_ - node.phase_start_ns;
  if (job.decision.mode != CoschedMode::simultaneous) {
    touch_resource(dev);
    state_.vacate_device(dev, job.view.job_id);
    accum_.at(dev).qpu_active = false;
  }

  complete_node(j, n);

  if (job.decision.mode == CoschedMode::interleaved) {
    job.phase_in_flight = false;
    // Re-acquire released cores, possibly after a wait, at top priority.
    const std::string& res = job.decision.classical_allocation.resource_id;
    if (job.reacquire_queued) {
      // An earlier request is still waiting in line; nothing new to file.
    } else if (state_.free_cores(res) >=
               job.decision.classical_allocation.cores) {
      touch_resource(res);
      state_.reacquire_cores(job.view.job_id);
      accum_.at(res).cores_alloc += job.decision.classical_allocation.cores;
      job.cores_released = false;
      trace_.event(now_ns_, EventKind::cores_reacquired,
                   {{"job", job.view.job_id},
                    {"resource", res},
                    {"cores",
                     std::to_string(job.decision.classical_allocation.cores)},
                    {"waited_ns", "0"}});
      while (!job.waiting_classical.empty()) {
        size_t w = job.waiting_classical.front();
        job.waiting_classical.pop_front();
        try_start_node(j, w);
      }
    } else {
      job.reacquire_requested_ns = now_ns_;
      reacquire_queue_[res].push_back(j);
      job.reacquire_queued = true;
    }
    if (!job.phase_backlog.empty()) {
      size_t next = job.phase_backlog.front();
      job.phase_backlog.pop_front();
      try_start_node(j, next);
    }
  }

  pump_device(dev);
  enqueue(now_ns_, ItemKind::sched_pass, 0, 0, "phase_end");
  check_job_done(j);
}

void Engine::pump_device(const std::string& dev) {
  DeviceRt& device = devices_.at(dev);
  if (device.executing) return;
  if (device.queue.empty()) return;
  auto [j, n] = device.queue.front();
  const std::string* holder = state_.device_holder(dev);
  if (holder != nullptr && *holder != jobs_[j].view.job_id) return;
  device.queue.pop_front();
  start_phase(j, n);
}

void Engine::serve_reacquires(const std::string& resource) {
  auto it = reacquire_queue_.find(resource);
  if (it == reacquire_queue_.end()) return;
  std::deque<size_t>& q = it->second;
  while (!q.empty()) {
    size_t j = q.front();
    JobRt& job = jobs_[j];
    if (state_.free_cores(resource) < job.decision.classical_allocation.cores)
      break;  // strict FIFO; the head blocks
    q.pop_front();
    job.reacquire_queued = false;
    touch_resource(resource);
    state_.reacquire_cores(job.view.job_id);
    accum_.at(resource).cores_alloc += job.decision.classical_allocation.cores;
    job.cores_released = false;
    trace_.event(
        now_ns_, EventKind::cores_reacquired,
        {{"job", job.view.job_id},
         {"resource", resource},
         {"cores", std::to_string(job.decision.classical_allocation.cores)},
         {"waited_ns", std::to_string(now_ns_ - job.reacquire_requested_ns)}});
    while (!job.waiting_classical.empty()) {
      size_t w = job.waiting_classical.front();
      job.waiting_classical.pop_front();
      try_start_node(j, w);
    }
  }
}

void Engine::check_job_done(size_t j) {
  JobRt& job = jobs_[j];
  if (job.phase != JobPhase::running) return;
  if (job.nodes_done != job.nodes.size()) return;

  const std::string& res = job.decision.classical_allocation.resource_id;
  touch_resource(res);
  if (job.reacquire_queued) {
    // Ending with a reacquire still queued: withdraw the request.
    std::deque<size_t>& q = reacquire_queue_[res];
    q.erase(std::remove(q.begin(), q.end(), j), q.end());
    job.reacquire_queued = false;
  }
  accum_.at(res).gpus_alloc -= job.decision.classical_allocation.gpus;
  if (!job.cores_released)
    accum_.at(res).cores_alloc -= job.decision.classical_allocation.cores;
  state_.end_job(job.view.job_id);

  job.phase = job.skip_qpu ? JobPhase::degraded : JobPhase::completed;
  job.end_ns = now_ns_;
  if (job.skip_qpu) metrics_.degraded_job_count++;
  else metrics_.completed_job_count++;
  makespan_ns_ = std::max(makespan_ns_, now_ns_);

  // The end record goes out before any same-instant consequence (released
  // device, served reacquire, next scheduling pass) so trace order follows
  // cause then effect.
  trace_.event(now_ns_, EventKind::job_end,
               {{"job", job.view.job_id},
                {"state", job.skip_qpu ? "degraded" : "completed"},
                {"wait_ns", std::to_string(job.start_ns - job.submit_ns)}});

  if (job.decision.qpu_token && job.decision.mode == CoschedMode::simultaneous) {
    const std::string& dev = job.decision.qpu_token->resource_id;
    touch_resource(dev);
    state_.vacate_device(dev, job.view.job_id);
    accum_.at(dev).qpu_active = false;
    pump_device(dev);
  }

  serve_reacquires(res);
  enqueue(now_ns_, ItemKind::sched_pass, 0, 0, "job_end");
}

void Engine::on_calib_poll(const std::string& device) {
  PollResult result = registry_.poll(device, s_from_ns(now_ns_));
  if (result.recalibrated) {
    trace_.event(now_ns_, EventKind::recalibration,
                 {{"device", device},
                  {"fidelity",
                   format_double(result.profile.nominal_fidelity)}});
  }
  trace_.event(now_ns_, EventKind::calib_poll,
               {{"device", device},
                {"fidelity", format_double(result.profile.two_qubit_fidelity)},
                {"coherence_us",
                 format_double(result.profile.coherence_time_us)}});
  SimTimeNs next = now_ns_ + ns_from_s(cfg_.drift.poll_period_s);
  if (next <= horizon_ns_) enqueue(next, ItemKind::calib_poll, 0, 0, device);
}

}  // namespace

RunResult run(const Scenario& scenario) {
  Engine engine(scenario);
  return engine.run();
}

ReplayDivergence replay_check(std::string_view trace_a, std::string_view trace_b) {
  auto split_lines = [](std::string_view text) {
    std::vector<std::string_view> lines;
    size_t pos = 0;
    while (pos < text.size()) {
      size_t eol = text.find('\n', pos);
      if (eol == std::string_view::npos) eol = text.size();
      lines.push_back(text.substr(pos, eol - pos));
      pos = eol + 1;
    }
    return lines;
  };
  auto version_of = [](const std::vector<std::string_view>& lines) {
    if (lines.empty() || !lines[0].starts_with("#qhpc-trace "))
      throw FormatError("not a trace file");
    size_t tab = lines[0].find('\t');
    return std::string(lines[0].substr(12, tab == std::string_view::npos
                                               ? std::string_view::npos
                                               : tab - 12));
  };

  std::vector<std::string_view> a = split_lines(trace_a);
  std::vector<std::string_view> b = split_lines(trace_b);
  if (version_of(a) != version_of(b))
    throw FormatError("trace format version mismatch");

  std::vector<std::string_view> ea, eb;
  for (std::string_view l : a) {
    if (!l.empty() && l[0] != '#') ea.push_back(l);
  }
  for (std::string_view l : b) {
    if (!l.empty() && l[0] != '#') eb.push_back(l);
  }

  auto fields = [](std::string_view line) {
    std::vector<std::string_view> out;
    size_t pos = 0;
    while (pos <= line.size()) {
      size_t tab = line.find('\t', pos);
      if (tab == std::string_view::npos) tab = line.size();
      out.push_back(line.substr(pos, tab - pos));
      pos = tab + 1;
    }
    return out;
  };

  size_t n = std::min(ea.size(), eb.size());
  for (size_t i = 0; i < n; ++i) {
    if (ea[i] == eb[i]) continue;
    ReplayDivergence d;
    d.equal = false;
    d.event_index = static_cast<long>(i);
    std::vector<std::string_view> fa = fields(ea[i]);
    std::vector<std::string_view> fb = fields(eb[i]);
    size_t m = std::min(fa.size(), fb.size());
    for (size_t f = 0; f < m; ++f) {
      if (fa[f] == fb[f]) continue;
      if (f == 0) d.field = "time";
      else if (f == 1) d.field = "seq";
      else if (f == 2) d.field = "kind";
      else {
        size_t eq = fa[f].find('=');
        d.field = std::string(eq == std::string_view::npos ? fa[f]
                                                           : fa[f].substr(0, eq));
      }
      return d;
    }
    d.field = "field_count";
    return d;
  }
  if (ea.size() != eb.size()) {
    ReplayDivergence d;
    d.equal = false;
    d.event_index = static_cast<long>(n);
    d.field = "event_count";
    return d;
  }

  ReplayDivergence d;
  d.equal = true;
  // Header differences (seed, constants) are metadata, not divergence.
  return d;
}

}  // namespace qhpc
