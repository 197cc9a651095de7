#include "qhpc/trace.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "qhpc/errors.hpp"

namespace qhpc {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) next = s.size();
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::int64_t to_i64(std::string_view s, const char* what) {
  std::int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError(std::string("bad integer for ") + what);
  return v;
}

double to_f64(std::string_view s, const char* what) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError(std::string("bad number for ") + what);
  return v;
}

std::pair<std::string, std::string> split_kv(std::string_view field) {
  size_t eq = field.find('=');
  if (eq == std::string_view::npos)
    throw FormatError("expected key=value, got '" + std::string(field) + "'");
  return {std::string(field.substr(0, eq)), std::string(field.substr(eq + 1))};
}

}  // namespace

const std::string* TraceEvent::get(std::string_view key) const {
  for (const auto& [k, v] : payload) {
    if (k == key) return &v;
  }
  return nullptr;
}

TraceFile parse_trace(std::string_view text) {
  TraceFile out;
  bool saw_header = false;
  size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;

    if (line[0] == '#') {
      std::vector<std::string_view> fields = split(line, '\t');
      if (line.starts_with("#qhpc-trace ")) {
        std::string_view ver = fields[0].substr(12);
        if (!ver.starts_with("v")) throw FormatError("malformed version token");
        out.version = static_cast<int>(to_i64(ver.substr(1), "version"));
        if (out.version != 1)
          throw FormatError("unsupported trace version " + std::string(ver));
        for (size_t i = 1; i < fields.size(); ++i) {
          auto [k, v] = split_kv(fields[i]);
          if (k == "seed") out.seed = static_cast<std::uint64_t>(to_i64(v, "seed"));
          else if (k == "horizon_ns") out.horizon_ns = to_i64(v, "horizon_ns");
          else out.header.emplace_back(std::move(k), std::move(v));
        }
        saw_header = true;
      } else if (line.starts_with("#resource\t")) {
        if (fields.size() != 6) throw FormatError("malformed #resource line");
        TraceResource r;
        r.resource_id = std::string(fields[1]);
        if (!tier_from_string(fields[2], r.tier))
          throw FormatError("unknown tier in #resource line");
        r.cpu_cores = static_cast<int>(to_i64(fields[3], "cores"));
        r.gpu_count = static_cast<int>(to_i64(fields[4], "gpus"));
        r.qpu_count = static_cast<int>(to_i64(fields[5], "qpu"));
        out.resources.push_back(std::move(r));
      } else if (line.starts_with("#end")) {
        out.has_footer = true;
        for (size_t i = 1; i < fields.size(); ++i) {
          auto [k, v] = split_kv(fields[i]);
          if (k == "makespan_ns") out.footer_makespan_ns = to_i64(v, "makespan_ns");
        }
      } else {
        throw FormatError("unknown header line " + std::to_string(line_no));
      }
      continue;
    }

    if (!saw_header) throw FormatError("event before trace header");
    std::vector<std::string_view> fields = split(line, '\t');
    if (fields.size() < 3) throw FormatError("short event line " +
                                             std::to_string(line_no));
    TraceEvent ev;
    ev.time_ns = to_i64(fields[0], "time");
    ev.seq = static_cast<std::uint64_t>(to_i64(fields[1], "seq"));
    if (!event_kind_from_string(fields[2], ev.kind))
      throw FormatError("unknown event kind '" + std::string(fields[2]) + "'");
    for (size_t i = 3; i < fields.size(); ++i) {
      ev.payload.push_back(split_kv(fields[i]));
    }
    out.events.push_back(std::move(ev));
  }
  if (!saw_header) throw FormatError("missing trace header");
  return out;
}

namespace {

struct DecisionInfo {
  std::string resource;
  int cores = 0;
  int gpus = 0;
  CoschedMode mode = CoschedMode::simultaneous;
  FallbackAction fallback = FallbackAction::none;
  std::string device;  // empty when none
  SimTimeNs start_ns = 0;
};

std::map<std::string, DecisionInfo> parse_decisions(const std::string& encoded,
                                                    SimTimeNs when) {
  std::map<std::string, DecisionInfo> out;
  if (encoded == "-" || encoded.empty()) return out;
  for (std::string_view one : split(encoded, ';')) {
    std::vector<std::string_view> f = split(one, ':');
    if (f.size() != 7) throw FormatError("malformed decision entry");
    DecisionInfo d;
    d.resource = std::string(f[1]);
    d.cores = static_cast<int>(to_i64(f[2], "decision cores"));
    d.gpus = static_cast<int>(to_i64(f[3], "decision gpus"));
    if (!mode_from_string(f[4], d.mode))
      throw FormatError("unknown mode in decision");
    if (f[5] == "none") d.fallback = FallbackAction::none;
    else if (f[5] == "gpu_emulation") d.fallback = FallbackAction::gpu_emulation;
    else if (f[5] == "queued") d.fallback = FallbackAction::queued;
    else if (f[5] == "degraded_notice") d.fallback = FallbackAction::degraded_notice;
    else throw FormatError("unknown fallback in decision");
    if (f[6] != "-") d.device = std::string(f[6]);
    d.start_ns = when;
    out.emplace(std::string(f[0]), std::move(d));
  }
  return out;
}

const std::string& need(const TraceEvent& ev, std::string_view key) {
  const std::string* v = ev.get(key);
  if (!v)
    throw FormatError("event '" + std::string(to_string(ev.kind)) +
                      "' missing field '" + std::string(key) + "'");
  return *v;
}

// Level-walking accumulator over the event stream; mirrors (independently)
// the definitions the live engine uses.
struct Integrator {
  struct Res {
    Tier tier = Tier::r1;
    int slots = 0;
    int cores_alloc = 0;
    int gpus_alloc = 0;
    int cores_busy = 0;
    bool qpu_active = false;
    SimTimeNs last = 0;
    std::int64_t alloc_core_ns = 0;
    std::int64_t alloc_gpu_ns = 0;
    std::int64_t idle_core_ns = 0;
    std::int64_t qpu_util_ns = 0;

    void flush(SimTimeNs now) {
      SimTimeNs dt = now - last;
      alloc_core_ns += static_cast<std::int64_t>(cores_alloc) * dt;
      alloc_gpu_ns += static_cast<std::int64_t>(gpus_alloc) * dt;
      idle_core_ns += static_cast<std::int64_t>(cores_alloc - cores_busy) * dt;
      if (qpu_active) qpu_util_ns += dt;
      last = now;
    }
  };
  std::map<std::string, Res> res;
};

}  // namespace

MetricsReport recompute_metrics(const TraceFile& trace) {
  Integrator acc;
  for (const TraceResource& r : trace.resources) {
    acc.res[r.resource_id] =
        Integrator::Res{r.tier, r.cpu_cores + r.gpu_count + r.qpu_count,
                        0, 0, 0, false, 0, 0, 0, 0, 0};
  }

  std::map<std::string, DecisionInfo> jobs;
  std::map<std::string, SimTimeNs> submits;
  std::map<std::string, SimTimeNs> ends;
  std::map<std::string, bool> released;
  std::map<std::string, int> task_cores;  // "job/node" -> cores
  std::map<std::string, SimTimeNs> phase_start;  // device -> start
  std::map<std::string, std::int64_t> device_exec_ns;
  std::set<std::string> degraded;

  MetricsReport m;
  SimTimeNs makespan = 0;

  auto touch = [&acc](const std::string& id, SimTimeNs now) -> Integrator::Res& {
    auto it = acc.res.find(id);
    if (it == acc.res.end())
      throw FormatError("event references unknown resource '" + id + "'");
    it->second.flush(now);
    return it->second;
  };

  for (const TraceEvent& ev : trace.events) {
    switch (ev.kind) {
      case EventKind::job_submit:
        submits[need(ev, "job")] = ev.time_ns;
        break;
      case EventKind::sched_pass: {
        for (auto& [job, d] : parse_decisions(need(ev, "decisions"), ev.time_ns)) {
          Integrator::Res& r = touch(d.resource, ev.time_ns);
          r.cores_alloc += d.cores;
          r.gpus_alloc += d.gpus;
          if (!d.device.empty() && d.mode == CoschedMode::simultaneous) {
            touch(d.device, ev.time_ns).qpu_active = true;
          }
          jobs[job] = std::move(d);
        }
        break;
      }
      case EventKind::task_start: {
        Integrator::Res& r = touch(need(ev, "resource"), ev.time_ns);
        int cores = static_cast<int>(to_i64(need(ev, "cores"), "cores"));
        r.cores_busy += cores;
        task_cores[need(ev, "job") + "/" + need(ev, "node")] = cores;
        break;
      }
      case EventKind::task_end: {
        Integrator::Res& r = touch(need(ev, "resource"), ev.time_ns);
        auto it = task_cores.find(need(ev, "job") + "/" + need(ev, "node"));
        if (it == task_cores.end())
          throw FormatError("task_end without task_start");
        r.cores_busy -= it->second;
        task_cores.erase(it);
        break;
      }
      case EventKind::qpu_phase_start: {
        const std::string& dev = need(ev, "device");
        const DecisionInfo& d = jobs.at(need(ev, "job"));
        phase_start[dev] = ev.time_ns;
        if (d.mode != CoschedMode::simultaneous)
          touch(dev, ev.time_ns).qpu_active = true;
        m.total_shots_executed += to_i64(need(ev, "shots"), "shots");
        break;
      }
      case EventKind::qpu_phase_end: {
        const std::string& dev = need(ev, "device");
        const DecisionInfo& d = jobs.at(need(ev, "job"));
        auto it = phase_start.find(dev);
        if (it == phase_start.end())
          throw FormatError("qpu_phase_end without start");
        device_exec_ns[dev] += ev.time_ns - it->second;
        phase_start.erase(it);
        if (d.mode != CoschedMode::simultaneous)
          touch(dev, ev.time_ns).qpu_active = false;
        break;
      }
      case EventKind::cores_released: {
        Integrator::Res& r = touch(need(ev, "resource"), ev.time_ns);
        r.cores_alloc -= static_cast<int>(to_i64(need(ev, "cores"), "cores"));
        released[need(ev, "job")] = true;
        break;
      }
      case EventKind::cores_reacquired: {
        Integrator::Res& r = touch(need(ev, "resource"), ev.time_ns);
        r.cores_alloc += static_cast<int>(to_i64(need(ev, "cores"), "cores"));
        released[need(ev, "job")] = false;
        break;
      }
      case EventKind::calib_poll:
      case EventKind::recalibration:
        break;
      case EventKind::fallback: {
        const std::string& action = need(ev, "action");
        if (action == "gpu_emulation") m.fallback_gpu_emulation++;
        else if (action == "queued") m.fallback_queued++;
        else if (action == "degraded_notice") m.fallback_degraded_notice++;
        else throw FormatError("unknown fallback action '" + action + "'");
        break;
      }
      case EventKind::job_end: {
        const std::string& job = need(ev, "job");
        auto it = jobs.find(job);
        if (it == jobs.end()) throw FormatError("job_end without a decision");
        const DecisionInfo& d = it->second;
        Integrator::Res& r = touch(d.resource, ev.time_ns);
        if (!released[job]) r.cores_alloc -= d.cores;
        r.gpus_alloc -= d.gpus;
        if (!d.device.empty() && d.mode == CoschedMode::simultaneous)
          touch(d.device, ev.time_ns).qpu_active = false;
        ends[job] = ev.time_ns;
        if (need(ev, "state") == "degraded") degraded.insert(job);
        makespan = std::max(makespan, ev.time_ns);
        break;
      }
    }
  }

  for (auto& [id, r] : acc.res) r.flush(trace.horizon_ns);

  m.makespan_s = s_from_ns(makespan);
  m.pending_job_count =
      static_cast<std::int64_t>(submits.size()) -
      static_cast<std::int64_t>(ends.size());
  m.degraded_job_count = static_cast<std::int64_t>(degraded.size());
  m.completed_job_count =
      static_cast<std::int64_t>(ends.size()) - m.degraded_job_count;

  SimTimeNs window = m.pending_job_count > 0 ? trace.horizon_ns : makespan;
  std::map<Tier, std::int64_t> used, avail;
  for (const auto& [id, r] : acc.res) {
    used[r.tier] += r.alloc_core_ns + r.alloc_gpu_ns + r.qpu_util_ns;
    avail[r.tier] += static_cast<std::int64_t>(r.slots) * window;
  }
  for (Tier t : {Tier::r1, Tier::r2, Tier::r3, Tier::r4}) {
    if (avail.contains(t) && avail[t] > 0) {
      m.tier_utilization[t] =
          static_cast<double>(used[t]) / static_cast<double>(avail[t]);
    }
  }

  int devices = 0;
  double idle_sum = 0;
  for (const TraceResource& r : trace.resources) {
    if (r.qpu_count == 0) continue;
    ++devices;
    std::int64_t exec =
        device_exec_ns.contains(r.resource_id) ? device_exec_ns[r.resource_id] : 0;
    idle_sum += static_cast<double>(trace.horizon_ns - exec) /
                static_cast<double>(trace.horizon_ns);
  }
  if (devices > 0) m.qpu_idle_fraction = idle_sum / devices;

  std::int64_t wait_sum = 0;
  for (const auto& [job, end] : ends) {
    wait_sum += jobs.at(job).start_ns - submits.at(job);
  }
  m.mean_job_wait_s = ends.empty()
                          ? 0.0
                          : s_from_ns(wait_sum) / static_cast<double>(ends.size());

  std::int64_t idle_core = 0;
  for (const auto& [id, r] : acc.res) idle_core += r.idle_core_ns;
  m.cpu_idle_core_s = s_from_ns(idle_core);

  return m;
}

std::vector<JobRow> job_rows_from_trace(const TraceFile& trace) {
  std::map<std::string, JobRow> rows;
  std::map<std::string, DecisionInfo> decisions;
  std::vector<std::string> order;

  for (const TraceEvent& ev : trace.events) {
    switch (ev.kind) {
      case EventKind::job_submit: {
        const std::string& job = need(ev, "job");
        JobRow r;
        r.job_id = job;
        r.submit_s = s_from_ns(ev.time_ns);
        r.state = "pending";
        rows[job] = r;
        order.push_back(job);
        break;
      }
      case EventKind::sched_pass: {
        for (auto& [job, d] : parse_decisions(need(ev, "decisions"), ev.time_ns)) {
          JobRow& r = rows.at(job);
          r.start_s = s_from_ns(ev.time_ns);
          r.wait_s = r.start_s - r.submit_s;
          r.mode = d.mode;
          r.fallback = d.fallback;
          r.resource_id = d.resource;
          r.qpu_id = d.device;
          decisions[job] = std::move(d);
        }
        break;
      }
      case EventKind::fallback: {
        const std::string& job = need(ev, "job");
        if (need(ev, "action") == "queued" && rows.contains(job))
          rows.at(job).fallback = FallbackAction::queued;
        break;
      }
      case EventKind::qpu_phase_start:
        rows.at(need(ev, "job")).shots_executed +=
            to_i64(need(ev, "shots"), "shots");
        break;
      case EventKind::job_end: {
        JobRow& r = rows.at(need(ev, "job"));
        r.end_s = s_from_ns(ev.time_ns);
        r.state = need(ev, "state");
        break;
      }
      default:
        break;
    }
  }
  std::vector<JobRow> out;
  out.reserve(order.size());
  for (const std::string& job : order) out.push_back(rows.at(job));
  return out;
}

std::vector<std::string> check_trace(const TraceFile& trace) {
  std::vector<std::string> problems;
  SimTimeNs last_time = 0;
  std::uint64_t last_seq = 0;
  bool first = true;

  std::set<std::string> started_jobs;
  std::map<std::string, std::set<std::string>> open_tasks;  // job -> nodes
  std::map<std::string, std::string> device_phase;          // device -> job/node
  std::map<std::string, bool> released;
  std::set<std::string> ended_jobs;

  for (size_t i = 0; i < trace.events.size(); ++i) {
    const TraceEvent& ev = trace.events[i];
    if (!first) {
      if (ev.time_ns < last_time)
        problems.push_back("event " + std::to_string(i) + ": time regressed");
      if (ev.seq <= last_seq)
        problems.push_back("event " + std::to_string(i) + ": seq not increasing");
    }
    first = false;
    last_time = ev.time_ns;
    last_seq = ev.seq;

    switch (ev.kind) {
      case EventKind::sched_pass:
        for (auto& [job, d] : parse_decisions(need(ev, "decisions"), ev.time_ns))
          started_jobs.insert(job);
        break;
      case EventKind::task_start: {
        const std::string& job = need(ev, "job");
        if (!started_jobs.contains(job))
          problems.push_back("event " + std::to_string(i) +
                             ": task_start before decision for " + job);
        open_tasks[job].insert(need(ev, "node"));
        break;
      }
      case EventKind::task_end: {
        const std::string& job = need(ev, "job");
        const std::string& node = need(ev, "node");
        if (!open_tasks[job].erase(node))
          problems.push_back("event " + std::to_string(i) +
                             ": task_end without task_start for " + job + "/" +
                             node);
        break;
      }
      case EventKind::qpu_phase_start: {
        const std::string& dev = need(ev, "device");
        if (device_phase.contains(dev))
          problems.push_back("event " + std::to_string(i) +
                             ": overlapping QPU phases on " + dev);
        device_phase[dev] = need(ev, "job") + "/" + need(ev, "node");
        break;
      }
      case EventKind::qpu_phase_end: {
        const std::string& dev = need(ev, "device");
        auto it = device_phase.find(dev);
        if (it == device_phase.end()) {
          problems.push_back("event " + std::to_string(i) +
                             ": phase_end without phase_start on " + dev);
        } else {
          device_phase.erase(it);
        }
        break;
      }
      case EventKind::cores_released: {
        const std::string& job = need(ev, "job");
        if (released[job])
          problems.push_back("event " + std::to_string(i) +
                             ": double cores_released for " + job);
        released[job] = true;
        break;
      }
      case EventKind::cores_reacquired: {
        const std::string& job = need(ev, "job");
        if (!released[job])
          problems.push_back("event " + std::to_string(i) +
                             ": cores_reacquired without release for " + job);
        released[job] = false;
        break;
      }
      case EventKind::job_end: {
        const std::string& job = need(ev, "job");
        ended_jobs.insert(job);
        if (!open_tasks[job].empty())
          problems.push_back("event " + std::to_string(i) + ": job " + job +
                             " ended with unfinished tasks (causality)");
        break;
      }
      default:
        break;
    }
  }

  // A completed trace (footer present) must not leave phases dangling for
  // jobs that ended.
  for (const auto& [dev, owner] : device_phase) {
    std::string job = owner.substr(0, owner.find('/'));
    if (ended_jobs.contains(job))
      problems.push_back("ended job " + job + " left a phase open on " + dev);
  }
  return problems;
}

std::string metrics_to_text(const MetricsReport& m) {
  std::ostringstream out;
  out << "#qhpc-metrics v1\n";
  out << "makespan_s: " << format_double(m.makespan_s) << "\n";
  for (const auto& [tier, util] : m.tier_utilization) {
    out << "util_" << to_string(tier) << ": " << format_double(util) << "\n";
  }
  out << "qpu_idle_fraction: " << format_double(m.qpu_idle_fraction) << "\n";
  out << "mean_job_wait_s: " << format_double(m.mean_job_wait_s) << "\n";
  out << "fallback_gpu_emulation: " << m.fallback_gpu_emulation << "\n";
  out << "fallback_queued: " << m.fallback_queued << "\n";
  out << "fallback_degraded_notice: " << m.fallback_degraded_notice << "\n";
  out << "degraded_job_count: " << m.degraded_job_count << "\n";
  out << "total_shots_executed: " << m.total_shots_executed << "\n";
  out << "cpu_idle_core_s: " << format_double(m.cpu_idle_core_s) << "\n";
  out << "completed_job_count: " << m.completed_job_count << "\n";
  out << "pending_job_count: " << m.pending_job_count << "\n";
  return out.str();
}

MetricsReport metrics_from_text(std::string_view text) {
  MetricsReport m;
  bool saw_header = false;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!line.starts_with("#qhpc-metrics v1"))
        throw FormatError("unsupported metrics header");
      saw_header = true;
      continue;
    }
    size_t colon = line.find(": ");
    if (colon == std::string_view::npos)
      throw FormatError("malformed metrics line '" + std::string(line) + "'");
    std::string key(line.substr(0, colon));
    std::string_view value = line.substr(colon + 2);
    if (key == "makespan_s") m.makespan_s = to_f64(value, key.c_str());
    else if (key == "qpu_idle_fraction") m.qpu_idle_fraction = to_f64(value, key.c_str());
    else if (key == "mean_job_wait_s") m.mean_job_wait_s = to_f64(value, key.c_str());
    else if (key == "fallback_gpu_emulation") m.fallback_gpu_emulation = to_i64(value, key.c_str());
    else if (key == "fallback_queued") m.fallback_queued = to_i64(value, key.c_str());
    else if (key == "fallback_degraded_notice") m.fallback_degraded_notice = to_i64(value, key.c_str());
    else if (key == "degraded_job_count") m.degraded_job_count = to_i64(value, key.c_str());
    else if (key == "total_shots_executed") m.total_shots_executed = to_i64(value, key.c_str());
    else if (key == "cpu_idle_core_s") m.cpu_idle_core_s = to_f64(value, key.c_str());
    else if (key == "completed_job_count") m.completed_job_count = to_i64(value, key.c_str());
    else if (key == "pending_job_count") m.pending_job_count = to_i64(value, key.c_str());
    else if (key.starts_with("util_")) {
      Tier t;
      if (!tier_from_string(key.substr(5), t))
        throw FormatError("unknown tier in '" + key + "'");
      m.tier_utilization[t] = to_f64(value, key.c_str());
    } else {
      throw FormatError("unknown metrics key '" + key + "'");
    }
  }
  if (!saw_header) throw FormatError("missing metrics header");
  return m;
}

std::string job_rows_to_csv(const std::vector<JobRow>& rows) {
  std::ostringstream out;
  out << "job_id,submit_s,start_s,end_s,wait_s,state,mode,fallback,resource,"
         "qpu,shots\n";
  for (const JobRow& r : rows) {
    out << r.job_id << ',' << format_double(r.submit_s) << ','
        << format_double(r.start_s) << ',' << format_double(r.end_s) << ','
        << format_double(r.wait_s) << ',' << r.state << ',' << to_string(r.mode)
        << ',' << to_string(r.fallback) << ',' << r.resource_id << ','
        << r.qpu_id << ',' << r.shots_executed << '\n';
  }
  return out.str();
}

}  // namespace qhpc
