#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "actmon/codec.hpp"
#include "actmon/core.hpp"
#include "actmon/monitor.hpp"
#include "actmon/plant.hpp"
#include "actmon/prng.hpp"
#include "actmon/rta.hpp"
#include "actmon/rules.hpp"
#include "actmon/time.hpp"

namespace actmon {

// What a task does with its actuation slots. Control behaviors read the
// current sensor snapshot at request time, mirroring the vendor loops the
// invariant rules were written from.
struct TaskBehavior {
  enum class Kind { None, RoverPid, ArmAlternate, WaterMonitor, Fixed };
  Kind kind = Kind::None;
  std::string target;          // actuator id
  std::vector<Command> fixed;  // Fixed: cycled request by request

  // RoverPid thresholds; must agree with the loaded rules for a clean run.
  double theta = 2500;
  std::int64_t turn_speed = 120;    // delta_1
  std::int64_t cruise_speed = 100;  // delta_2

  // WaterMonitor thresholds.
  double level_threshold = 80;
  double temp_lo = 10;
  double temp_hi = 40;

  Command decide(const SystemState& state, long request_no) const {
    switch (kind) {
      case Kind::RoverPid: {
        double lf = state.signal("s_LF");
        if (lf < -theta) return Command{{{"st_sp", turn_speed}, {"rht", std::nullopt}}};
        if (lf > theta) return Command{{{"st_sp", turn_speed}, {"lft", std::nullopt}}};
        return Command{{{"st_sp", cruise_speed}, {"fwd", std::nullopt}}};
      }
      case Kind::ArmAlternate:
        return Command::single(state.signal("s_grip") == 0.0 ? "grip_open" : "grip_close");
      case Kind::WaterMonitor: {
        bool alarm = state.signal("s_WL") > level_threshold ||
                     !(state.signal("s_WT") >= temp_lo && state.signal("s_WT") <= temp_hi);
        return Command::single(alarm ? "ON" : "OFF");
      }
      case Kind::Fixed:
        return fixed[static_cast<std::size_t>(request_no) % fixed.size()];
      case Kind::None:
        break;
    }
    return Command{};
  }
};

// Logic-bomb model: within [t_start, t_end) the victim task's requests are
// corrupted (Spoof) or extra burst requests are issued (DosBurst).
struct AttackScript {
  enum class Mode { Spoof, DosBurst };
  using SpoofItem = std::variant<Command, Payload>;

  Mode mode = Mode::Spoof;
  std::string task_id;
  Us t_start = 0;
  Us t_end = 0;
  std::vector<SpoofItem> items;         // Spoof: cycled per corrupted request
  std::optional<std::string> actuator;  // Spoof target override; DosBurst target
  Command burst_command;
  int count_per_job = 0;                // DosBurst, >= 2

  bool active_at(Us t) const { return t >= t_start && t < t_end; }
};

struct Scenario {
  std::string name = "scenario";
  std::vector<RtTask> tasks;
  std::vector<TaskBehavior> behaviors;  // parallel to tasks
  std::vector<Actuator> actuators;

  std::string plant_model = "none";
  RoverPlant::Params rover_params;
  ArmPlant::Params arm_params;
  WaterTankPlant::Params tank_params;

  RuleSet rules;
  Strategy default_strategy = Strategy::Ignore;
  std::map<std::pair<std::string, std::string>, Strategy> strategy_overrides;
  Us check_overhead = 0;
  bool deny_unmatched = false;

  std::vector<AttackScript> attacks;

  Us horizon = 0;
  Us tick = 1000;
  std::uint64_t seed = 0;
  bool monitor_enabled = true;
  bool exec_jitter = false;
  bool fail_on_miss = false;

  PlantPtr make_plant() const {
    if (plant_model == "rover") return std::make_unique<RoverPlant>(rover_params);
    if (plant_model == "arm") return std::make_unique<ArmPlant>(arm_params);
    if (plant_model == "water_tank") return std::make_unique<WaterTankPlant>(tank_params);
    if (plant_model == "none") return std::make_unique<NullPlant>();
    throw ConfigError("unknown plant model: " + plant_model);
  }

  const Actuator* find_actuator(const std::string& id) const {
    for (const auto& a : actuators)
      if (a.id == id) return &a;
    return nullptr;
  }

  AccessMatrix access_matrix() const {
    AccessMatrix m(tasks.size(), actuators.size());
    for (std::size_t i = 0; i < tasks.size(); ++i)
      for (std::size_t k = 0; k < actuators.size(); ++k)
        m.set(i, k, tasks[i].access_row.at(k));
    return m;
  }

  MonitorConfig monitor_config() const {
    MonitorConfig cfg;
    cfg.access = access_matrix();
    for (const auto& t : tasks) cfg.task_ids.push_back(t.id);
    for (const auto& a : actuators) {
      cfg.actuator_ids.push_back(a.id);
      cfg.codecs[a.id] = a.codec;
    }
    cfg.rules = rules;
    cfg.default_strategy = default_strategy;
    cfg.strategy_overrides = strategy_overrides;
    cfg.check_overhead = check_overhead;
    cfg.deny_unmatched = deny_unmatched;
    cfg.enabled = monitor_enabled;
    return cfg;
  }

  Us hyperperiod() const {
    Us h = 1;
    for (const auto& t : tasks) h = lcm_us(h, t.period);
    return h;
  }
};

struct SchedEvent {
  enum class Kind { Release, Complete, DeadlineMiss, Preempt };
  Us time = 0;
  Kind kind = Kind::Release;
  std::string task;
  long job = 0;
};

inline const char* to_string(SchedEvent::Kind k) {
  switch (k) {
    case SchedEvent::Kind::Release: return "release";
    case SchedEvent::Kind::Complete: return "complete";
    case SchedEvent::Kind::DeadlineMiss: return "deadline_miss";
    case SchedEvent::Kind::Preempt: return "preempt";
  }
  return "?";
}

struct ApplyEvent {
  Us time = 0;
  std::string actuator;
  Payload payload;
};

// Contiguous stretch of CPU given to one job; mediation spans are the
// checker's non-preemptible sections.
struct RunSpan {
  Us begin = 0;
  Us end = 0;
  std::string task;
  long job = 0;
  bool mediation = false;
};

struct SimTrace {
  std::vector<SchedEvent> sched;
  std::vector<DecisionRecord> decisions;
  std::vector<ApplyEvent> applied;
  std::vector<RunSpan> run_spans;
  std::vector<std::string> plant_columns;  // signal names then readout names
  struct PlantRow {
    Us time;
    std::vector<double> values;
  };
  std::vector<PlantRow> plant_rows;
  std::string primary_readout;

  long deadline_misses = 0;
  std::map<std::string, Us> max_response;  // over completed jobs
  std::map<std::string, long> completed_jobs;

  long count(Verdict v) const {
    long n = 0;
    for (const auto& d : decisions)
      if (d.decision.verdict == v) ++n;
    return n;
  }

  std::optional<double> plant_value(Us time, const std::string& column) const {
    std::size_t col = 0;
    for (; col < plant_columns.size(); ++col)
      if (plant_columns[col] == column) break;
    if (col == plant_columns.size()) return std::nullopt;
    for (const auto& row : plant_rows)
      if (row.time == time) return row.values[col];
    return std::nullopt;
  }

  void write_decisions_csv(std::ostream& os) const;
  void write_plant_csv(std::ostream& os) const;
  void write_plot_file(std::ostream& os) const;  // two columns: time_us value
  void write_summary(std::ostream& os) const;
};

namespace detail {

inline void format_value(std::ostream& os, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  os << buf;
}

}  // namespace detail

inline void write_decision_records_csv(const std::vector<DecisionRecord>& records,
                                       std::ostream& os) {
  os << "time_us,task,actuator,requested_cmd,payload_hex,verdict,reason,applied_cmd,"
        "window_count\n";
  for (const auto& rec : records) {
    os << rec.request.issue_time << ',' << rec.request.task_id << ',' << rec.request.actuator_id
       << ',' << (rec.request.command ? rec.request.command->to_string() : "?") << ','
       << payload_hex(rec.request.payload) << ',' << to_string(rec.decision.verdict) << ','
       << to_string(rec.decision.reason) << ','
       << (rec.applied ? rec.applied->to_string()
                       : (rec.decision.verdict == Verdict::Ignore ? "" : "?"))
       << ',' << rec.window_count << '\n';
  }
}

inline void SimTrace::write_decisions_csv(std::ostream& os) const {
  write_decision_records_csv(decisions, os);
}

inline void SimTrace::write_plant_csv(std::ostream& os) const {
  os << "time_us";
  for (const auto& c : plant_columns) os << ',' << c;
  os << '\n';
  for (const auto& row : plant_rows) {
    os << row.time;
    for (double v : row.values) {
      os << ',';
      detail::format_value(os, v);
    }
    os << '\n';
  }
}

inline void SimTrace::write_plot_file(std::ostream& os) const {
  std::size_t col = 0;
  for (; col < plant_columns.size(); ++col)
    if (plant_columns[col] == primary_readout) break;
  if (col == plant_columns.size()) return;
  os << "# time_us " << primary_readout << '\n';
  for (const auto& row : plant_rows) {
    os << row.time << ' ';
    detail::format_value(os, row.values[col]);
    os << '\n';
  }
}

inline void SimTrace::write_summary(std::ostream& os) const {
  os << "requests " << decisions.size() << ", allow " << count(Verdict::Allow) << ", ignore "
     << count(Verdict::Ignore) << ", override " << count(Verdict::Override)
     << ", deadline misses " << deadline_misses << '\n';
  for (const auto& [task, r] : max_response)
    os << "task " << task << ": " << completed_jobs.at(task) << " jobs, max response "
       << ms_string(r) << " ms\n";
}

// Deterministic microsecond-stepped engine: fixed-priority preemptive
// scheduling, each mediation a non-preemptible section of length C°,
// plant stepped at tick resolution. Identical scenarios (including seed)
// produce identical traces.
class SimEngine {
 public:
  explicit SimEngine(const Scenario& scenario)
      : scenario_(scenario), monitor_(scenario.monitor_config()), rng_(scenario.seed) {}

  SimTrace run() {
    PlantPtr plant = scenario_.make_plant();
    actuators_ = scenario_.actuators;  // working copies; register_state mutates

    SimTrace trace;
    trace.plant_columns = plant->signal_names();
    for (const auto& r : plant->readout_names()) trace.plant_columns.push_back(r);
    trace.primary_readout = plant->primary_readout();

    snapshot_ = plant->state(0);
    record_plant_row(*plant, trace, 0);

    const Us horizon = scenario_.horizon;
    for (Us t = 0; t < horizon; ++t) {
      release_jobs(t, trace);
      if (t > 0 && t % scenario_.tick == 0) {
        plant->step(scenario_.tick);
        snapshot_ = plant->state(t);
        record_plant_row(*plant, trace, t);
      }
      if (mediation_ && mediation_->ends_at == t) finish_mediation(*plant, trace, t);
      check_deadlines(t, trace);
      if (!mediation_) compact_jobs();
      execute_microsecond(*plant, trace, t);
    }
    if (horizon > 0 && horizon % scenario_.tick == 0) {
      plant->step(scenario_.tick);
      record_plant_row(*plant, trace, horizon);
    }
    // deadlines landing exactly on the horizon still count
    for (auto& job : jobs_) {
      if (job.completed || job.missed || job.abs_deadline > horizon) continue;
      job.missed = true;
      ++trace.deadline_misses;
      trace.sched.push_back({job.abs_deadline, SchedEvent::Kind::DeadlineMiss,
                             scenario_.tasks[job.task_index].id, job.number});
    }

    trace.decisions = monitor_.decision_log();
    return trace;
  }

  const ReferenceMonitor& monitor() const { return monitor_; }

 private:
  struct PendingRequest {
    Us offset;  // executed-work point at which it fires
    bool burst;
    std::size_t attack_index = 0;
  };

  struct Job {
    std::size_t task_index = 0;
    long number = 0;
    Us release = 0;
    Us abs_deadline = 0;
    Us work_total = 0;
    Us work_done = 0;
    std::size_t next_request = 0;
    std::vector<PendingRequest> requests;
    bool completed = false;
    bool missed = false;
  };

  struct Mediation {
    std::size_t job_slot = 0;
    Us ends_at = 0;
    ActuationRequest request;
    MonitorDecision decision;
  };

  void release_jobs(Us t, SimTrace& trace) {
    for (std::size_t i = 0; i < scenario_.tasks.size(); ++i) {
      const RtTask& task = scenario_.tasks[i];
      if (t % task.period != 0) continue;
      Job job;
      job.task_index = i;
      job.number = static_cast<long>(t / task.period);
      job.release = t;
      job.abs_deadline = t + task.deadline;
      job.work_total = job_work(task);
      for (Us off : task.effective_offsets())
        job.requests.push_back({std::min(off, job.work_total), false, 0});
      for (std::size_t a = 0; a < scenario_.attacks.size(); ++a) {
        const AttackScript& attack = scenario_.attacks[a];
        if (attack.mode != AttackScript::Mode::DosBurst || attack.task_id != task.id) continue;
        for (int k = 1; k <= attack.count_per_job; ++k)
          job.requests.push_back({job.work_total * k / (attack.count_per_job + 1), true, a});
      }
      std::stable_sort(
          job.requests.begin(), job.requests.end(),
          [](const PendingRequest& x, const PendingRequest& y) { return x.offset < y.offset; });
      jobs_.push_back(std::move(job));
      trace.sched.push_back({t, SchedEvent::Kind::Release, task.id, jobs_.back().number});
      monitor_.on_job_release(task.id, t);
    }
  }

  Us job_work(const RtTask& task) {
    if (!scenario_.exec_jitter) return task.wcet;
    Us low = task.wcet * 8 / 10;
    return low + static_cast<Us>(rng_.below(static_cast<std::uint64_t>(task.wcet - low + 1)));
  }

  void check_deadlines(Us t, SimTrace& trace) {
    for (auto& job : jobs_) {
      if (job.completed || job.missed || job.abs_deadline != t) continue;
      job.missed = true;
      ++trace.deadline_misses;
      trace.sched.push_back(
          {t, SchedEvent::Kind::DeadlineMiss, scenario_.tasks[job.task_index].id, job.number});
    }
  }

  void compact_jobs() {
    jobs_.erase(std::remove_if(jobs_.begin(), jobs_.end(),
                               [](const Job& j) { return j.completed; }),
                jobs_.end());
  }

  // Highest priority wins; FIFO within one task (priorities are unique).
  std::size_t pick_ready() const {
    std::size_t best = jobs_.size();
    for (std::size_t j = 0; j < jobs_.size(); ++j) {
      const Job& job = jobs_[j];
      if (job.completed) continue;
      if (best == jobs_.size()) {
        best = j;
        continue;
      }
      const Job& incumbent = jobs_[best];
      int pj = scenario_.tasks[job.task_index].priority;
      int pb = scenario_.tasks[incumbent.task_index].priority;
      if (pj < pb || (pj == pb && job.release < incumbent.release)) best = j;
    }
    return best;
  }

  void note_run(SimTrace& trace, Us t, const std::string& task, long job, bool mediation) {
    if (!trace.run_spans.empty()) {
      RunSpan& last = trace.run_spans.back();
      if (last.end == t && last.task == task && last.job == job && last.mediation == mediation) {
        last.end = t + 1;
        return;
      }
      if (last.task != task || last.job != job) {
        // preempted if the previous runner still has something left to do
        for (const auto& j : jobs_)
          if (!j.completed && scenario_.tasks[j.task_index].id == last.task && j.number == last.job)
            trace.sched.push_back({t, SchedEvent::Kind::Preempt, last.task, last.job});
      }
    }
    trace.run_spans.push_back({t, t + 1, task, job, mediation});
  }

  void execute_microsecond(Plant& plant, SimTrace& trace, Us t) {
    if (mediation_) {  // checker busy: the owning job holds the CPU
      const Job& owner = jobs_[mediation_->job_slot];
      note_run(trace, t, scenario_.tasks[owner.task_index].id, owner.number, true);
      return;
    }
    for (;;) {
      std::size_t slot = pick_ready();
      if (slot == jobs_.size()) return;  // idle microsecond
      Job& job = jobs_[slot];
      const RtTask& task = scenario_.tasks[job.task_index];

      // Fire any request due at the current progress point.
      while (job.next_request < job.requests.size() &&
             job.requests[job.next_request].offset <= job.work_done) {
        PendingRequest pending = job.requests[job.next_request];
        ++job.next_request;
        if (pending.burst && !scenario_.attacks[pending.attack_index].active_at(t)) continue;
        start_mediation(plant, trace, slot, pending, t);
        if (mediation_) {
          note_run(trace, t, task.id, job.number, true);
          return;
        }
      }

      if (job.work_done < job.work_total) {
        note_run(trace, t, task.id, job.number, false);
        ++job.work_done;
        if (job.work_done == job.work_total && job.next_request >= job.requests.size())
          complete_job(trace, slot, t + 1);
        return;
      }
      // No work left and the remaining requests were zero-cost or skipped:
      // the job is done without consuming this microsecond.
      complete_job(trace, slot, t);
    }
  }

  void complete_job(SimTrace& trace, std::size_t slot, Us time) {
    Job& job = jobs_[slot];
    job.completed = true;
    const std::string& id = scenario_.tasks[job.task_index].id;
    trace.sched.push_back({time, SchedEvent::Kind::Complete, id, job.number});
    Us response = time - job.release;
    auto [it, inserted] = trace.max_response.try_emplace(id, response);
    if (!inserted) it->second = std::max(it->second, response);
    ++trace.completed_jobs[id];
  }

  void start_mediation(Plant& plant, SimTrace& trace, std::size_t slot,
                       const PendingRequest& pending, Us t) {
    Job& job = jobs_[slot];
    const RtTask& task = scenario_.tasks[job.task_index];
    const TaskBehavior& behavior = scenario_.behaviors[job.task_index];

    ActuationRequest request;
    request.task_id = task.id;
    request.issue_time = t;
    request.actuator_id = behavior.target;

    if (pending.burst) {
      const AttackScript& attack = scenario_.attacks[pending.attack_index];
      if (attack.actuator) request.actuator_id = *attack.actuator;
      request.command = attack.burst_command;
    } else if (std::size_t spoof = active_spoof_index(task.id, t); spoof != scenario_.attacks.size()) {
      const AttackScript& attack = scenario_.attacks[spoof];
      if (attack.actuator) request.actuator_id = *attack.actuator;
      const auto& item = attack.items[spoof_cursor_[spoof]++ % attack.items.size()];
      if (const auto* cmd = std::get_if<Command>(&item))
        request.command = *cmd;
      else
        request.payload = std::get<Payload>(item);
    } else if (behavior.kind != TaskBehavior::Kind::None) {
      request.command = behavior.decide(snapshot_, issued_counter_[job.task_index]++);
    } else {
      return;  // nothing to issue
    }

    if (request.command) {
      const Actuator* actuator = scenario_.find_actuator(request.actuator_id);
      if (actuator) request.payload = encode_command(*actuator->codec, *request.command);
    }

    MonitorDecision decision = monitor_.mediate(request, snapshot_);
    Us overhead = monitor_.check_overhead();
    Mediation m;
    m.job_slot = slot;
    m.ends_at = t + overhead;
    m.request = std::move(request);
    m.decision = decision;
    if (overhead == 0)
      apply_decision(plant, trace, m, t);
    else
      mediation_ = std::move(m);
  }

  std::size_t active_spoof_index(const std::string& task_id, Us t) const {
    for (std::size_t a = 0; a < scenario_.attacks.size(); ++a) {
      const AttackScript& attack = scenario_.attacks[a];
      if (attack.mode == AttackScript::Mode::Spoof && attack.task_id == task_id &&
          attack.active_at(t))
        return a;
    }
    return scenario_.attacks.size();
  }

  void finish_mediation(Plant& plant, SimTrace& trace, Us t) {
    Mediation m = std::move(*mediation_);
    mediation_.reset();
    apply_decision(plant, trace, m, t);
    Job& job = jobs_[m.job_slot];
    if (!job.completed && job.work_done >= job.work_total && job.next_request >= job.requests.size())
      complete_job(trace, m.job_slot, t);
  }

  void apply_decision(Plant& plant, SimTrace& trace, const Mediation& m, Us t) {
    Payload to_apply;
    if (m.decision.verdict == Verdict::Allow) {
      to_apply = m.request.payload;
    } else if (m.decision.verdict == Verdict::Override) {
      const Actuator* actuator = scenario_.find_actuator(m.request.actuator_id);
      if (actuator && m.decision.override_command)
        to_apply = encode_command(*actuator->codec, *m.decision.override_command);
    } else {
      return;  // ignored: actuator keeps its last uncompromised state
    }
    if (to_apply.empty()) return;
    for (auto& actuator : actuators_)
      if (actuator.id == m.request.actuator_id) actuator.register_state = to_apply;
    plant.apply(m.request.actuator_id, to_apply, t);
    trace.applied.push_back({t, m.request.actuator_id, to_apply});
  }

  void record_plant_row(const Plant& plant, SimTrace& trace, Us t) {
    SimTrace::PlantRow row;
    row.time = t;
    SystemState s = plant.state(t);
    for (const auto& name : plant.signal_names()) row.values.push_back(s.signals.at(name));
    for (double v : plant.readouts()) row.values.push_back(v);
    trace.plant_rows.push_back(std::move(row));
  }

  const Scenario& scenario_;
  ReferenceMonitor monitor_;
  SplitMix64 rng_;
  std::vector<Actuator> actuators_;
  std::vector<Job> jobs_;
  std::optional<Mediation> mediation_;
  SystemState snapshot_;
  std::map<std::size_t, long> issued_counter_;
  std::map<std::size_t, std::size_t> spoof_cursor_;
};

inline SimTrace run(const Scenario& scenario) { return SimEngine(scenario).run(); }

// Arm spoofing demonstration; the trace's applied pulse sequence is the
// object under test (attack pulses visible without the monitor, only the
// declared open/close pulses with it).
inline SimTrace run_arm_demo(const Scenario& scenario) {
  if (scenario.plant_model != "arm") throw ConfigError("arm demo requires plant model 'arm'");
  return run(scenario);
}

inline std::vector<std::pair<Us, int>> applied_arm_pulses(const SimTrace& trace) {
  std::vector<std::pair<Us, int>> out;
  for (const auto& ev : trace.applied)
    for (std::size_t off = 0; off + 4 <= ev.payload.size(); off += 4) {
      Payload frame(ev.payload.begin() + off, ev.payload.begin() + off + 4);
      if (auto pulse = ArmPulseCodec::frame_pulse(frame)) out.push_back({ev.time, *pulse});
    }
  return out;
}

struct CrossValidationRow {
  std::string task;
  bool analysis_schedulable = false;
  Us analysis_response = 0;
  std::optional<Us> sim_max_response;
  Us slack = 0;       // analysis R minus simulated max, when both known
  bool violation = false;
};

struct CrossValidationReport {
  std::vector<CrossValidationRow> rows;
  bool analysis_schedulable = false;
  long simulated_misses = 0;
  Us horizon_used = 0;
  bool sound = true;  // no task observed beyond its analysed bound
};

// Compares the analysed response-time bounds against a synchronous-release
// run of the simulator (attacks off, exact execution times, monitor on so
// C° sections materialize). Analysis bounds must dominate.
inline CrossValidationReport cross_validate(const Scenario& scenario) {
  Scenario s = scenario;
  s.attacks.clear();
  s.exec_jitter = false;
  s.monitor_enabled = true;
  Us horizon = std::max(s.horizon, s.hyperperiod());
  if (horizon % s.tick != 0) horizon += s.tick - horizon % s.tick;
  s.horizon = horizon;

  RtaReport analysis = analyze(s.tasks, s.check_overhead);
  SimTrace trace = run(s);

  CrossValidationReport report;
  report.analysis_schedulable = analysis.schedulable;
  report.simulated_misses = trace.deadline_misses;
  report.horizon_used = horizon;
  for (const auto& row : analysis.tasks) {
    CrossValidationRow out;
    out.task = row.task;
    out.analysis_schedulable = row.schedulable;
    out.analysis_response = row.response;
    auto it = trace.max_response.find(row.task);
    if (it != trace.max_response.end()) out.sim_max_response = it->second;
    if (row.schedulable && out.sim_max_response) {
      out.violation = *out.sim_max_response > row.response;
      out.slack = row.response - *out.sim_max_response;
    }
    report.sound = report.sound && !out.violation;
    report.rows.push_back(std::move(out));
  }
  if (analysis.schedulable && trace.deadline_misses > 0) report.sound = false;
  return report;
}

}  // namespace actmon
