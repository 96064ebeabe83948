#pragma once

#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "actmon/codec.hpp"
#include "actmon/core.hpp"
#include "actmon/rules.hpp"

namespace actmon {

struct TimeRegressionError : std::runtime_error {
  explicit TimeRegressionError(const std::string& what) : std::runtime_error(what) {}
};

enum class Strategy { Ignore, FailSafe };

inline const char* to_string(Strategy s) {
  return s == Strategy::Ignore ? "ignore" : "fail_safe";
}

// Request count bookkeeping for one (task, actuator) rate rule. Period
// windows reset at each job release of the task; sliding windows keep the
// request timestamps of the last `duration` microseconds.
struct RateWindow {
  RateWindowSpec spec;
  int threshold = 0;
  int count = 0;            // period window
  std::deque<Us> stamps;    // sliding window
  Us window_start = 0;

  int current_count() const {
    return spec.kind == RateWindowSpec::Kind::Period ? count : static_cast<int>(stamps.size());
  }

  void record(Us now) {
    if (spec.kind == RateWindowSpec::Kind::Period)
      ++count;
    else
      stamps.push_back(now);
  }
};

class RateWindowTable {
 public:
  void add_rule(const RateControlRule& rule) {
    RateWindow w;
    w.spec = rule.window;
    w.threshold = rule.threshold;
    windows_[{rule.task_id, rule.actuator_id}] = w;
  }

  RateWindow* find(const std::string& task, const std::string& actuator) {
    auto it = windows_.find({task, actuator});
    return it == windows_.end() ? nullptr : &it->second;
  }

  void on_job_release(const std::string& task, Us time) {
    check_monotonic(time);
    for (auto& [key, w] : windows_) {
      if (key.first != task) continue;
      if (w.spec.kind == RateWindowSpec::Kind::Period) {
        w.count = 0;
        w.window_start = time;
      }
    }
  }

  // Evicts sliding-window entries older than the duration: a stamp at
  // t survives while t > now - duration.
  void advance_time(Us now) {
    check_monotonic(now);
    for (auto& [key, w] : windows_) {
      if (w.spec.kind != RateWindowSpec::Kind::Sliding) continue;
      while (!w.stamps.empty() && w.stamps.front() <= now - w.spec.duration) w.stamps.pop_front();
    }
  }

 private:
  void check_monotonic(Us time) {
    if (time < last_time_)
      throw TimeRegressionError("window event at " + std::to_string(time) +
                                "us precedes " + std::to_string(last_time_) + "us");
    last_time_ = time;
  }

  std::map<std::pair<std::string, std::string>, RateWindow> windows_;
  Us last_time_ = 0;
};

struct MonitorConfig {
  AccessMatrix access;
  std::vector<std::string> task_ids;                 // row order of the matrix
  std::vector<std::string> actuator_ids;             // column order
  std::map<std::string, CodecPtr> codecs;            // actuator id -> codec
  RuleSet rules;
  Strategy default_strategy = Strategy::Ignore;
  std::map<std::pair<std::string, std::string>, Strategy> strategy_overrides;
  Us check_overhead = 0;      // C° charged per mediated request
  bool deny_unmatched = false;  // deny instead of allow when no rule applies
  bool enabled = true;          // off = permission check + logging only

  Strategy strategy_for(const std::string& task, const std::string& actuator) const {
    auto it = strategy_overrides.find({task, actuator});
    return it == strategy_overrides.end() ? default_strategy : it->second;
  }
};

// Audit record for one mediated request.
struct DecisionRecord {
  ActuationRequest request;
  MonitorDecision decision;
  std::optional<Command> applied;  // command actually sent on, if any
  SystemState state;               // snapshot the decision was made on
  int window_count = 0;            // running count after this attempt
};

// The trusted checker: every actuation request passes through mediate(),
// one at a time, in a single total order. Decisions are pure in
// (request, state, window, config); the log is append-only.
class ReferenceMonitor {
 public:
  explicit ReferenceMonitor(MonitorConfig config) : config_(std::move(config)) {
    for (std::size_t i = 0; i < config_.task_ids.size(); ++i) task_index_[config_.task_ids[i]] = i;
    for (std::size_t k = 0; k < config_.actuator_ids.size(); ++k)
      actuator_index_[config_.actuator_ids[k]] = k;
    if (config_.enabled)
      for (const auto& r : config_.rules.rules)
        if (auto* rc = std::get_if<RateControlRule>(&r)) windows_.add_rule(*rc);
  }

  const MonitorConfig& config() const { return config_; }
  Us check_overhead() const { return config_.enabled ? config_.check_overhead : 0; }

  void on_job_release(const std::string& task, Us time) {
    if (config_.enabled) windows_.on_job_release(task, time);
  }

  MonitorDecision mediate(const ActuationRequest& request, const SystemState& state) {
    MonitorDecision decision = decide(request, state);
    DecisionRecord record;
    record.request = request;
    record.decision = decision;
    record.state = state;
    record.window_count = last_window_count_;
    if (decision.verdict == Verdict::Allow) record.applied = requested_command(request);
    if (decision.verdict == Verdict::Override) record.applied = decision.override_command;
    log_.push_back(std::move(record));
    return decision;
  }

  const std::vector<DecisionRecord>& decision_log() const { return log_; }
  const std::vector<std::string>& config_errors() const { return errors_; }

  void write_decision_csv(std::ostream& os) const {
    os << "time_us,task,actuator,requested_cmd,payload_hex,verdict,reason,applied_cmd,"
          "window_count\n";
    for (const auto& rec : log_) {
      std::optional<Command> requested = requested_command(rec.request);
      os << rec.request.issue_time << ',' << rec.request.task_id << ',' << rec.request.actuator_id
         << ',' << (requested ? requested->to_string() : "?") << ','
         << payload_hex(rec.request.payload) << ',' << to_string(rec.decision.verdict) << ','
         << to_string(rec.decision.reason) << ','
         << (rec.applied ? rec.applied->to_string()
                         : (rec.decision.verdict == Verdict::Ignore ? "" : "?"))
         << ',' << rec.window_count << '\n';
    }
  }

 private:
  // The payload is the wire truth; the symbolic field of a request is only
  // a convenience and is never trusted for checking.
  std::optional<Command> requested_command(const ActuationRequest& request) const {
    auto it = config_.codecs.find(request.actuator_id);
    if (it != config_.codecs.end() && !request.payload.empty())
      return decode_command(*it->second, request.payload);
    return request.command;
  }

  MonitorDecision decide(const ActuationRequest& request, const SystemState& state) {
    last_window_count_ = 0;

    // (1) access matrix
    auto ti = task_index_.find(request.task_id);
    auto ai = actuator_index_.find(request.actuator_id);
    if (ti == task_index_.end() || ai == actuator_index_.end() ||
        !has_permission(config_.access, ti->second, ai->second))
      return {Verdict::Ignore, std::nullopt, Reason::NoPermission};

    if (!config_.enabled) return {Verdict::Allow, std::nullopt, Reason::NoRuleApplies};

    // (2) rate control; attempts count toward the bound even when rejected
    if (RateWindow* window = windows_.find(request.task_id, request.actuator_id)) {
      windows_.advance_time(request.issue_time);
      bool violates = window->current_count() + 1 >= window->threshold;
      window->record(request.issue_time);
      last_window_count_ = window->current_count();
      if (violates) return {Verdict::Ignore, std::nullopt, Reason::RateLimited};
    }

    // (3) decode; an unrecognizable payload is an invariant mismatch
    std::optional<Command> requested = requested_command(request);

    std::optional<Command> expected;
    try {
      expected = expected_command(config_.rules, request.actuator_id, state);
    } catch (const MissingSignalError& e) {
      errors_.push_back(std::string(e.what()) + " (request at " +
                        std::to_string(request.issue_time) + "us)");
      return {Verdict::Ignore, std::nullopt, Reason::InvariantMismatch};
    }

    // (4) requested matches the predicted command
    if (requested && expected && *requested == *expected)
      return {Verdict::Allow, std::nullopt, Reason::InvariantSatisfied};

    // (6) nothing applies; permissive by default, deny when configured
    if (!expected && requested) {
      if (config_.deny_unmatched) return {Verdict::Ignore, std::nullopt, Reason::NoRuleApplies};
      return {Verdict::Allow, std::nullopt, Reason::NoRuleApplies};
    }

    // (5) mismatch (or undecodable payload): strategy decides
    if (config_.strategy_for(request.task_id, request.actuator_id) == Strategy::FailSafe &&
        expected)
      return {Verdict::Override, expected, Reason::InvariantMismatch};
    return {Verdict::Ignore, std::nullopt, Reason::InvariantMismatch};
  }

  MonitorConfig config_;
  RateWindowTable windows_;
  std::map<std::string, std::size_t> task_index_;
  std::map<std::string, std::size_t> actuator_index_;
  std::vector<DecisionRecord> log_;
  std::vector<std::string> errors_;
  int last_window_count_ = 0;
};

}  // namespace actmon
