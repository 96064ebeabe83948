#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "actmon/codec.hpp"
#include "actmon/command.hpp"
#include "actmon/time.hpp"

namespace actmon {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Periodic task descriptor. Lower priority value = higher priority.
struct RtTask {
  std::string id;
  Us wcet = 0;               // C_i
  Us period = 0;             // T_i
  Us deadline = 0;           // D_i, constrained: 0 < D <= T
  int priority = 0;
  int actuation_bound = 0;   // N_i, requests per job at design time
  std::vector<bool> access_row;
  std::optional<Us> check_overhead;   // per-task C_i^o override
  std::vector<Us> request_offsets;    // within executed work; empty = evenly spaced

  // Default: offsets at k*C/(N+1), k = 1..N.
  std::vector<Us> effective_offsets() const {
    if (!request_offsets.empty()) return request_offsets;
    std::vector<Us> out;
    for (int k = 1; k <= actuation_bound; ++k)
      out.push_back(wcet * k / (actuation_bound + 1));
    return out;
  }
};

struct Actuator {
  std::string id;
  std::string name;
  CodecPtr codec;
  Payload register_state;  // last applied payload; owned by the simulator
};

class AccessMatrix {
 public:
  AccessMatrix() = default;
  AccessMatrix(std::size_t tasks, std::size_t actuators)
      : tasks_(tasks), actuators_(actuators), bits_(tasks * actuators, false) {}

  std::size_t task_count() const { return tasks_; }
  std::size_t actuator_count() const { return actuators_; }

  void set(std::size_t i, std::size_t k, bool allowed) { bits_.at(index(i, k)) = allowed; }
  bool at(std::size_t i, std::size_t k) const { return bits_.at(index(i, k)); }

 private:
  std::size_t index(std::size_t i, std::size_t k) const {
    if (i >= tasks_ || k >= actuators_)
      throw std::out_of_range("access matrix index (" + std::to_string(i) + "," +
                              std::to_string(k) + ") out of " + std::to_string(tasks_) + "x" +
                              std::to_string(actuators_));
    return i * actuators_ + k;
  }

  std::size_t tasks_ = 0;
  std::size_t actuators_ = 0;
  std::vector<bool> bits_;
};

inline bool has_permission(const AccessMatrix& matrix, std::size_t task, std::size_t actuator) {
  return matrix.at(task, actuator);
}

// Sensed signals at one instant. Keys ordered for deterministic traversal.
struct SystemState {
  Us time = 0;
  std::map<std::string, double> signals;

  double signal(const std::string& name) const;
};

struct MissingSignalError : std::runtime_error {
  explicit MissingSignalError(const std::string& name)
      : std::runtime_error("signal not present in system state: " + name) {}
};

inline double SystemState::signal(const std::string& name) const {
  auto it = signals.find(name);
  if (it == signals.end()) throw MissingSignalError(name);
  return it->second;
}

// One command attempt from a task to an actuator. `command` is absent for
// raw payload injections that were never built from a symbolic command.
struct ActuationRequest {
  std::string task_id;
  std::string actuator_id;
  std::optional<Command> command;
  Payload payload;
  Us issue_time = 0;
};

enum class Verdict { Allow, Ignore, Override };

enum class Reason {
  NoPermission,
  RateLimited,
  InvariantMismatch,
  InvariantSatisfied,
  NoRuleApplies,
};

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Allow: return "allow";
    case Verdict::Ignore: return "ignore";
    case Verdict::Override: return "override";
  }
  return "?";
}

inline const char* to_string(Reason r) {
  switch (r) {
    case Reason::NoPermission: return "no_permission";
    case Reason::RateLimited: return "rate_limited";
    case Reason::InvariantMismatch: return "invariant_mismatch";
    case Reason::InvariantSatisfied: return "invariant_satisfied";
    case Reason::NoRuleApplies: return "no_rule_applies";
  }
  return "?";
}

// The monitor's sole output.
struct MonitorDecision {
  Verdict verdict = Verdict::Ignore;
  std::optional<Command> override_command;  // present iff verdict == Override
  Reason reason = Reason::NoPermission;
};

inline void validate_taskset(const std::vector<RtTask>& tasks, std::size_t actuator_count) {
  std::set<int> priorities;
  std::set<std::string> names;
  for (const auto& t : tasks) {
    if (t.wcet <= 0) throw ConfigError("task " + t.id + ": wcet must be > 0");
    if (t.deadline <= 0 || t.deadline > t.period)
      throw ConfigError("task " + t.id + ": need 0 < deadline <= period");
    if (t.actuation_bound < 0) throw ConfigError("task " + t.id + ": negative actuation bound");
    if (!priorities.insert(t.priority).second)
      throw ConfigError("duplicate priority " + std::to_string(t.priority) + " (task " + t.id + ")");
    if (!names.insert(t.id).second) throw ConfigError("duplicate task id: " + t.id);
    if (t.access_row.size() != actuator_count)
      throw ConfigError("task " + t.id + ": access row length does not match actuator count");
    for (Us off : t.request_offsets)
      if (off < 0 || off > t.wcet)
        throw ConfigError("task " + t.id + ": request offset outside [0, wcet]");
    if (!t.request_offsets.empty() &&
        t.request_offsets.size() != static_cast<std::size_t>(t.actuation_bound))
      throw ConfigError("task " + t.id + ": offsets count must equal actuation_bound");
  }
}

}  // namespace actmon
