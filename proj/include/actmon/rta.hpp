#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "actmon/core.hpp"
#include "actmon/time.hpp"

namespace actmon {

struct InvalidTasksetError : std::runtime_error {
  explicit InvalidTasksetError(const std::string& what) : std::runtime_error(what) {}
};

// Effective WCET with checking overhead: C_i + N_i * C°.
inline Us effective_wcet(const RtTask& task, Us check_overhead) {
  Us c = task.check_overhead.value_or(check_overhead);
  return task.wcet + static_cast<Us>(task.actuation_bound) * c;
}

// The checker serves one request at a time, so a task can be blocked by the
// queued checking work of one lower-priority task: max over lp of N_j * C_j°.
inline Us blocking(const RtTask& task, const std::vector<RtTask>& taskset, Us check_overhead) {
  Us worst = 0;
  for (const auto& other : taskset) {
    if (other.priority <= task.priority) continue;  // higher or equal priority
    Us c = other.check_overhead.value_or(check_overhead);
    worst = std::max(worst, static_cast<Us>(other.actuation_bound) * c);
  }
  return worst;
}

struct WcrtResult {
  enum class Status { Converged, Unschedulable, NonConvergent };
  Status status = Status::NonConvergent;
  Us response = 0;   // fixed point, or the first iterate past the deadline
  long iterations = 0;
};

inline constexpr long kWcrtIterationCap = 1000000;

namespace detail {
inline void validate_for_rta(const std::vector<RtTask>& taskset) {
  std::set<int> prios;
  for (const auto& t : taskset) {
    if (t.period <= 0) throw InvalidTasksetError("task " + t.id + ": period must be > 0");
    if (t.wcet <= 0) throw InvalidTasksetError("task " + t.id + ": wcet must be > 0");
    if (!prios.insert(t.priority).second)
      throw InvalidTasksetError("duplicate priority " + std::to_string(t.priority));
  }
}
}  // namespace detail

// Fixed-point iteration r = C_eff + B + sum over hp of ceil(r/T_h)*C_h_eff,
// from r(0) = 0, in exact integer microseconds. Iterates are non-decreasing;
// the search stops at the fixed point or once an iterate exceeds the deadline.
inline WcrtResult wcrt(const RtTask& task, const std::vector<RtTask>& taskset, Us check_overhead,
                       std::vector<Us>* iterates = nullptr) {
  detail::validate_for_rta(taskset);
  const Us c_eff = effective_wcet(task, check_overhead);
  const Us blocked = blocking(task, taskset, check_overhead);

  std::vector<const RtTask*> higher;
  for (const auto& other : taskset)
    if (other.priority < task.priority) higher.push_back(&other);

  WcrtResult out;
  Us r = 0;
  for (long iter = 1; iter <= kWcrtIterationCap; ++iter) {
    Us next = c_eff + blocked;
    for (const auto* h : higher) {
      Us jobs = (r + h->period - 1) / h->period;  // ceil(r / T_h)
      next += jobs * effective_wcet(*h, check_overhead);
    }
    if (iterates) iterates->push_back(next);
    out.iterations = iter;
    if (next > task.deadline) {
      out.status = WcrtResult::Status::Unschedulable;
      out.response = next;
      return out;
    }
    if (next == r) {
      out.status = WcrtResult::Status::Converged;
      out.response = next;
      return out;
    }
    r = next;
  }
  out.status = WcrtResult::Status::NonConvergent;
  out.response = r;
  return out;
}

struct RtaTaskReport {
  std::string task;
  Us wcet = 0;         // C_i
  Us period = 0;       // T_i
  Us deadline = 0;     // D_i
  int priority = 0;
  int actuation_bound = 0;
  Us effective_wcet = 0;  // C_i + N_i C°
  Us blocking = 0;         // from lower-priority checking sections
  Us response = 0;         // last iterate when unschedulable
  Us interference = 0;     // response minus effective wcet, blocking included
  bool schedulable = false;
  bool converged = true;
  long iterations = 0;
};

struct RtaReport {
  std::vector<RtaTaskReport> tasks;  // sorted by priority, highest first
  double utilization = 0;            // sum of effective wcet over period
  bool schedulable = false;
};

inline RtaReport analyze(const std::vector<RtTask>& taskset, Us check_overhead) {
  detail::validate_for_rta(taskset);
  RtaReport report;
  report.schedulable = true;
  double u = 0;

  std::vector<const RtTask*> by_priority;
  for (const auto& t : taskset) by_priority.push_back(&t);
  std::sort(by_priority.begin(), by_priority.end(),
            [](const RtTask* a, const RtTask* b) { return a->priority < b->priority; });

  for (const auto* t : by_priority) {
    RtaTaskReport row;
    row.task = t->id;
    row.wcet = t->wcet;
    row.period = t->period;
    row.deadline = t->deadline;
    row.priority = t->priority;
    row.actuation_bound = t->actuation_bound;
    row.effective_wcet = effective_wcet(*t, check_overhead);
    row.blocking = blocking(*t, taskset, check_overhead);
    WcrtResult w = wcrt(*t, taskset, check_overhead);
    row.response = w.response;
    row.interference = w.response - row.effective_wcet;
    row.iterations = w.iterations;
    row.converged = w.status != WcrtResult::Status::NonConvergent;
    row.schedulable = w.status == WcrtResult::Status::Converged && w.response <= t->deadline;
    report.schedulable = report.schedulable && row.schedulable;
    u += static_cast<double>(row.effective_wcet) / static_cast<double>(t->period);
    report.tasks.push_back(std::move(row));
  }
  report.utilization = u;
  return report;
}

inline void write_rta_csv(const RtaReport& report, std::ostream& os) {
  os << "task,priority,wcet_ms,period_ms,deadline_ms,n_requests,effective_wcet_ms,blocking_ms,"
        "response_ms,interference_ms,iterations,schedulable\n";
  for (const auto& row : report.tasks) {
    os << row.task << ',' << row.priority << ',' << ms_string(row.wcet) << ','
       << ms_string(row.period) << ',' << ms_string(row.deadline) << ',' << row.actuation_bound
       << ',' << ms_string(row.effective_wcet) << ',' << ms_string(row.blocking) << ','
       << ms_string(row.response) << ',' << ms_string(row.interference) << ',' << row.iterations
       << ',' << (row.schedulable ? "yes" : "no") << '\n';
  }
}

inline void print_rta_table(const RtaReport& report, std::ostream& os) {
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %4s %10s %10s %10s %3s %10s %8s %10s %6s %s\n", "task",
                "prio", "C(ms)", "T(ms)", "D(ms)", "N", "C_eff", "block", "R(ms)", "iter", "ok");
  os << line;
  for (const auto& row : report.tasks) {
    std::snprintf(line, sizeof line, "%-12s %4d %10s %10s %10s %3d %10s %8s %10s %6ld %s\n",
                  row.task.c_str(), row.priority, ms_string(row.wcet).c_str(),
                  ms_string(row.period).c_str(), ms_string(row.deadline).c_str(),
                  row.actuation_bound, ms_string(row.effective_wcet).c_str(), ms_string(row.blocking).c_str(),
                  ms_string(row.response).c_str(), row.iterations,
                  row.schedulable ? "yes" : (row.converged ? "NO" : "no (diverged)"));
    os << line;
  }
  std::snprintf(line, sizeof line, "utilization %.4f, taskset %s\n", report.utilization,
                report.schedulable ? "schedulable" : "NOT schedulable");
  os << line;
}

}  // namespace actmon
