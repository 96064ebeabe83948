// Deterministic random generators for property tests.
#pragma once

#include <string>
#include <vector>

#include "actmon/prng.hpp"
#include "actmon/rules.hpp"
#include "actmon/core.hpp"

namespace gen {

using actmon::SplitMix64;

inline std::string pick_signal(SplitMix64& rng) {
  static const char* names[] = {"s_LF", "s_WL", "s_WT", "s_grip", "s_aux"};
  return names[rng.below(5)];
}

inline actmon::ConditionPtr random_condition(SplitMix64& rng, int max_depth) {
  int choice = max_depth <= 1 ? static_cast<int>(rng.below(2))
                              : static_cast<int>(rng.below(5));
  auto leaf_value = [&]() { return static_cast<double>(rng.range(-3000, 3000)); };
  switch (choice) {
    case 0: {
      auto op = static_cast<actmon::CmpOp>(rng.below(5));
      return actmon::make_cmp(pick_signal(rng), op, leaf_value());
    }
    case 1: {
      double a = leaf_value(), b = leaf_value();
      if (a > b) std::swap(a, b);
      return actmon::make_interval(pick_signal(rng), a, b, rng.below(2) == 0);
    }
    case 2:
      return actmon::make_not(random_condition(rng, max_depth - 1));
    case 3:
    case 4: {
      std::vector<actmon::ConditionPtr> children;
      std::size_t n = 2 + rng.below(2);
      for (std::size_t i = 0; i < n; ++i)
        children.push_back(random_condition(rng, max_depth - 1));
      return choice == 3 ? actmon::make_and(std::move(children))
                         : actmon::make_or(std::move(children));
    }
  }
  return actmon::make_cmp(pick_signal(rng), actmon::CmpOp::Lt, 0);
}

inline actmon::Command random_command(SplitMix64& rng) {
  static const char* names[] = {"fwd", "lft", "rht", "st_sp", "grip_open", "ON", "OFF"};
  actmon::Command cmd;
  std::size_t n = 1 + rng.below(3);
  for (std::size_t i = 0; i < n; ++i) {
    actmon::CommandAtom atom;
    atom.name = names[rng.below(7)];
    if (rng.below(3) == 0) atom.arg = rng.range(0, 255);
    cmd.atoms.push_back(std::move(atom));
  }
  return cmd;
}

inline actmon::RuleSet random_ruleset(SplitMix64& rng) {
  actmon::RuleSet rs;
  std::size_t n = 1 + rng.below(5);
  std::vector<std::pair<std::string, std::string>> rate_pairs;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.below(4) == 0) {
      actmon::RateControlRule rc;
      rc.name = "RC_" + std::to_string(i);
      rc.task_id = "task" + std::to_string(rng.below(3));
      rc.actuator_id = "act" + std::to_string(rng.below(3));
      bool dup = false;
      for (const auto& p : rate_pairs)
        dup = dup || (p.first == rc.task_id && p.second == rc.actuator_id);
      if (dup) {
        --i;
        continue;
      }
      rate_pairs.push_back({rc.task_id, rc.actuator_id});
      rc.threshold = static_cast<int>(1 + rng.below(9));
      if (rng.below(2) == 0) {
        rc.window.kind = actmon::RateWindowSpec::Kind::Period;
      } else {
        rc.window.kind = actmon::RateWindowSpec::Kind::Sliding;
        rc.window.duration = rng.range(1, 500) * 1000;
      }
      rs.rules.push_back(std::move(rc));
    } else {
      actmon::StateInvariantRule sr;
      sr.name = "INV_" + std::to_string(i);
      sr.actuator_id = "act" + std::to_string(rng.below(3));
      sr.condition = random_condition(rng, 1 + static_cast<int>(rng.below(4)));
      sr.then_command = random_command(rng);
      if (rng.below(2) == 0) sr.else_command = random_command(rng);
      rs.rules.push_back(std::move(sr));
    }
  }
  return rs;
}

// Taskset generator for the analysis soundness runs: up to max_tasks tasks,
// periods from the fixed menu, total base utilization below u_cap.
inline std::vector<actmon::RtTask> random_taskset(SplitMix64& rng, int max_tasks, double u_cap,
                                                  int max_requests) {
  static const actmon::Us periods_ms[] = {4, 5, 6, 8, 10, 12, 20};
  int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_tasks)));
  std::vector<actmon::RtTask> tasks;
  double u_left = u_cap;
  for (int i = 0; i < n; ++i) {
    actmon::RtTask t;
    t.id = "t" + std::to_string(i);
    t.period = periods_ms[rng.below(7)] * 1000;
    double share = u_left * (0.2 + 0.6 * rng.unit()) / static_cast<double>(n - i);
    actmon::Us wcet = static_cast<actmon::Us>(share * static_cast<double>(t.period));
    t.wcet = std::max<actmon::Us>(wcet, 100);
    u_left -= static_cast<double>(t.wcet) / static_cast<double>(t.period);
    if (u_left < 0) u_left = 0;
    t.deadline = t.period;
    if (rng.below(4) == 0) {  // occasionally constrained below the period
      actmon::Us slack = t.period - t.wcet;
      t.deadline = t.wcet + slack / 2 + static_cast<actmon::Us>(rng.below(slack / 2 + 1));
    }
    t.priority = i + 1;  // will be reassigned rate-monotonically below
    t.actuation_bound = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_requests + 1)));
    tasks.push_back(std::move(t));
  }
  // rate-monotonic priorities, declaration order breaking ties
  std::vector<std::size_t> order(tasks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return tasks[a].period < tasks[b].period;
  });
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    tasks[order[rank]].priority = static_cast<int>(rank + 1);
  return tasks;
}

}  // namespace gen
