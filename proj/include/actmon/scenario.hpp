#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "actmon/rule_parser.hpp"
#include "actmon/sim.hpp"

namespace actmon {

namespace scenario_detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

inline Us read_ms(const json& value, const std::string& where) {
  if (value.is_string()) return us_from_ms_string(value.get<std::string>());
  if (value.is_number()) return us_from_ms(value.get<double>());
  throw ConfigError(where + ": expected milliseconds as number or string");
}

inline Us read_ms_field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  return read_ms(obj.at(key), where + "." + key);
}

inline Strategy read_strategy(const json& value, const std::string& where) {
  std::string s = value.get<std::string>();
  if (s == "ignore") return Strategy::Ignore;
  if (s == "fail_safe") return Strategy::FailSafe;
  throw ConfigError(where + ": strategy must be 'ignore' or 'fail_safe'");
}

inline TaskBehavior read_behavior(const json& obj, const std::string& where) {
  check_keys(obj,
             {"kind", "target", "commands", "theta", "turn_speed", "cruise_speed",
              "level_threshold", "temp_lo", "temp_hi"},
             where);
  TaskBehavior b;
  std::string kind = obj.value("kind", "none");
  if (kind == "none") {
    b.kind = TaskBehavior::Kind::None;
    return b;
  }
  if (!obj.contains("target")) throw ConfigError(where + ": behavior needs a 'target' actuator");
  b.target = obj.at("target").get<std::string>();
  if (kind == "rover_pid") {
    b.kind = TaskBehavior::Kind::RoverPid;
    b.theta = obj.value("theta", b.theta);
    b.turn_speed = obj.value("turn_speed", b.turn_speed);
    b.cruise_speed = obj.value("cruise_speed", b.cruise_speed);
    for (std::int64_t speed : {b.turn_speed, b.cruise_speed})
      if (speed < 0 || speed > 255)
        throw ConfigError(where + ": speed outside [0,255]: " + std::to_string(speed));
  } else if (kind == "arm_alternate") {
    b.kind = TaskBehavior::Kind::ArmAlternate;
  } else if (kind == "water_monitor") {
    b.kind = TaskBehavior::Kind::WaterMonitor;
    b.level_threshold = obj.value("level_threshold", b.level_threshold);
    b.temp_lo = obj.value("temp_lo", b.temp_lo);
    b.temp_hi = obj.value("temp_hi", b.temp_hi);
  } else if (kind == "fixed") {
    b.kind = TaskBehavior::Kind::Fixed;
    if (!obj.contains("commands") || obj.at("commands").empty())
      throw ConfigError(where + ": fixed behavior needs 'commands'");
    for (const auto& c : obj.at("commands"))
      b.fixed.push_back(parse_command_expr(c.get<std::string>()));
  } else {
    throw ConfigError(where + ": unknown behavior kind '" + kind + "'");
  }
  return b;
}

inline std::string directory_of(const std::string& path) {
  auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

}  // namespace scenario_detail

inline Scenario load_scenario_json(const nlohmann::json& root, const std::string& base_dir) {
  using scenario_detail::check_keys;
  using scenario_detail::read_ms;
  using scenario_detail::read_ms_field;
  using nlohmann::json;

  check_keys(root, {"name", "sim", "plant", "actuators", "tasks", "rules", "monitor", "attacks"},
             "scenario");

  Scenario s;
  s.name = root.value("name", "scenario");

  // --- sim ---
  if (root.contains("sim")) {
    const json& sim = root.at("sim");
    check_keys(sim, {"horizon_ms", "tick_us", "seed", "monitor", "exec_jitter", "fail_on_miss"},
               "sim");
    if (sim.contains("horizon_ms")) s.horizon = read_ms(sim.at("horizon_ms"), "sim.horizon_ms");
    if (sim.contains("tick_us")) s.tick = sim.at("tick_us").get<Us>();
    s.seed = sim.value("seed", std::uint64_t{0});
    s.monitor_enabled = sim.value("monitor", true);
    s.exec_jitter = sim.value("exec_jitter", false);
    s.fail_on_miss = sim.value("fail_on_miss", false);
  }
  if (s.tick <= 0) throw ConfigError("sim.tick_us must be > 0");
  if (s.horizon < 0 || s.horizon % s.tick != 0)
    throw ConfigError("sim.horizon_ms must be a non-negative multiple of the tick");

  // --- plant ---
  if (root.contains("plant")) {
    const json& plant = root.at("plant");
    s.plant_model = plant.value("model", "none");
    if (s.plant_model == "rover") {
      check_keys(plant,
                 {"model", "drift_per_ms", "center_pull", "turn_rate", "speed_scale",
                  "initial_speed", "initial_line_offset"},
                 "plant");
      auto& p = s.rover_params;
      p.drift_per_ms = plant.value("drift_per_ms", p.drift_per_ms);
      p.center_pull = plant.value("center_pull", p.center_pull);
      p.turn_rate = plant.value("turn_rate", p.turn_rate);
      p.speed_scale = plant.value("speed_scale", p.speed_scale);
      p.initial_speed = plant.value("initial_speed", p.initial_speed);
      p.initial_line_offset = plant.value("initial_line_offset", p.initial_line_offset);
    } else if (s.plant_model == "arm") {
      check_keys(plant, {"model", "initial_pulse"}, "plant");
      s.arm_params.initial_pulse = plant.value("initial_pulse", s.arm_params.initial_pulse);
    } else if (s.plant_model == "water_tank") {
      check_keys(plant,
                 {"model", "fill_rate", "drain_rate", "low_mark", "high_mark", "initial_level",
                  "temperature"},
                 "plant");
      auto& p = s.tank_params;
      p.fill_rate = plant.value("fill_rate", p.fill_rate);
      p.drain_rate = plant.value("drain_rate", p.drain_rate);
      p.low_mark = plant.value("low_mark", p.low_mark);
      p.high_mark = plant.value("high_mark", p.high_mark);
      p.initial_level = plant.value("initial_level", p.initial_level);
      p.temperature = plant.value("temperature", p.temperature);
    } else if (s.plant_model == "none") {
      check_keys(plant, {"model"}, "plant");
    } else {
      throw ConfigError("plant.model: unknown model '" + s.plant_model + "'");
    }
  }

  // --- actuators ---
  if (root.contains("actuators")) {
    for (const json& a : root.at("actuators")) {
      check_keys(a, {"name", "codec"}, "actuators[]");
      Actuator act;
      act.id = a.at("name").get<std::string>();
      act.name = act.id;
      act.codec = make_codec(a.at("codec").get<std::string>());
      if (s.find_actuator(act.id)) throw ConfigError("duplicate actuator '" + act.id + "'");
      s.actuators.push_back(std::move(act));
    }
  }

  // --- tasks ---
  if (!root.contains("tasks") || root.at("tasks").empty())
    throw ConfigError("scenario needs a non-empty 'tasks' list");
  bool any_priority = false, all_priority = true;
  for (const json& t : root.at("tasks")) {
    check_keys(t,
               {"name", "wcet_ms", "period_ms", "deadline_ms", "priority", "actuation_bound",
                "access", "behavior", "check_overhead_ms", "request_offsets_ms"},
               "tasks[]");
    RtTask task;
    task.id = t.at("name").get<std::string>();
    const std::string where = "task " + task.id;
    task.wcet = read_ms_field(t, "wcet_ms", where);
    task.period = read_ms_field(t, "period_ms", where);
    task.deadline = t.contains("deadline_ms") ? read_ms(t.at("deadline_ms"), where) : task.period;
    if (t.contains("priority")) {
      task.priority = t.at("priority").get<int>();
      any_priority = true;
    } else {
      all_priority = false;
    }
    task.actuation_bound = t.value("actuation_bound", 0);
    if (t.contains("check_overhead_ms"))
      task.check_overhead = read_ms(t.at("check_overhead_ms"), where);
    if (t.contains("request_offsets_ms"))
      for (const auto& off : t.at("request_offsets_ms"))
        task.request_offsets.push_back(read_ms(off, where + ".request_offsets_ms"));
    task.access_row.assign(s.actuators.size(), false);
    if (t.contains("access")) {
      for (const auto& name : t.at("access")) {
        std::string id = name.get<std::string>();
        bool found = false;
        for (std::size_t k = 0; k < s.actuators.size(); ++k)
          if (s.actuators[k].id == id) {
            task.access_row[k] = true;
            found = true;
          }
        if (!found) throw ConfigError(where + ": access names unknown actuator '" + id + "'");
      }
    }
    TaskBehavior behavior;
    if (t.contains("behavior"))
      behavior = scenario_detail::read_behavior(t.at("behavior"), where + ".behavior");
    s.tasks.push_back(std::move(task));
    s.behaviors.push_back(std::move(behavior));
  }
  if (any_priority && !all_priority)
    throw ConfigError("either give every task a priority or none (rate-monotonic default)");
  if (!any_priority) {
    // rate-monotonic: shorter period first, declaration order breaks ties
    std::vector<std::size_t> order(s.tasks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return s.tasks[a].period < s.tasks[b].period;
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank)
      s.tasks[order[rank]].priority = static_cast<int>(rank + 1);
  }
  validate_taskset(s.tasks, s.actuators.size());

  // --- behaviors cross-checks ---
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    const TaskBehavior& b = s.behaviors[i];
    if (b.kind == TaskBehavior::Kind::None) continue;
    const Actuator* target = s.find_actuator(b.target);
    if (!target)
      throw ConfigError("task " + s.tasks[i].id + ": behavior targets unknown actuator '" +
                        b.target + "'");
    static const std::map<TaskBehavior::Kind, std::string> needs = {
        {TaskBehavior::Kind::RoverPid, "rover"},
        {TaskBehavior::Kind::ArmAlternate, "arm"},
        {TaskBehavior::Kind::WaterMonitor, "water_tank"},
    };
    auto need = needs.find(b.kind);
    if (need != needs.end() && s.plant_model != need->second)
      throw ConfigError("task " + s.tasks[i].id + ": behavior requires plant model '" +
                        need->second + "'");
    for (const Command& cmd : b.fixed)
      encode_command(*target->codec, cmd);  // throws on commands the codec rejects
  }

  // --- monitor ---
  if (root.contains("monitor")) {
    const json& mon = root.at("monitor");
    check_keys(mon, {"overhead_ms", "strategy", "strategy_overrides", "deny_unmatched"},
               "monitor");
    if (mon.contains("overhead_ms")) s.check_overhead = read_ms(mon.at("overhead_ms"), "monitor");
    if (s.check_overhead < 0) throw ConfigError("monitor.overhead_ms must be >= 0");
    if (mon.contains("strategy"))
      s.default_strategy = scenario_detail::read_strategy(mon.at("strategy"), "monitor.strategy");
    if (mon.contains("strategy_overrides")) {
      for (const json& o : mon.at("strategy_overrides")) {
        check_keys(o, {"task", "actuator", "strategy"}, "monitor.strategy_overrides[]");
        s.strategy_overrides[{o.at("task").get<std::string>(),
                              o.at("actuator").get<std::string>()}] =
            scenario_detail::read_strategy(o.at("strategy"), "monitor.strategy_overrides[]");
      }
    }
    s.deny_unmatched = mon.value("deny_unmatched", false);
  }

  // --- rules ---
  if (root.contains("rules")) {
    const json& rules = root.at("rules");
    check_keys(rules, {"inline", "file"}, "rules");
    std::string text;
    if (rules.contains("inline")) {
      for (const auto& line : rules.at("inline")) text += line.get<std::string>() + "\n";
    }
    if (rules.contains("file")) {
      std::string path = base_dir + "/" + rules.at("file").get<std::string>();
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot open rules file: " + path);
      std::stringstream buf;
      buf << in.rdbuf();
      text += buf.str();
    }
    RuleContext ctx;
    {
      PlantPtr plant = s.make_plant();
      for (const auto& name : plant->signal_names()) ctx.signals.insert(name);
    }
    for (const auto& a : s.actuators) ctx.actuators[a.id] = a.codec;
    for (const auto& t : s.tasks) ctx.tasks.insert(t.id);
    s.rules = parse_rules(text, &ctx);
  }

  // --- attacks ---
  if (root.contains("attacks")) {
    for (const json& a : root.at("attacks")) {
      check_keys(a,
                 {"type", "task", "actuator", "window_ms", "commands", "payloads", "command",
                  "count_per_job"},
                 "attacks[]");
      AttackScript attack;
      std::string type = a.at("type").get<std::string>();
      attack.task_id = a.at("task").get<std::string>();
      bool task_known = false;
      for (const auto& t : s.tasks) task_known = task_known || t.id == attack.task_id;
      if (!task_known) throw ConfigError("attack names unknown task '" + attack.task_id + "'");
      const json& window = a.at("window_ms");
      if (!window.is_array() || window.size() != 2)
        throw ConfigError("attack window_ms must be [start, end]");
      attack.t_start = read_ms(window[0], "attack.window_ms");
      attack.t_end = read_ms(window[1], "attack.window_ms");
      if (attack.t_start < 0 || attack.t_end <= attack.t_start ||
          (s.horizon > 0 && attack.t_end > s.horizon))
        throw ConfigError("attack window must lie inside the horizon");
      if (a.contains("actuator")) {
        attack.actuator = a.at("actuator").get<std::string>();
        if (!s.find_actuator(*attack.actuator))
          throw ConfigError("attack targets unknown actuator '" + *attack.actuator + "'");
      }
      if (type == "spoof") {
        attack.mode = AttackScript::Mode::Spoof;
        if (a.contains("commands"))
          for (const auto& c : a.at("commands"))
            attack.items.push_back(parse_command_expr(c.get<std::string>()));
        if (a.contains("payloads"))
          for (const auto& p : a.at("payloads")) {
            auto bytes = payload_from_hex(p.get<std::string>());
            if (!bytes) throw ConfigError("attack payload is not valid hex: " + p.dump());
            attack.items.push_back(*bytes);
          }
        if (attack.items.empty())
          throw ConfigError("spoof attack needs 'commands' and/or 'payloads'");
      } else if (type == "dos") {
        attack.mode = AttackScript::Mode::DosBurst;
        attack.burst_command = parse_command_expr(a.at("command").get<std::string>());
        attack.count_per_job = a.at("count_per_job").get<int>();
        if (attack.count_per_job < 2) throw ConfigError("dos count_per_job must be >= 2");
      } else {
        throw ConfigError("unknown attack type '" + type + "'");
      }

      // Symbolic attack commands must encode against the target codec;
      // arbitrary garbage belongs in 'payloads'.
      std::string target = attack.actuator.value_or("");
      if (target.empty())
        for (std::size_t i = 0; i < s.tasks.size(); ++i)
          if (s.tasks[i].id == attack.task_id) target = s.behaviors[i].target;
      if (const Actuator* act = s.find_actuator(target)) {
        try {
          for (const auto& item : attack.items)
            if (const auto* cmd = std::get_if<Command>(&item)) encode_command(*act->codec, *cmd);
          if (attack.mode == AttackScript::Mode::DosBurst)
            encode_command(*act->codec, attack.burst_command);
        } catch (const std::runtime_error& e) {
          throw ConfigError("attack command not encodable by '" + target + "': " + e.what());
        }
      }
      s.attacks.push_back(std::move(attack));
    }
  }

  return s;
}

inline Scenario load_scenario_text(const std::string& text, const std::string& base_dir = ".") {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    return load_scenario_json(root, base_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario schema error: ") + e.what());
  }
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scenario_text(buf.str(), scenario_detail::directory_of(path));
}

}  // namespace actmon
