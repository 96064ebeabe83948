#include <doctest.h>

#include <sstream>

#include "actmon/monitor.hpp"
#include "actmon/rule_parser.hpp"

using namespace actmon;

namespace {

SystemState rover_state(double lf, Us t = 0) {
  SystemState s;
  s.time = t;
  s.signals["s_LF"] = lf;
  return s;
}

MonitorConfig rover_config(Strategy strategy, bool with_rate_rule = false) {
  MonitorConfig cfg;
  cfg.access = AccessMatrix(2, 1);
  cfg.access.set(0, 0, true);  // ctrl -> motor
  cfg.access.set(1, 0, false); // telemetry has no access
  cfg.task_ids = {"ctrl", "telemetry"};
  cfg.actuator_ids = {"motor"};
  cfg.codecs["motor"] = make_codec("rover");
  std::string text =
      "INV_1 :: s_LF < -2500 -> motor = st_sp(120) and rht()\n"
      "INV_2 :: s_LF > 2500 -> motor = st_sp(120) and lft()\n"
      "INV_3 :: s_LF in [-2500, 2500] -> motor = st_sp(100) and fwd()\n";
  if (with_rate_rule)
    text += "RC_1 :: rate(task ctrl, motor) < 2 per period -> check : ignore\n";
  cfg.rules = parse_rules(text);
  cfg.default_strategy = strategy;
  return cfg;
}

ActuationRequest request_for(const std::string& task, const Command& cmd, Us t) {
  ActuationRequest req;
  req.task_id = task;
  req.actuator_id = "motor";
  req.command = cmd;
  req.payload = encode_command(*make_codec("rover"), cmd);
  req.issue_time = t;
  return req;
}

}  // namespace

TEST_CASE("fail-safe overrides a spoofed turn with the predicted command") {
  ReferenceMonitor monitor(rover_config(Strategy::FailSafe));
  auto d = monitor.mediate(request_for("ctrl", Command::single("lft"), 10), rover_state(-3000));
  CHECK(d.verdict == Verdict::Override);
  CHECK(d.reason == Reason::InvariantMismatch);
  REQUIRE(d.override_command.has_value());
  CHECK(*d.override_command == Command{{{"st_sp", 120}, {"rht", std::nullopt}}});
}

TEST_CASE("ignore strategy drops the mismatch instead") {
  ReferenceMonitor monitor(rover_config(Strategy::Ignore));
  auto d = monitor.mediate(request_for("ctrl", Command::single("lft"), 10), rover_state(-3000));
  CHECK(d.verdict == Verdict::Ignore);
  CHECK(d.reason == Reason::InvariantMismatch);
}

TEST_CASE("matching command passes the invariant check") {
  ReferenceMonitor monitor(rover_config(Strategy::FailSafe));
  Command good{{{"st_sp", 100}, {"fwd", std::nullopt}}};
  auto d = monitor.mediate(request_for("ctrl", good, 5), rover_state(0));
  CHECK(d.verdict == Verdict::Allow);
  CHECK(d.reason == Reason::InvariantSatisfied);
}

TEST_CASE("zero access flag denies before anything else, any strategy") {
  for (Strategy s : {Strategy::Ignore, Strategy::FailSafe}) {
    ReferenceMonitor monitor(rover_config(s, true));
    auto d = monitor.mediate(request_for("telemetry", Command::single("fwd"), 1), rover_state(0));
    CHECK(d.verdict == Verdict::Ignore);
    CHECK(d.reason == Reason::NoPermission);
    CHECK(monitor.decision_log().back().window_count == 0);  // not counted as an attempt
  }
}

TEST_CASE("strict rate bound: second request in a period window is dropped") {
  ReferenceMonitor monitor(rover_config(Strategy::Ignore, true));
  monitor.on_job_release("ctrl", 0);
  Command good{{{"st_sp", 100}, {"fwd", std::nullopt}}};

  auto d1 = monitor.mediate(request_for("ctrl", good, 10), rover_state(0, 10));
  CHECK(d1.verdict == Verdict::Allow);
  auto d2 = monitor.mediate(request_for("ctrl", good, 20), rover_state(0, 20));
  CHECK(d2.verdict == Verdict::Ignore);
  CHECK(d2.reason == Reason::RateLimited);
  // rejected attempts still count toward the bound
  auto d3 = monitor.mediate(request_for("ctrl", good, 30), rover_state(0, 30));
  CHECK(d3.verdict == Verdict::Ignore);
  CHECK(monitor.decision_log().back().window_count == 3);

  // a new job release opens a fresh window
  monitor.on_job_release("ctrl", 200000);
  auto d4 = monitor.mediate(request_for("ctrl", good, 200010), rover_state(0, 200010));
  CHECK(d4.verdict == Verdict::Allow);
}

TEST_CASE("sliding windows evict entries older than the duration") {
  RateControlRule rule;
  rule.name = "RC";
  rule.task_id = "ctrl";
  rule.actuator_id = "motor";
  rule.threshold = 4;
  rule.window.kind = RateWindowSpec::Kind::Sliding;
  rule.window.duration = 200000;  // 200 ms

  RateWindowTable table;
  table.add_rule(rule);
  RateWindow* w = table.find("ctrl", "motor");
  REQUIRE(w != nullptr);
  w->record(0);
  w->record(50000);
  w->record(100000);
  CHECK(w->current_count() == 3);
  table.advance_time(260000);
  CHECK(w->current_count() == 1);  // only the request at 100 ms survives
  table.advance_time(260000);      // no-op advance changes nothing
  CHECK(w->current_count() == 1);

  CHECK_THROWS_AS(table.advance_time(100), TimeRegressionError);
}

TEST_CASE("undecodable payloads are treated as invariant mismatches") {
  SUBCASE("fail-safe substitutes the predicted command") {
    ReferenceMonitor monitor(rover_config(Strategy::FailSafe));
    ActuationRequest raw;
    raw.task_id = "ctrl";
    raw.actuator_id = "motor";
    raw.payload = {0xFF, 0xFF, 0xFF, 0xFF, 0xFF};
    raw.issue_time = 3;
    auto d = monitor.mediate(raw, rover_state(0));
    CHECK(d.verdict == Verdict::Override);
    CHECK(*d.override_command == Command{{{"st_sp", 100}, {"fwd", std::nullopt}}});
  }
  SUBCASE("without an applicable rule there is nothing safe to send") {
    MonitorConfig cfg = rover_config(Strategy::FailSafe);
    cfg.rules = RuleSet{};
    ReferenceMonitor monitor(cfg);
    ActuationRequest raw;
    raw.task_id = "ctrl";
    raw.actuator_id = "motor";
    raw.payload = {0xFF, 0xFF, 0xFF, 0xFF, 0xFF};
    auto d = monitor.mediate(raw, rover_state(0));
    CHECK(d.verdict == Verdict::Ignore);
    CHECK(d.reason == Reason::InvariantMismatch);
  }
}

TEST_CASE("no applicable rule: permissive by default, deny when configured") {
  MonitorConfig cfg = rover_config(Strategy::FailSafe);
  cfg.rules = RuleSet{};
  SUBCASE("default allows") {
    ReferenceMonitor monitor(cfg);
    auto d = monitor.mediate(request_for("ctrl", Command::single("fwd"), 1), rover_state(0));
    CHECK(d.verdict == Verdict::Allow);
    CHECK(d.reason == Reason::NoRuleApplies);
  }
  SUBCASE("deny_unmatched flips the default") {
    cfg.deny_unmatched = true;
    ReferenceMonitor monitor(cfg);
    auto d = monitor.mediate(request_for("ctrl", Command::single("fwd"), 1), rover_state(0));
    CHECK(d.verdict == Verdict::Ignore);
    CHECK(d.reason == Reason::NoRuleApplies);
  }
}

TEST_CASE("a rule over a missing signal surfaces an error and drops the request") {
  ReferenceMonitor monitor(rover_config(Strategy::FailSafe));
  SystemState empty;  // no s_LF at all
  auto d = monitor.mediate(request_for("ctrl", Command::single("fwd"), 1), empty);
  CHECK(d.verdict == Verdict::Ignore);
  REQUIRE(monitor.config_errors().size() == 1);
  CHECK(monitor.config_errors()[0].find("s_LF") != std::string::npos);
}

TEST_CASE("monitor disabled: permission still holds, checks are bypassed") {
  MonitorConfig cfg = rover_config(Strategy::FailSafe);
  cfg.enabled = false;
  ReferenceMonitor monitor(cfg);
  CHECK(monitor.check_overhead() == 0);

  auto spoofed = monitor.mediate(request_for("ctrl", Command::single("lft"), 1), rover_state(-3000));
  CHECK(spoofed.verdict == Verdict::Allow);
  CHECK(spoofed.reason == Reason::NoRuleApplies);

  auto denied = monitor.mediate(request_for("telemetry", Command::single("fwd"), 2), rover_state(0));
  CHECK(denied.verdict == Verdict::Ignore);
  CHECK(denied.reason == Reason::NoPermission);
}

TEST_CASE("decision log grows by one per mediation and serializes stably") {
  ReferenceMonitor monitor(rover_config(Strategy::FailSafe));
  CHECK(monitor.decision_log().empty());
  for (int i = 0; i < 5; ++i)
    monitor.mediate(request_for("ctrl", Command::single("fwd"), i * 10), rover_state(0, i * 10));
  CHECK(monitor.decision_log().size() == 5);

  std::ostringstream a, b;
  monitor.write_decision_csv(a);
  monitor.write_decision_csv(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("time_us,task,actuator") == 0);
}

TEST_CASE("identical inputs give identical decisions") {
  auto run_once = [] {
    ReferenceMonitor monitor(rover_config(Strategy::FailSafe, true));
    monitor.on_job_release("ctrl", 0);
    std::ostringstream os;
    monitor.mediate(request_for("ctrl", Command::single("lft"), 10), rover_state(-3000, 10));
    monitor.mediate(request_for("ctrl", Command::single("fwd"), 20), rover_state(0, 20));
    monitor.write_decision_csv(os);
    return os.str();
  };
  CHECK(run_once() == run_once());
}
