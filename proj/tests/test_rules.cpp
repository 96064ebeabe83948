#include <doctest.h>

#include "actmon/rule_parser.hpp"
#include "actmon/rules.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace actmon;

namespace {

SystemState state_of(std::initializer_list<std::pair<const char*, double>> sig) {
  SystemState s;
  for (const auto& [k, v] : sig) s.signals[k] = v;
  return s;
}

RuleSet rover_rules() {
  return parse_rules(
      "INV_1 :: s_LF < -2500 -> motor = st_sp(120) and rht()\n"
      "INV_2 :: s_LF > 2500 -> motor = st_sp(120) and lft()\n"
      "INV_3 :: s_LF in [-2500, 2500] -> motor = st_sp(100) and fwd()\n");
}

}  // namespace

TEST_CASE("water-level rule parses into the expected shape") {
  RuleSet rs = parse_rules(
      "INV_W :: (s_WL > 80) or (s_WT not in [10, 40]) -> buzzer = ON : buzzer = OFF");
  REQUIRE(rs.rules.size() == 1);
  const auto& rule = std::get<StateInvariantRule>(rs.rules[0]);
  CHECK(rule.name == "INV_W");
  CHECK(rule.actuator_id == "buzzer");
  CHECK(rule.then_command == Command::single("ON"));
  REQUIRE(rule.else_command.has_value());
  CHECK(*rule.else_command == Command::single("OFF"));

  const auto& orn = std::get<OrNode>(rule.condition->node);
  REQUIRE(orn.children.size() == 2);
  const auto& cmp = std::get<Comparison>(orn.children[0]->node);
  CHECK(cmp.signal == "s_WL");
  CHECK(cmp.op == CmpOp::Gt);
  CHECK(cmp.value == 80);
  const auto& iv = std::get<IntervalTest>(orn.children[1]->node);
  CHECK(iv.signal == "s_WT");
  CHECK(iv.negated);
  CHECK(iv.lo == 10);
  CHECK(iv.hi == 40);
}

TEST_CASE("line-follow rule parses without an else branch") {
  RuleSet rs = parse_rules("INV_1 :: s_LF < -2500 -> motor = st_sp(120) and rht()");
  const auto& rule = std::get<StateInvariantRule>(rs.rules[0]);
  CHECK(rule.actuator_id == "motor");
  CHECK(!rule.else_command.has_value());
  CHECK(rule.then_command == Command{{{"st_sp", 120}, {"rht", std::nullopt}}});
  const auto& cmp = std::get<Comparison>(rule.condition->node);
  CHECK(cmp.value == -2500);
}

TEST_CASE("rate rule parses with both window kinds") {
  RuleSet rs = parse_rules(
      "RC_1 :: rate(task ctrl, motor) < 2 per period -> check : ignore\n"
      "RC_2 :: rate(task ctrl, servo) < 5 per 200 ms -> check : ignore\n");
  const auto& rc1 = std::get<RateControlRule>(rs.rules[0]);
  CHECK(rc1.task_id == "ctrl");
  CHECK(rc1.actuator_id == "motor");
  CHECK(rc1.threshold == 2);
  CHECK(rc1.window.kind == RateWindowSpec::Kind::Period);
  const auto& rc2 = std::get<RateControlRule>(rs.rules[1]);
  CHECK(rc2.threshold == 5);
  CHECK(rc2.window.kind == RateWindowSpec::Kind::Sliding);
  CHECK(rc2.window.duration == 200000);
}

TEST_CASE("comments and ';' terminators are accepted") {
  RuleSet rs = parse_rules("# thresholds from the control code\nA :: s_LF < 0 -> m = fwd ; B :: s_LF >= 0 -> m = rht");
  CHECK(rs.rules.size() == 2);
}

TEST_CASE("syntax errors carry position and expectation") {
  try {
    parse_rules("INV :: s_LF < -2500 motor = rht()");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(e.col == 21);
    CHECK(e.expected.find("'->'") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_rules("X :: s in [40, 10] -> m = fwd"), ParseError);   // lo > hi
  CHECK_THROWS_AS(parse_rules("X :: rate(task a, b) < 0 per period -> check : ignore"),
                  ParseError);                                                  // threshold < 1
  CHECK_THROWS_AS(parse_rules("or :: s_LF < 0 -> m = fwd"), ParseError);        // reserved name
  CHECK_THROWS_AS(parse_rules("X :: s_LF < 0 -> fwd"), ParseError);             // no actuator
  CHECK_THROWS_AS(
      parse_rules("A :: rate(task t, m) < 2 per period -> check : ignore\n"
                  "B :: rate(task t, m) < 3 per period -> check : ignore"),
      ParseError);  // duplicate rate rule for one (task, actuator)
}

TEST_CASE("validation against scenario declarations") {
  RuleContext ctx;
  ctx.signals = {"s_LF"};
  ctx.actuators["motor"] = make_codec("rover");
  ctx.tasks = {"ctrl"};

  CHECK_NOTHROW(parse_rules("A :: s_LF < 0 -> motor = fwd", &ctx));
  CHECK_THROWS_AS(parse_rules("A :: s_XX < 0 -> motor = fwd", &ctx), ParseError);  // signal
  CHECK_THROWS_AS(parse_rules("A :: s_LF < 0 -> laser = fwd", &ctx), ParseError);  // actuator
  CHECK_THROWS_AS(parse_rules("A :: s_LF < 0 -> motor = jump", &ctx), ParseError); // command
  CHECK_THROWS_AS(parse_rules("A :: s_LF < 0 -> motor = st_sp(999)", &ctx), ParseError);
  CHECK_THROWS_AS(
      parse_rules("A :: rate(task ghost, motor) < 2 per period -> check : ignore", &ctx),
      ParseError);
}

TEST_CASE("condition evaluation on the documented examples") {
  RuleSet rs = parse_rules("A :: s_LF < -2500 -> m = fwd");
  const auto& c1 = std::get<StateInvariantRule>(rs.rules[0]).condition;
  CHECK(evaluate_condition(*c1, state_of({{"s_LF", -3000}})));
  CHECK(!evaluate_condition(*c1, state_of({{"s_LF", -2500}})));

  rs = parse_rules("A :: s_LF in [-2500, 2500] -> m = fwd");
  const auto& c2 = std::get<StateInvariantRule>(rs.rules[0]).condition;
  CHECK(evaluate_condition(*c2, state_of({{"s_LF", 0}})));

  rs = parse_rules("A :: (s_WL > 80) or (s_WT not in [10,40]) -> m = ON");
  const auto& c3 = std::get<StateInvariantRule>(rs.rules[0]).condition;
  CHECK(!evaluate_condition(*c3, state_of({{"s_WL", 50}, {"s_WT", 20}})));
  CHECK(evaluate_condition(*c3, state_of({{"s_WL", 90}, {"s_WT", 20}})));
  CHECK(evaluate_condition(*c3, state_of({{"s_WL", 50}, {"s_WT", 5}})));

  CHECK_THROWS_AS(evaluate_condition(*c3, state_of({{"s_WL", 50}})), MissingSignalError);
}

TEST_CASE("expected command follows the rover rules") {
  RuleSet rs = rover_rules();
  auto cmd = expected_command(rs, "motor", state_of({{"s_LF", -3000}}));
  REQUIRE(cmd.has_value());
  CHECK(*cmd == Command{{{"st_sp", 120}, {"rht", std::nullopt}}});

  cmd = expected_command(rs, "motor", state_of({{"s_LF", 3000}}));
  CHECK(*cmd == Command{{{"st_sp", 120}, {"lft", std::nullopt}}});

  cmd = expected_command(rs, "motor", state_of({{"s_LF", 0}}));
  CHECK(*cmd == Command{{{"st_sp", 100}, {"fwd", std::nullopt}}});

  // other actuators have no rules
  CHECK(!expected_command(rs, "servo", state_of({{"s_LF", 0}})).has_value());
}

TEST_CASE("first match wins; the last else branch is the fallback") {
  RuleSet rs = parse_rules(
      "A :: s_x > 10 -> m = lft : m = fwd\n"
      "B :: s_x > 5 -> m = rht\n"
      "C :: s_x > 100 -> m = st_sp(9) : m = st_sp(1)\n");
  // both A and B would fire; A is first
  CHECK(*expected_command(rs, "m", state_of({{"s_x", 20}})) == Command::single("lft"));
  // only B fires
  CHECK(*expected_command(rs, "m", state_of({{"s_x", 7}})) == Command::single("rht"));
  // nothing fires: C's else is declared last
  CHECK(*expected_command(rs, "m", state_of({{"s_x", 0}})) == Command::single("st_sp", 1));
}

TEST_CASE("pretty print round-trips the rover rules and canonical forms") {
  RuleSet rs = rover_rules();
  CHECK(structurally_equal(parse_rules(pretty_print(rs)), rs));

  CHECK(pretty_print(RuleSet{}) == "");

  RuleSet rc = parse_rules("RC_1 :: rate(task ctrl, motor) < 2 per period -> check : ignore");
  CHECK(pretty_print(rc) == "RC_1 :: rate(task ctrl, motor) < 2 per period -> check : ignore\n");
  CHECK(structurally_equal(parse_rules(pretty_print(rc)), rc));
}

TEST_CASE("generated rule sets survive a print/parse cycle") {
  SplitMix64 rng(0xBADC0FFEULL);
  for (int i = 0; i < 200; ++i) {
    RuleSet rs = gen::random_ruleset(rng);
    std::string text = pretty_print(rs);
    CAPTURE(text);
    RuleSet back = parse_rules(text);
    CHECK(structurally_equal(back, rs));
  }
}

TEST_CASE("evaluator agrees with the stack-machine oracle on generated trees") {
  SplitMix64 rng(0x5EEDULL);
  for (int i = 0; i < 500; ++i) {
    ConditionPtr cond = gen::random_condition(rng, 4);
    SystemState state;
    for (const char* sig : {"s_LF", "s_WL", "s_WT", "s_grip", "s_aux"})
      state.signals[sig] = static_cast<double>(rng.range(-3100, 3100));
    CHECK(evaluate_condition(*cond, state) == oracle::eval_condition_stack(*cond, state));
  }
}

TEST_CASE("overlap sampling flags conflicting rules") {
  RuleSet ok = rover_rules();
  CHECK(rule_consistency_warnings(ok).empty());

  RuleSet clash = parse_rules(
      "A :: s_x > 10 -> m = lft\n"
      "B :: s_x > 20 -> m = rht\n");
  CHECK(!rule_consistency_warnings(clash).empty());
}
