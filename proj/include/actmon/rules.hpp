#pragma once

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "actmon/command.hpp"
#include "actmon/core.hpp"
#include "actmon/time.hpp"

namespace actmon {

enum class CmpOp { Lt, Le, Gt, Ge, Eq };

inline const char* to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Eq: return "=";
  }
  return "?";
}

struct Comparison {
  std::string signal;
  CmpOp op = CmpOp::Lt;
  double value = 0;

  bool operator==(const Comparison&) const = default;
};

struct IntervalTest {
  std::string signal;
  double lo = 0;
  double hi = 0;
  bool negated = false;  // "not in"

  bool operator==(const IntervalTest&) const = default;
};

struct Condition;
using ConditionPtr = std::shared_ptr<const Condition>;

struct NotNode {
  ConditionPtr child;
};
struct AndNode {
  std::vector<ConditionPtr> children;  // >= 2
};
struct OrNode {
  std::vector<ConditionPtr> children;  // >= 2
};

struct Condition {
  std::variant<Comparison, IntervalTest, NotNode, AndNode, OrNode> node;
};

inline ConditionPtr make_cmp(std::string signal, CmpOp op, double value) {
  return std::make_shared<Condition>(Condition{Comparison{std::move(signal), op, value}});
}
inline ConditionPtr make_interval(std::string signal, double lo, double hi, bool negated) {
  return std::make_shared<Condition>(Condition{IntervalTest{std::move(signal), lo, hi, negated}});
}
inline ConditionPtr make_not(ConditionPtr child) {
  return std::make_shared<Condition>(Condition{NotNode{std::move(child)}});
}
inline ConditionPtr make_and(std::vector<ConditionPtr> children) {
  return std::make_shared<Condition>(Condition{AndNode{std::move(children)}});
}
inline ConditionPtr make_or(std::vector<ConditionPtr> children) {
  return std::make_shared<Condition>(Condition{OrNode{std::move(children)}});
}

inline bool structurally_equal(const Condition& a, const Condition& b);

inline bool structurally_equal(const ConditionPtr& a, const ConditionPtr& b) {
  if (!a || !b) return !a && !b;
  return structurally_equal(*a, *b);
}

inline bool structurally_equal(const Condition& a, const Condition& b) {
  if (a.node.index() != b.node.index()) return false;
  if (auto* ca = std::get_if<Comparison>(&a.node)) return *ca == std::get<Comparison>(b.node);
  if (auto* ia = std::get_if<IntervalTest>(&a.node)) return *ia == std::get<IntervalTest>(b.node);
  if (auto* na = std::get_if<NotNode>(&a.node))
    return structurally_equal(na->child, std::get<NotNode>(b.node).child);
  auto compare_children = [](const auto& xs, const auto& ys) {
    if (xs.size() != ys.size()) return false;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (!structurally_equal(xs[i], ys[i])) return false;
    return true;
  };
  if (auto* aa = std::get_if<AndNode>(&a.node))
    return compare_children(aa->children, std::get<AndNode>(b.node).children);
  return compare_children(std::get<OrNode>(a.node).children, std::get<OrNode>(b.node).children);
}

// cond -> then_command, with an optional else branch: when no rule's
// condition holds, the last false rule carrying an else branch supplies
// the expected command.
struct StateInvariantRule {
  std::string name;
  std::string actuator_id;
  ConditionPtr condition;
  Command then_command;
  std::optional<Command> else_command;
};

struct RateWindowSpec {
  enum class Kind { Period, Sliding };
  Kind kind = Kind::Period;
  Us duration = 0;  // Sliding only

  bool operator==(const RateWindowSpec&) const = default;
};

// Strict bound: requests in a window are ignored once the running count
// reaches `threshold`; at most threshold-1 pass per window.
struct RateControlRule {
  std::string name;
  std::string task_id;
  std::string actuator_id;
  int threshold = 0;
  RateWindowSpec window;
};

using Rule = std::variant<StateInvariantRule, RateControlRule>;

struct RuleSet {
  std::vector<Rule> rules;  // declaration order is significant

  std::vector<const StateInvariantRule*> state_rules_for(const std::string& actuator_id) const {
    std::vector<const StateInvariantRule*> out;
    for (const auto& r : rules)
      if (auto* s = std::get_if<StateInvariantRule>(&r))
        if (s->actuator_id == actuator_id) out.push_back(s);
    return out;
  }

  const RateControlRule* rate_rule_for(const std::string& task_id,
                                       const std::string& actuator_id) const {
    for (const auto& r : rules)
      if (auto* rc = std::get_if<RateControlRule>(&r))
        if (rc->task_id == task_id && rc->actuator_id == actuator_id) return rc;
    return nullptr;
  }
};

inline bool structurally_equal(const RuleSet& a, const RuleSet& b) {
  if (a.rules.size() != b.rules.size()) return false;
  for (std::size_t i = 0; i < a.rules.size(); ++i) {
    if (a.rules[i].index() != b.rules[i].index()) return false;
    if (auto* sa = std::get_if<StateInvariantRule>(&a.rules[i])) {
      const auto& sb = std::get<StateInvariantRule>(b.rules[i]);
      if (sa->name != sb.name || sa->actuator_id != sb.actuator_id) return false;
      if (!structurally_equal(sa->condition, sb.condition)) return false;
      if (!(sa->then_command == sb.then_command)) return false;
      if (sa->else_command != sb.else_command) return false;
    } else {
      const auto& ra = std::get<RateControlRule>(a.rules[i]);
      const auto& rb = std::get<RateControlRule>(b.rules[i]);
      if (ra.name != rb.name || ra.task_id != rb.task_id || ra.actuator_id != rb.actuator_id ||
          ra.threshold != rb.threshold || !(ra.window == rb.window))
        return false;
    }
  }
  return true;
}

// --- evaluation -------------------------------------------------------------

inline bool evaluate_condition(const Condition& cond, const SystemState& state) {
  if (auto* c = std::get_if<Comparison>(&cond.node)) {
    double v = state.signal(c->signal);
    switch (c->op) {
      case CmpOp::Lt: return v < c->value;
      case CmpOp::Le: return v <= c->value;
      case CmpOp::Gt: return v > c->value;
      case CmpOp::Ge: return v >= c->value;
      case CmpOp::Eq: return v == c->value;
    }
    return false;
  }
  if (auto* t = std::get_if<IntervalTest>(&cond.node)) {
    double v = state.signal(t->signal);
    bool inside = v >= t->lo && v <= t->hi;
    return t->negated ? !inside : inside;
  }
  if (auto* n = std::get_if<NotNode>(&cond.node)) return !evaluate_condition(*n->child, state);
  if (auto* a = std::get_if<AndNode>(&cond.node)) {
    for (const auto& ch : a->children)
      if (!evaluate_condition(*ch, state)) return false;
    return true;
  }
  const auto& o = std::get<OrNode>(cond.node);
  for (const auto& ch : o.children)
    if (evaluate_condition(*ch, state)) return true;
  return false;
}

// First state rule (declaration order) whose condition holds wins; with no
// hit, the last false rule that has an else branch supplies the command;
// nullopt means no rule applies.
inline std::optional<Command> expected_command(const RuleSet& rules,
                                               const std::string& actuator_id,
                                               const SystemState& state) {
  std::optional<Command> else_candidate;
  for (const auto* rule : rules.state_rules_for(actuator_id)) {
    if (evaluate_condition(*rule->condition, state)) return rule->then_command;
    if (rule->else_command) else_candidate = rule->else_command;
  }
  return else_candidate;
}

// --- pretty printing --------------------------------------------------------

namespace detail {

inline std::string number_text(double v) {
  if (v == static_cast<double>(static_cast<std::int64_t>(v))) {
    return std::to_string(static_cast<std::int64_t>(v));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string print_condition(const Condition& cond, bool parenthesize_bool) {
  if (auto* c = std::get_if<Comparison>(&cond.node))
    return c->signal + " " + to_string(c->op) + " " + number_text(c->value);
  if (auto* t = std::get_if<IntervalTest>(&cond.node))
    return t->signal + (t->negated ? " not in [" : " in [") + number_text(t->lo) + ", " +
           number_text(t->hi) + "]";
  if (auto* n = std::get_if<NotNode>(&cond.node)) return "not " + print_condition(*n->child, true);
  const bool is_and = std::holds_alternative<AndNode>(cond.node);
  const auto& children =
      is_and ? std::get<AndNode>(cond.node).children : std::get<OrNode>(cond.node).children;
  std::string body;
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (i) body += is_and ? " and " : " or ";
    // `and` children of an `or` bind tighter and need no parens; everything
    // else nested gets explicit grouping so the parse is shape-preserving.
    const Condition& ch = *children[i];
    bool need_parens = std::holds_alternative<OrNode>(ch.node) ||
                       (is_and && std::holds_alternative<AndNode>(ch.node));
    body += need_parens ? "(" + print_condition(ch, false) + ")" : print_condition(ch, false);
  }
  if (parenthesize_bool) return "(" + body + ")";
  return body;
}

inline std::string print_command_expr(const std::string& actuator_id, const Command& cmd) {
  std::string out;
  for (std::size_t i = 0; i < cmd.atoms.size(); ++i) {
    if (i) out += " and ";
    if (i == 0) out += actuator_id + " = ";
    out += cmd.atoms[i].to_string();
  }
  return out;
}

}  // namespace detail

inline std::string pretty_print(const RuleSet& rules) {
  std::string out;
  for (const auto& r : rules.rules) {
    if (auto* s = std::get_if<StateInvariantRule>(&r)) {
      out += s->name + " :: " + detail::print_condition(*s->condition, false) + " -> " +
             detail::print_command_expr(s->actuator_id, s->then_command);
      if (s->else_command)
        out += " : " + detail::print_command_expr(s->actuator_id, *s->else_command);
    } else {
      const auto& rc = std::get<RateControlRule>(r);
      out += rc.name + " :: rate(task " + rc.task_id + ", " + rc.actuator_id + ") < " +
             std::to_string(rc.threshold);
      if (rc.window.kind == RateWindowSpec::Kind::Period)
        out += " per period";
      else
        out += " per " + ms_string(rc.window.duration) + " ms";
      out += " -> check : ignore";
    }
    out += "\n";
  }
  return out;
}

}  // namespace actmon
