#pragma once

#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "actmon/codec.hpp"
#include "actmon/rules.hpp"

namespace actmon {

struct ParseError : std::runtime_error {
  int line;
  int col;
  std::string expected;

  ParseError(int line_, int col_, const std::string& expected_)
      : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                           std::to_string(col_) + ": " + expected_),
        line(line_),
        col(col_),
        expected(expected_) {}
};

// Declarations the rules are checked against when supplied: signal names,
// actuator codecs and task ids from the scenario.
struct RuleContext {
  std::set<std::string> signals;
  std::map<std::string, CodecPtr> actuators;
  std::set<std::string> tasks;
};

namespace dsl {

enum class Tok {
  Ident,
  Number,
  DoubleColon,  // ::
  Arrow,        // ->
  Colon,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Lt,
  Le,
  Gt,
  Ge,
  Eq,
  Newline,  // also ';'
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0;
  bool integral = false;
  std::int64_t int_value = 0;
  int line = 1;
  int col = 1;
};

inline bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline std::vector<Token> lex(const std::string& source) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto push = [&](Tok kind, std::string text, int tline, int tcol) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.line = tline;
    t.col = tcol;
    out.push_back(std::move(t));
  };
  while (i < source.size()) {
    char c = source[i];
    int tline = line, tcol = col;
    if (c == '\n') {
      push(Tok::Newline, "\n", tline, tcol);
      ++i;
      ++line;
      col = 1;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      ++col;
      continue;
    }
    if (c == '#') {  // line comment
      while (i < source.size() && source[i] != '\n') ++i, ++col;
      continue;
    }
    if (c == ';') {
      push(Tok::Newline, ";", tline, tcol);
      ++i;
      ++col;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t start = i;
      while (i < source.size() && is_ident_char(source[i])) ++i, ++col;
      push(Tok::Ident, source.substr(start, i - start), tline, tcol);
      continue;
    }
    bool neg_number = c == '-' && i + 1 < source.size() &&
                      (std::isdigit(static_cast<unsigned char>(source[i + 1])) || source[i + 1] == '.');
    if (std::isdigit(static_cast<unsigned char>(c)) || neg_number) {
      std::size_t start = i;
      if (neg_number) ++i, ++col;
      bool saw_dot = false;
      while (i < source.size() &&
             (std::isdigit(static_cast<unsigned char>(source[i])) || (source[i] == '.' && !saw_dot))) {
        saw_dot = saw_dot || source[i] == '.';
        ++i;
        ++col;
      }
      Token t;
      t.kind = Tok::Number;
      t.text = source.substr(start, i - start);
      t.number = std::strtod(t.text.c_str(), nullptr);
      t.integral = !saw_dot;
      if (t.integral) t.int_value = std::strtoll(t.text.c_str(), nullptr, 10);
      t.line = tline;
      t.col = tcol;
      out.push_back(std::move(t));
      continue;
    }
    auto two = source.substr(i, 2);
    if (two == "::") {
      push(Tok::DoubleColon, two, tline, tcol);
      i += 2;
      col += 2;
      continue;
    }
    if (two == "->") {
      push(Tok::Arrow, two, tline, tcol);
      i += 2;
      col += 2;
      continue;
    }
    if (two == "<=") {
      push(Tok::Le, two, tline, tcol);
      i += 2;
      col += 2;
      continue;
    }
    if (two == ">=") {
      push(Tok::Ge, two, tline, tcol);
      i += 2;
      col += 2;
      continue;
    }
    switch (c) {
      case ':': push(Tok::Colon, ":", tline, tcol); break;
      case '(': push(Tok::LParen, "(", tline, tcol); break;
      case ')': push(Tok::RParen, ")", tline, tcol); break;
      case '[': push(Tok::LBracket, "[", tline, tcol); break;
      case ']': push(Tok::RBracket, "]", tline, tcol); break;
      case ',': push(Tok::Comma, ",", tline, tcol); break;
      case '<': push(Tok::Lt, "<", tline, tcol); break;
      case '>': push(Tok::Gt, ">", tline, tcol); break;
      case '=': push(Tok::Eq, "=", tline, tcol); break;
      default:
        throw ParseError(tline, tcol, std::string("unexpected character '") + c + "'");
    }
    ++i;
    ++col;
  }
  Token end;
  end.kind = Tok::End;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

inline const std::set<std::string>& reserved_words() {
  static const std::set<std::string> words = {"and", "or",  "not",    "in",   "rate",
                                              "per", "task", "period", "check", "ignore"};
  return words;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, const RuleContext* context)
      : tokens_(std::move(tokens)), context_(context) {}

  RuleSet parse_document() {
    RuleSet out;
    skip_newlines();
    while (peek().kind != Tok::End) {
      out.rules.push_back(parse_rule());
      if (peek().kind != Tok::End) expect(Tok::Newline, "end of rule (newline or ';')");
      skip_newlines();
    }
    check_rate_duplicates(out);
    return out;
  }

  Command parse_bare_command_expr() {
    Command cmd;
    std::string binding;  // none expected
    parse_command_expr(binding, cmd, /*allow_binding=*/false);
    if (peek().kind != Tok::End) fail("end of command expression");
    return cmd;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < tokens_.size() ? tokens_[i] : tokens_.back();
  }
  const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const std::string& expected) const {
    const Token& t = peek();
    throw ParseError(t.line, t.col,
                     "expected " + expected + (t.kind == Tok::End ? " (got end of input)"
                                                                  : " (got '" + t.text + "')"));
  }

  const Token& expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) fail(what);
    return advance();
  }

  bool accept(Tok kind) {
    if (peek().kind == kind) {
      advance();
      return true;
    }
    return false;
  }

  bool accept_word(const char* word) {
    if (peek().kind == Tok::Ident && peek().text == word) {
      advance();
      return true;
    }
    return false;
  }

  void expect_word(const char* word) {
    if (!accept_word(word)) fail(std::string("'") + word + "'");
  }

  void skip_newlines() {
    while (peek().kind == Tok::Newline) advance();
  }

  std::string parse_name(const char* what) {
    const Token& t = peek();
    if (t.kind != Tok::Ident) fail(what);
    if (reserved_words().count(t.text))
      throw ParseError(t.line, t.col, "'" + t.text + "' is a reserved word");
    advance();
    return t.text;
  }

  Rule parse_rule() {
    std::string name = parse_name("rule name");
    expect(Tok::DoubleColon, "'::'");
    if (peek().kind == Tok::Ident && peek().text == "rate") return parse_rate_rule(name);
    return parse_state_rule(name);
  }

  RateControlRule parse_rate_rule(std::string name) {
    RateControlRule rule;
    rule.name = std::move(name);
    const Token& kw = peek();
    expect_word("rate");
    expect(Tok::LParen, "'('");
    expect_word("task");
    rule.task_id = parse_name("task id");
    expect(Tok::Comma, "','");
    rule.actuator_id = parse_name("actuator id");
    expect(Tok::RParen, "')'");
    expect(Tok::Lt, "'<'");
    const Token& n = expect(Tok::Number, "integer threshold");
    if (!n.integral || n.int_value < 1)
      throw ParseError(n.line, n.col, "rate threshold must be an integer >= 1");
    rule.threshold = static_cast<int>(n.int_value);
    expect_word("per");
    if (accept_word("period")) {
      rule.window.kind = RateWindowSpec::Kind::Period;
    } else {
      const Token& d = expect(Tok::Number, "window duration in ms or 'period'");
      rule.window.kind = RateWindowSpec::Kind::Sliding;
      rule.window.duration = us_from_ms(d.number);
      expect_word("ms");
      if (rule.window.duration <= 0)
        throw ParseError(d.line, d.col, "sliding window duration must be > 0");
    }
    expect(Tok::Arrow, "'->'");
    expect_word("check");
    expect(Tok::Colon, "':'");
    expect_word("ignore");
    if (context_) {
      if (!context_->tasks.count(rule.task_id))
        throw ParseError(kw.line, kw.col, "unknown task '" + rule.task_id + "'");
      if (!context_->actuators.count(rule.actuator_id))
        throw ParseError(kw.line, kw.col, "unknown actuator '" + rule.actuator_id + "'");
    }
    return rule;
  }

  StateInvariantRule parse_state_rule(std::string name) {
    StateInvariantRule rule;
    rule.name = std::move(name);
    rule.condition = parse_or_expr();
    expect(Tok::Arrow, "'->'");
    parse_command_expr(rule.actuator_id, rule.then_command, /*allow_binding=*/true);
    if (accept(Tok::Colon)) {
      Command else_cmd;
      std::string else_binding = rule.actuator_id;  // inherited if omitted
      parse_command_expr(else_binding, else_cmd, /*allow_binding=*/true);
      if (else_binding != rule.actuator_id)
        fail("else branch to target the same actuator ('" + rule.actuator_id + "')");
      rule.else_command = std::move(else_cmd);
    }
    return rule;
  }

  ConditionPtr parse_or_expr() {
    std::vector<ConditionPtr> children{parse_and_expr()};
    while (accept_word("or")) children.push_back(parse_and_expr());
    if (children.size() == 1) return children.front();
    return make_or(std::move(children));
  }

  ConditionPtr parse_and_expr() {
    std::vector<ConditionPtr> children{parse_cond_atom()};
    while (peek().kind == Tok::Ident && peek().text == "and") {
      advance();
      children.push_back(parse_cond_atom());
    }
    if (children.size() == 1) return children.front();
    return make_and(std::move(children));
  }

  ConditionPtr parse_cond_atom() {
    if (accept(Tok::LParen)) {
      ConditionPtr inner = parse_or_expr();
      expect(Tok::RParen, "')'");
      return inner;
    }
    if (accept_word("not")) return make_not(parse_cond_atom());
    const Token& sig = peek();
    std::string signal = parse_name("signal name");
    if (context_ && !context_->signals.count(signal))
      throw ParseError(sig.line, sig.col, "unknown signal '" + signal + "'");
    bool negated = accept_word("not");
    if (accept_word("in")) {
      expect(Tok::LBracket, "'['");
      const Token& lo = expect(Tok::Number, "interval low bound");
      expect(Tok::Comma, "','");
      const Token& hi = expect(Tok::Number, "interval high bound");
      expect(Tok::RBracket, "']'");
      if (lo.number > hi.number)
        throw ParseError(lo.line, lo.col, "interval bounds must satisfy lo <= hi");
      return make_interval(std::move(signal), lo.number, hi.number, negated);
    }
    if (negated) fail("'in' after 'not'");
    CmpOp op;
    switch (peek().kind) {
      case Tok::Lt: op = CmpOp::Lt; break;
      case Tok::Le: op = CmpOp::Le; break;
      case Tok::Gt: op = CmpOp::Gt; break;
      case Tok::Ge: op = CmpOp::Ge; break;
      case Tok::Eq: op = CmpOp::Eq; break;
      default: fail("comparison operator or 'in'");
    }
    advance();
    const Token& value = expect(Tok::Number, "number");
    return make_cmp(std::move(signal), op, value.number);
  }

  // cmd_expr := cmd_atom {"and" cmd_atom}. The first atom names the target
  // actuator ("motor = st_sp(120)"); later atoms inherit it.
  void parse_command_expr(std::string& actuator_id, Command& cmd, bool allow_binding) {
    bool first = true;
    do {
      const Token& t = peek();
      std::string id = parse_name(first ? "command expression" : "command");
      if (peek().kind == Tok::Eq) {
        if (!allow_binding)
          throw ParseError(t.line, t.col, "actuator binding not allowed here");
        advance();
        if (!first && id != actuator_id)
          throw ParseError(t.line, t.col, "one rule can only target one actuator");
        actuator_id = id;
        id = parse_name("command");
      } else if (first && allow_binding && actuator_id.empty()) {
        throw ParseError(t.line, t.col,
                         "command expression must name its actuator ('<actuator> = <command>')");
      }
      CommandAtom atom;
      atom.name = std::move(id);
      if (accept(Tok::LParen)) {
        if (peek().kind == Tok::Number) {
          const Token& n = advance();
          if (!n.integral)
            throw ParseError(n.line, n.col, "command parameter must be an integer");
          atom.arg = n.int_value;
        }
        expect(Tok::RParen, "')'");
      }
      if (context_ && allow_binding) {
        auto it = context_->actuators.find(actuator_id);
        if (it == context_->actuators.end())
          throw ParseError(t.line, t.col, "unknown actuator '" + actuator_id + "'");
        try {
          it->second->encode_atom(atom);
        } catch (const std::runtime_error& e) {
          throw ParseError(t.line, t.col, e.what());
        }
      }
      cmd.atoms.push_back(std::move(atom));
      first = false;
    } while (accept_word("and"));
  }

  void check_rate_duplicates(const RuleSet& rs) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : rs.rules)
      if (auto* rc = std::get_if<RateControlRule>(&r))
        if (!seen.insert({rc->task_id, rc->actuator_id}).second)
          throw ParseError(1, 1,
                           "duplicate rate rule for (task " + rc->task_id + ", actuator " +
                               rc->actuator_id + ")");
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const RuleContext* context_;
};

}  // namespace dsl

inline RuleSet parse_rules(const std::string& source, const RuleContext* context = nullptr) {
  dsl::Parser parser(dsl::lex(source), context);
  return parser.parse_document();
}

// Parses a bare command expression such as "st_sp(255) and fwd" (no
// actuator binding); used for attack scripts and fixed task behaviors.
inline Command parse_command_expr(const std::string& source) {
  dsl::Parser parser(dsl::lex(source), nullptr);
  return parser.parse_bare_command_expr();
}

// Desk-scale consistency sampling: if two state rules for one actuator can
// fire on the same sampled state with different commands, report it. The
// monitor resolves such overlaps first-match-wins; this only surfaces them.
inline std::vector<std::string> rule_consistency_warnings(const RuleSet& rules) {
  std::vector<std::string> warnings;
  std::set<std::string> actuators;
  for (const auto& r : rules.rules)
    if (auto* s = std::get_if<StateInvariantRule>(&r)) actuators.insert(s->actuator_id);

  for (const auto& act : actuators) {
    auto state_rules = rules.state_rules_for(act);
    if (state_rules.size() < 2) continue;

    // Sample grid: every referenced constant plus a neighborhood around it.
    std::set<std::string> signals;
    std::set<double> points;
    struct Walk {
      std::set<std::string>& signals;
      std::set<double>& points;
      void visit(const Condition& c) {
        if (auto* cmp = std::get_if<Comparison>(&c.node)) {
          signals.insert(cmp->signal);
          points.insert(cmp->value - 1);
          points.insert(cmp->value);
          points.insert(cmp->value + 1);
        } else if (auto* iv = std::get_if<IntervalTest>(&c.node)) {
          signals.insert(iv->signal);
          for (double v : {iv->lo - 1, iv->lo, (iv->lo + iv->hi) / 2, iv->hi, iv->hi + 1})
            points.insert(v);
        } else if (auto* n = std::get_if<NotNode>(&c.node)) {
          visit(*n->child);
        } else if (auto* a = std::get_if<AndNode>(&c.node)) {
          for (const auto& ch : a->children) visit(*ch);
        } else {
          for (const auto& ch : std::get<OrNode>(c.node).children) visit(*ch);
        }
      }
    } walk{signals, points};
    for (const auto* s : state_rules) walk.visit(*s->condition);
    if (signals.empty() || points.empty()) continue;
    if (signals.size() > 3) continue;  // sampling blows up; desk scale only

    std::vector<std::string> sig_list(signals.begin(), signals.end());
    std::vector<double> point_list(points.begin(), points.end());
    std::vector<std::size_t> idx(sig_list.size(), 0);
    while (true) {
      SystemState state;
      for (std::size_t s = 0; s < sig_list.size(); ++s)
        state.signals[sig_list[s]] = point_list[idx[s]];
      const StateInvariantRule* fired = nullptr;
      for (const auto* rule : state_rules) {
        bool holds = false;
        try {
          holds = evaluate_condition(*rule->condition, state);
        } catch (const MissingSignalError&) {
          continue;
        }
        if (!holds) continue;
        if (fired && !(fired->then_command == rule->then_command)) {
          warnings.push_back("rules " + fired->name + " and " + rule->name +
                             " can both fire with different commands (actuator " + act +
                             "); first match wins");
          break;
        }
        if (!fired) fired = rule;
      }
      if (!warnings.empty()) break;
      std::size_t s = 0;
      for (; s < idx.size(); ++s) {
        if (++idx[s] < point_list.size()) break;
        idx[s] = 0;
      }
      if (s == idx.size()) break;
    }
  }
  return warnings;
}

}  // namespace actmon
