#include "cpsw/rules.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cpsw {

namespace {

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw std::runtime_error("rule line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream in(line);
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

RuleCondition::Op parse_op(const std::string& s, int line) {
  using Op = RuleCondition::Op;
  if (s == "<=") return Op::LE;
  if (s == "<") return Op::LT;
  if (s == ">=") return Op::GE;
  if (s == ">") return Op::GT;
  if (s == "=" || s == "==") return Op::EQ;
  parse_fail(line, "unknown comparison operator '" + s + "'");
}

double parse_num(const std::string& s, int line) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    parse_fail(line, "expected a number, got '" + s + "'");
  }
}

bool cond_holds(const RuleCondition& c, double v) {
  using Op = RuleCondition::Op;
  switch (c.op) {
    case Op::LE: return v <= c.value;
    case Op::LT: return v < c.value;
    case Op::GE: return v >= c.value;
    case Op::GT: return v > c.value;
    case Op::EQ: return std::abs(v - c.value) < 1e-9;
  }
  return false;
}

bool consequence_holds(const Rule& r, const TimeSeries& s, Eigen::Index t) {
  bool any = false;
  bool all = true;
  for (const auto& c : r.consequences) {
    bool ok = std::abs(s.values(t, c.feature) - c.value) < 1e-9;
    any = any || ok;
    all = all && ok;
  }
  return r.any_of ? any : all;
}

}  // namespace

int RuleSet::max_delay() const {
  int m = 0;
  for (const auto& r : rules) m = std::max(m, r.delay);
  return m;
}

RuleSet parse_rules(const std::string& text, const FeatureSchema& schema) {
  RuleSet out;
  out.schema = schema;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto toks = tokenize(line);
    if (toks.empty()) continue;

    size_t i = 0;
    auto expect = [&](const std::string& kw) {
      if (i >= toks.size() || toks[i] != kw)
        parse_fail(lineno, "expected '" + kw + "'");
      ++i;
    };
    auto next = [&]() -> const std::string& {
      if (i >= toks.size()) parse_fail(lineno, "unexpected end of rule");
      return toks[i++];
    };

    Rule rule;
    rule.id = static_cast<int>(out.rules.size()) + 1;
    rule.text = line;

    expect("IF");
    while (true) {
      RuleCondition c;
      const std::string& name = next();
      c.feature = schema.index_of(name);
      if (c.feature < 0) parse_fail(lineno, "unknown feature '" + name + "'");
      if (!schema.is_sensor(c.feature))
        parse_fail(lineno, "condition feature '" + name + "' is not a sensor");
      c.op = parse_op(next(), lineno);
      c.value = parse_num(next(), lineno);
      rule.conditions.push_back(c);
      if (i < toks.size() && toks[i] == "AND") {
        ++i;
        continue;
      }
      break;
    }

    expect("THEN");
    bool saw_and = false, saw_or = false;
    while (true) {
      RuleConsequence c;
      const std::string& name = next();
      c.feature = schema.index_of(name);
      if (c.feature < 0) parse_fail(lineno, "unknown feature '" + name + "'");
      if (!schema.is_actuator(c.feature))
        parse_fail(lineno, "consequence feature '" + name + "' is not an actuator");
      expect("=");
      c.value = parse_num(next(), lineno);
      rule.consequences.push_back(c);
      if (i < toks.size() && (toks[i] == "AND" || toks[i] == "OR")) {
        if (toks[i] == "AND") saw_and = true;
        if (toks[i] == "OR") saw_or = true;
        ++i;
        continue;
      }
      break;
    }
    if (saw_and && saw_or)
      parse_fail(lineno, "consequence cannot mix AND with OR");
    rule.any_of = saw_or;

    expect("AFTER");
    double delay = parse_num(next(), lineno);
    if (delay < 0 || delay != std::floor(delay))
      parse_fail(lineno, "delay must be a non-negative integer");
    rule.delay = static_cast<int>(delay);
    expect("SECONDS");
    if (i != toks.size()) parse_fail(lineno, "trailing tokens after SECONDS");

    out.rules.push_back(std::move(rule));
  }
  return out;
}

RuleSet load_rules(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rule file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str(), schema);
}

RuleVerdict check(const TimeSeries& raw, const RuleSet& rules) {
  RuleVerdict verdict;
  const Eigen::Index len = raw.length();
  for (const auto& rule : rules.rules) {
    const Eigen::Index delay = rule.delay;
    // run[t] = number of consecutive steps ending at t with all conditions true
    Eigen::Index run = 0;
    for (Eigen::Index t = 0; t < len; ++t) {
      bool holds = true;
      for (const auto& c : rule.conditions)
        if (!cond_holds(c, raw.values(t, c.feature))) {
          holds = false;
          break;
        }
      run = holds ? run + 1 : 0;
      if (run >= delay + 1 && !consequence_holds(rule, raw, t))
        verdict.violated.push_back({rule.id, t});
    }
  }
  verdict.pass = verdict.violated.empty();
  return verdict;
}

bool oracle(const TimeSeries& raw, const RuleSet& rules) {
  return check(raw, rules).pass;
}

std::string default_rules_text() {
  return
      "# Invariants for the two-stage plant (raw units).\n"
      "IF LIT101 <= 490 THEN MV101 = 2 AFTER 12 SECONDS\n"
      "IF FIT101 > 1.0 THEN MV101 = 2 AFTER 1 SECONDS\n"
      "IF FIT201 > 1.0 THEN P101 = 2 OR P102 = 2 AFTER 1 SECONDS\n"
      "IF LIT101 <= 250 THEN P101 = 1 AND P102 = 1 AFTER 2 SECONDS\n"
      "IF LIT201 <= 490 THEN MV201 = 2 AFTER 12 SECONDS\n"
      "IF FIT201 > 1.0 AND LIT201 >= 810 THEN MV201 = 1 AFTER 2 SECONDS\n"
      "IF LIT101 > 250 THEN P102 = 1 AFTER 2 SECONDS\n"
      "IF LIT201 > 250 THEN P202 = 1 AFTER 2 SECONDS\n";
}

}  // namespace cpsw
