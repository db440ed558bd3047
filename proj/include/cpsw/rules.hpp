#pragma once

#include <string>
#include <vector>

#include "cpsw/core.hpp"

namespace cpsw {

// Timed invariant over raw values:
//   IF <sensor> <op> <num> [AND ...] THEN <actuator> = <num> [AND|OR ...]
//   AFTER <k> SECONDS
// Violated at t+delay when every condition holds on all of [t, t+delay]
// (level triggered) and the consequence fails at t+delay.
struct RuleCondition {
  int feature = -1;
  enum class Op { LE, LT, GE, GT, EQ } op = Op::LE;
  double value = 0.0;
};

struct RuleConsequence {
  int feature = -1;
  double value = 0.0;  // raw actuator code
};

struct Rule {
  int id = 0;  // 1-based position in the rule file
  std::vector<RuleCondition> conditions;     // joined by AND
  std::vector<RuleConsequence> consequences;  // joined by `any_of ? OR : AND`
  bool any_of = false;
  int delay = 0;  // seconds
  std::string text;
};

struct RuleSet {
  FeatureSchema schema;
  std::vector<Rule> rules;
  int max_delay() const;
};

struct RuleViolation {
  int rule_id = 0;
  Eigen::Index timestep = 0;  // consequence time
};

struct RuleVerdict {
  bool pass = true;
  std::vector<RuleViolation> violated;
};

RuleSet parse_rules(const std::string& text, const FeatureSchema& schema);
RuleSet load_rules(const std::string& path, const FeatureSchema& schema);

// Defender view: every violation with rule identity and timestep.
RuleVerdict check(const TimeSeries& raw, const RuleSet& rules);

// Attacker view: pass/fail only.
bool oracle(const TimeSeries& raw, const RuleSet& rules);

// The rule set shipped with the two-stage plant (see data/rules.txt).
std::string default_rules_text();

}  // namespace cpsw
