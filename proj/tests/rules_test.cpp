#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <stdexcept>

#include "cpsw/plantsim.hpp"
#include "cpsw/rules.hpp"

using namespace cpsw;

namespace {

FeatureSchema plant_schema() { return PlantConfig::defaults().schema(); }

// A series where every sensor sits comfortably in band and every actuator is
// set so no shipped rule fires: valves open, all pumps running.
TimeSeries quiet_series(const FeatureSchema& schema, Eigen::Index len) {
  TimeSeries s;
  s.values.resize(len, schema.size());
  for (Eigen::Index t = 0; t < len; ++t) {
    s.values(t, schema.index_of("FIT101")) = 0.5;
    s.values(t, schema.index_of("LIT101")) = 650.0;
    s.values(t, schema.index_of("FIT201")) = 0.5;
    s.values(t, schema.index_of("LIT201")) = 650.0;
    s.values(t, schema.index_of("MV101")) = 2.0;
    s.values(t, schema.index_of("MV201")) = 2.0;
    s.values(t, schema.index_of("P101")) = 2.0;
    s.values(t, schema.index_of("P102")) = 1.0;
    s.values(t, schema.index_of("P201")) = 2.0;
    s.values(t, schema.index_of("P202")) = 1.0;
  }
  return s;
}

}  // namespace

TEST_CASE("grammar: conditions, consequences, delay") {
  FeatureSchema schema = plant_schema();
  RuleSet rs = parse_rules(
      "# comment line\n"
      "IF LIT101 <= 490 THEN MV101 = 2 AFTER 12 SECONDS\n"
      "IF FIT201 > 1.0 AND LIT201 >= 810 THEN MV201 = 1 AFTER 2 SECONDS\n"
      "IF FIT201 > 1.0 THEN P101 = 2 OR P102 = 2 AFTER 1 SECONDS\n",
      schema);
  REQUIRE(rs.rules.size() == 3);
  CHECK(rs.rules[0].id == 1);
  CHECK(rs.rules[0].conditions.size() == 1);
  CHECK(rs.rules[0].conditions[0].op == RuleCondition::Op::LE);
  CHECK(rs.rules[0].delay == 12);
  CHECK(rs.rules[1].conditions.size() == 2);
  CHECK_FALSE(rs.rules[1].any_of);
  CHECK(rs.rules[2].consequences.size() == 2);
  CHECK(rs.rules[2].any_of);
  CHECK(rs.max_delay() == 12);
}

TEST_CASE("parse errors carry the line number and cause") {
  FeatureSchema schema = plant_schema();
  CHECK_THROWS_WITH_AS(
      parse_rules("IF NOPE <= 1 THEN MV101 = 2 AFTER 1 SECONDS\n", schema),
      doctest::Contains("NOPE"), std::runtime_error);
  // Conditions test sensors, consequences set actuators; not the reverse.
  CHECK_THROWS_AS(
      parse_rules("IF MV101 <= 1 THEN MV101 = 2 AFTER 1 SECONDS\n", schema),
      std::runtime_error);
  CHECK_THROWS_AS(
      parse_rules("IF LIT101 <= 1 THEN LIT201 = 2 AFTER 1 SECONDS\n", schema),
      std::runtime_error);
  // Mixed AND/OR in the consequence list is ambiguous.
  CHECK_THROWS_WITH_AS(
      parse_rules("IF LIT101 <= 1 THEN MV101 = 2 AND P101 = 2 OR P102 = 2"
                  " AFTER 1 SECONDS\n",
                  schema),
      doctest::Contains("mix"), std::runtime_error);
  CHECK_THROWS_AS(
      parse_rules("IF LIT101 <= 1 THEN MV101 = 2 AFTER -3 SECONDS\n", schema),
      std::runtime_error);
  CHECK_THROWS_AS(parse_rules("IF LIT101 <= 1 THEN MV101 = 2\n", schema),
                  std::runtime_error);
}

TEST_CASE("delay semantics: condition must hold over the whole delay window") {
  FeatureSchema schema = plant_schema();
  RuleSet rs =
      parse_rules("IF LIT101 <= 490 THEN MV101 = 2 AFTER 3 SECONDS\n", schema);
  const int lit = schema.index_of("LIT101");
  const int mv = schema.index_of("MV101");

  TimeSeries s = quiet_series(schema, 12);
  for (Eigen::Index t = 4; t < 12; ++t) s.values(t, lit) = 480.0;  // low from t=4
  for (Eigen::Index t = 0; t < 12; ++t) s.values(t, mv) = 1.0;     // never opens

  RuleVerdict v = check(s, rs);
  REQUIRE_FALSE(v.pass);
  // First violation lands 3 seconds after the condition started holding.
  CHECK(v.violated.front().timestep == 7);
  CHECK(v.violated.front().rule_id == 1);
  // Level-triggered: it keeps firing while the condition persists.
  CHECK(v.violated.size() == 12 - 7);
}

TEST_CASE("a dip shorter than the delay never fires") {
  FeatureSchema schema = plant_schema();
  RuleSet rs =
      parse_rules("IF LIT101 <= 490 THEN MV101 = 2 AFTER 3 SECONDS\n", schema);
  const int lit = schema.index_of("LIT101");
  TimeSeries s = quiet_series(schema, 12);
  s.values(5, lit) = 480.0;
  s.values(6, lit) = 480.0;  // holds for 2 s only
  for (Eigen::Index t = 0; t < 12; ++t)
    s.values(t, schema.index_of("MV101")) = 1.0;
  CHECK(check(s, rs).pass);
}

TEST_CASE("compliance at the deadline suppresses the violation") {
  FeatureSchema schema = plant_schema();
  RuleSet rs =
      parse_rules("IF LIT101 <= 490 THEN MV101 = 2 AFTER 3 SECONDS\n", schema);
  const int lit = schema.index_of("LIT101");
  TimeSeries s = quiet_series(schema, 12);
  for (Eigen::Index t = 4; t < 12; ++t) s.values(t, lit) = 480.0;
  // MV101 stays open (2.0) throughout in quiet_series, so the rule is met.
  CHECK(check(s, rs).pass);
}

TEST_CASE("OR consequences accept any listed actuator state") {
  FeatureSchema schema = plant_schema();
  RuleSet rs = parse_rules(
      "IF FIT201 > 1.0 THEN P101 = 2 OR P102 = 2 AFTER 1 SECONDS\n", schema);
  TimeSeries s = quiet_series(schema, 6);
  const int fit = schema.index_of("FIT201");
  for (Eigen::Index t = 0; t < 6; ++t) s.values(t, fit) = 2.0;

  // quiet_series runs P101; swap the duty to the backup and it still passes.
  CHECK(check(s, rs).pass);
  for (Eigen::Index t = 0; t < 6; ++t) {
    s.values(t, schema.index_of("P101")) = 1.0;
    s.values(t, schema.index_of("P102")) = 2.0;
  }
  CHECK(check(s, rs).pass);
  // Both off violates from t=1 on.
  for (Eigen::Index t = 0; t < 6; ++t)
    s.values(t, schema.index_of("P102")) = 1.0;
  RuleVerdict v = check(s, rs);
  REQUIRE_FALSE(v.pass);
  CHECK(v.violated.front().timestep == 1);
}

TEST_CASE("AND consequences require every listed actuator state") {
  FeatureSchema schema = plant_schema();
  RuleSet rs = parse_rules(
      "IF LIT101 <= 250 THEN P101 = 1 AND P102 = 1 AFTER 2 SECONDS\n", schema);
  TimeSeries s = quiet_series(schema, 6);
  const int lit = schema.index_of("LIT101");
  for (Eigen::Index t = 0; t < 6; ++t) {
    s.values(t, lit) = 200.0;
    s.values(t, schema.index_of("P101")) = 1.0;
    s.values(t, schema.index_of("P102")) = 1.0;
  }
  CHECK(check(s, rs).pass);
  s.values(4, schema.index_of("P102")) = 2.0;  // one pump still running
  RuleVerdict v = check(s, rs);
  REQUIRE_FALSE(v.pass);
  CHECK(v.violated.size() == 1);
  CHECK(v.violated.front().timestep == 4);
}

TEST_CASE("oracle agrees with check on pass/fail") {
  FeatureSchema schema = plant_schema();
  RuleSet rs = parse_rules(default_rules_text(), schema);
  TimeSeries s = quiet_series(schema, 20);
  CHECK(oracle(s, rs) == check(s, rs).pass);
  CHECK(oracle(s, rs));

  s.values(10, schema.index_of("FIT101")) = 2.0;
  s.values(11, schema.index_of("FIT101")) = 2.0;
  for (Eigen::Index t = 10; t < 12; ++t)
    s.values(t, schema.index_of("MV101")) = 1.0;  // flow without an open valve
  CHECK_FALSE(oracle(s, rs));
  CHECK_FALSE(check(s, rs).pass);
}

TEST_CASE("shipped rule set parses and passes on a simulated normal run") {
  PlantConfig cfg = PlantConfig::defaults();
  FeatureSchema schema = cfg.schema();
  RuleSet rs = parse_rules(default_rules_text(), schema);
  CHECK(rs.rules.size() >= 6);
  TimeSeries normal = simulate_normal(cfg, 3600);
  RuleVerdict v = check(normal, rs);
  CHECK(v.pass);
}
