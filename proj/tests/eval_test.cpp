#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cpsw/eval.hpp"
#include "json.hpp"

using namespace cpsw;

namespace {

std::vector<Label> labels_from(const std::string& pattern) {
  std::vector<Label> out;
  for (char c : pattern) out.push_back(c == 'A' ? Label::Attack : Label::Normal);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentOutcome sample_outcome() {
  ExperimentOutcome o;
  o.train_final_loss = 0.004375;
  ScenarioReport base;
  base.scenario = "none";
  base.detector = confusion_metrics(labels_from("AAANNNNNNN"),
                                    labels_from("AANNNNNNNN"));
  ScenarioReport noisy;
  noisy.scenario = "all-10pct";
  noisy.detector = confusion_metrics(labels_from("AAANNNNNNN"),
                                     labels_from("AAAAAAAANN"));
  noisy.perturbed_steps = 8;
  noisy.rule_flagged_steps = 6;
  noisy.rule_detection_rate = 0.75;
  noisy.rule_pass_rate = 0.4;
  noisy.rule_histogram = {{2, 5}, {3, 1}};
  noisy.ga_attempted = 6;
  noisy.ga_succeeded = 6;
  o.scenarios = {base, noisy};
  return o;
}

}  // namespace

TEST_CASE("confusion metrics arithmetic") {
  // 8 TP, 2 FN, 2 FP, 8 TN -> precision = recall = f1 = accuracy = 0.8.
  auto truth = labels_from("AAAAAAAAAANNNNNNNNNN");
  auto pred = labels_from("AAAAAAAANNAANNNNNNNN");
  MetricsReport m = confusion_metrics(truth, pred);
  CHECK(m.tp == 8);
  CHECK(m.fn == 2);
  CHECK(m.fp == 2);
  CHECK(m.tn == 8);
  CHECK(m.precision == doctest::Approx(0.8));
  CHECK(m.recall == doctest::Approx(0.8));
  CHECK(m.f1 == doctest::Approx(0.8));
  CHECK(m.accuracy == doctest::Approx(0.8));
}

TEST_CASE("degenerate predictions do not divide by zero") {
  // Nothing predicted positive: precision defined as 0.
  MetricsReport m =
      confusion_metrics(labels_from("AANN"), labels_from("NNNN"));
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
  CHECK(m.accuracy == doctest::Approx(0.5));

  // No positives in the truth: recall defined as 0.
  MetricsReport m2 =
      confusion_metrics(labels_from("NNNN"), labels_from("ANNN"));
  CHECK(m2.recall == 0.0);
  CHECK(m2.precision == 0.0);

  CHECK_THROWS_AS(confusion_metrics(labels_from("AA"), labels_from("A")),
                  std::invalid_argument);
}

TEST_CASE("json report round-trips through a parser") {
  const std::string path = "eval_report.json";
  emit_report(sample_outcome(), path, "json");
  nlohmann::json j = nlohmann::json::parse(slurp(path));
  std::remove(path.c_str());

  CHECK(j["train_final_loss"].get<double>() == doctest::Approx(0.004375));
  REQUIRE(j["scenarios"].size() == 2);
  CHECK(j["scenarios"][0]["scenario"] == "none");
  CHECK(j["scenarios"][1]["scenario"] == "all-10pct");
  CHECK(j["scenarios"][1]["confusion"]["fp"].get<long>() == 5);
  CHECK(j["scenarios"][1]["rule_histogram"]["2"].get<long>() == 5);
  CHECK(j["scenarios"][1]["ga_succeeded"].get<long>() == 6);
  const double acc = j["scenarios"][1]["accuracy"].get<double>();
  CHECK(acc == doctest::Approx(0.5));
}

TEST_CASE("csv report has one data row per scenario") {
  const std::string path = "eval_report.csv";
  emit_report(sample_outcome(), path, "csv");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("scenario,", 0) == 0);
  int rows = 0;
  std::string first;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (rows == 0) first = line;
    ++rows;
  }
  in.close();
  std::remove(path.c_str());
  CHECK(rows == 2);
  CHECK(first.rfind("none,", 0) == 0);
}

TEST_CASE("markdown report renders a table") {
  const std::string path = "eval_report.md";
  emit_report(sample_outcome(), path, "md");
  std::string text = slurp(path);
  std::remove(path.c_str());
  CHECK(text.find("| none") != std::string::npos);
  CHECK(text.find("| all-10pct") != std::string::npos);
  CHECK(text.find("0.004375") != std::string::npos);
}

TEST_CASE("unknown report formats are rejected") {
  CHECK_THROWS_AS(emit_report(sample_outcome(), "eval_report.xml", "xml"),
                  std::invalid_argument);
  std::remove("eval_report.xml");
}

TEST_CASE("identical outcomes serialize to identical bytes") {
  emit_report(sample_outcome(), "eval_a.json", "json");
  emit_report(sample_outcome(), "eval_b.json", "json");
  std::string a = slurp("eval_a.json"), b = slurp("eval_b.json");
  std::remove("eval_a.json");
  std::remove("eval_b.json");
  CHECK(a == b);
  CHECK_FALSE(a.empty());
}
