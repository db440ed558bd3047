#pragma once

#include <map>
#include <string>
#include <vector>

#include "cpsw/attack.hpp"
#include "cpsw/config.hpp"
#include "cpsw/core.hpp"
#include "cpsw/cusum.hpp"
#include "cpsw/ga.hpp"
#include "cpsw/lstm.hpp"
#include "cpsw/plantsim.hpp"
#include "cpsw/rules.hpp"

namespace cpsw {

struct MetricsReport {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0, accuracy = 0.0;
};

// Attack is the positive class; precision is 0 when nothing is predicted
// positive.
MetricsReport confusion_metrics(const std::vector<Label>& truth,
                                const std::vector<Label>& predicted);

struct ScenarioReport {
  std::string scenario;
  MetricsReport detector;            // recomputed ground truth vs detector
  long perturbed_steps = 0;          // timesteps the crafting stage touched
  long rule_flagged_steps = 0;       // perturbed timesteps with a violation
  double rule_detection_rate = 0.0;  // flagged / perturbed
  double rule_pass_rate = 0.0;       // emitted timesteps with no violation
  std::map<int, long> rule_histogram;  // rule id -> violation count (defender)
  long ga_attempted = 0, ga_succeeded = 0;
};

// Everything a scenario run needs besides the data.
struct ExperimentContext {
  FeatureSchema schema;
  OperatingRanges ranges;
  LstmModel model;
  DetectorConfig detector;
  RuleSet rules;
  GaParams ga;
};

// One Fig.-2-style pass: craft (unless scenario "none"), optionally repair
// actuators until the rule oracle passes, then score the detector against
// ground truth recomputed on the emitted series. `emitted_raw`, when given,
// receives the denormalized series that was actually scored.
ScenarioReport run_scenario(const ExperimentContext& ctx,
                            const TimeSeries& raw, const ScenarioParams& params,
                            TimeSeries* emitted_raw = nullptr);

struct ExperimentOutcome {
  std::vector<ScenarioReport> scenarios;
  double train_final_loss = 0.0;
  MetricsReport normal_fp;  // detector on held-out normal traffic
};

// Full pipeline from a key-value experiment spec: simulate, train, calibrate,
// run every scenario, persist intermediate series and thresholds under
// `artifact_dir` (skipped when empty).
ExperimentOutcome run_experiment(const Config& spec,
                                 const std::string& artifact_dir);

void emit_report(const ExperimentOutcome& outcome, const std::string& path,
                 const std::string& format);  // csv, json or md

}  // namespace cpsw
