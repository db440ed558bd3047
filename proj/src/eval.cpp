#include "cpsw/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cpsw/ingest.hpp"
#include "json.hpp"

namespace cpsw {

MetricsReport confusion_metrics(const std::vector<Label>& truth,
                                const std::vector<Label>& predicted) {
  if (truth.size() != predicted.size())
    throw std::invalid_argument("confusion_metrics: length mismatch");
  MetricsReport m;
  for (size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == Label::Attack;
    const bool p = predicted[i] == Label::Attack;
    if (t && p)
      ++m.tp;
    else if (!t && p)
      ++m.fp;
    else if (t && !p)
      ++m.fn;
    else
      ++m.tn;
  }
  const long total = m.tp + m.fp + m.tn + m.fn;
  m.precision = (m.tp + m.fp) > 0
                    ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp)
                    : 0.0;
  m.recall = (m.tp + m.fn) > 0
                 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn)
                 : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.accuracy = total > 0
                   ? static_cast<double>(m.tp + m.tn) / static_cast<double>(total)
                   : 0.0;
  return m;
}

namespace {

// Rules react to an actuator assignment at timestep t only through the
// consequence evaluated at t, so a slice ending at t with max_delay rows of
// history decides violations at t exactly like the full series does.
bool actuators_pass_at(const TimeSeries& raw, Eigen::Index t,
                       const Eigen::VectorXd& raw_actuators,
                       const std::vector<int>& actuator_cols,
                       const RuleSet& rules) {
  const Eigen::Index t0 = std::max<Eigen::Index>(0, t - rules.max_delay());
  TimeSeries slice;
  slice.start_time = raw.start_time + static_cast<std::int64_t>(t0 * raw.period);
  slice.period = raw.period;
  slice.values = raw.values.middleRows(t0, t - t0 + 1);
  for (size_t a = 0; a < actuator_cols.size(); ++a)
    slice.values(t - t0, actuator_cols[a]) =
        raw_actuators(static_cast<Eigen::Index>(a));
  const RuleVerdict v = check(slice, rules);
  for (const auto& viol : v.violated)
    if (viol.timestep == t - t0) return false;
  return true;
}

}  // namespace

ScenarioReport run_scenario(const ExperimentContext& ctx, const TimeSeries& raw,
                            const ScenarioParams& params,
                            TimeSeries* emitted_raw) {
  ScenarioReport rep;
  rep.scenario = params.name;

  const FeatureSchema& schema = ctx.schema;
  const NormParams& norm = ctx.model.norm;
  const int w = ctx.model.hp().window;

  TimeSeries normalized = normalize(raw, schema, norm);
  normalized.labels = ground_truth(raw, ctx.ranges);

  TimeSeries emitted_norm;
  std::vector<bool> modified(static_cast<size_t>(raw.length()), false);
  if (params.name == "none") {
    emitted_norm = normalized;
  } else {
    CraftResult cr = craft(normalized, ctx.model, params.eps, schema);
    emitted_norm = std::move(cr.series);
    modified = std::move(cr.modified);
  }

  // Raw view of the emitted data. Entries the attack never touched keep their
  // original readings bit-exactly: normalization clips out-of-range sensor
  // values, so a blanket denormalize would quietly launder the very evidence
  // the ground-truth model looks for.
  TimeSeries emitted = raw;
  for (Eigen::Index t = 0; t < raw.length(); ++t) {
    if (!modified[static_cast<size_t>(t)]) continue;
    for (int f = 0; f < schema.size(); ++f) {
      const double nv = emitted_norm.values(t, f);
      if (nv != normalized.values(t, f))
        emitted.values(t, f) = norm.denormalize_value(f, nv, schema, t);
    }
  }

  const std::vector<int> actuator_cols = schema.actuator_indices();
  std::vector<FeatureKind> actuator_kinds;
  for (int a : actuator_cols) actuator_kinds.push_back(schema.at(a).kind);

  if (params.ga_repair) {
    std::set<Eigen::Index> flagged;
    for (const auto& v : check(emitted, ctx.rules).violated)
      flagged.insert(v.timestep);
    for (Eigen::Index t : flagged) {
      Eigen::VectorXd original(static_cast<Eigen::Index>(actuator_cols.size()));
      for (size_t a = 0; a < actuator_cols.size(); ++a)
        original(static_cast<Eigen::Index>(a)) =
            emitted_norm.values(t, actuator_cols[a]);
      auto oracle_fn = [&](const Eigen::VectorXd& cand) {
        Eigen::VectorXd raw_cand(cand.size());
        for (size_t a = 0; a < actuator_cols.size(); ++a)
          raw_cand(static_cast<Eigen::Index>(a)) = norm.denormalize_value(
              actuator_cols[a], cand(static_cast<Eigen::Index>(a)), schema, t);
        return actuators_pass_at(emitted, t, raw_cand, actuator_cols,
                                 ctx.rules);
      };
      GaParams gp = ctx.ga;
      gp.seed = ctx.ga.seed + static_cast<unsigned>(t);
      const GaResult res =
          repair_actuators(original, actuator_kinds, oracle_fn, gp);
      ++rep.ga_attempted;
      if (res.success) {
        ++rep.ga_succeeded;
        for (size_t a = 0; a < actuator_cols.size(); ++a) {
          const double code = res.actuators(static_cast<Eigen::Index>(a));
          emitted_norm.values(t, actuator_cols[a]) = code;
          emitted.values(t, actuator_cols[a]) =
              norm.denormalize_value(actuator_cols[a], code, schema, t);
        }
      }
    }
  }

  // Defender-side rule sweep over the emitted series.
  const RuleVerdict verdict = check(emitted, ctx.rules);
  std::set<Eigen::Index> violating;
  for (const auto& v : verdict.violated) {
    violating.insert(v.timestep);
    ++rep.rule_histogram[v.rule_id];
  }
  for (size_t t = 0; t < modified.size(); ++t) {
    if (!modified[t]) continue;
    ++rep.perturbed_steps;
    if (violating.count(static_cast<Eigen::Index>(t))) ++rep.rule_flagged_steps;
  }
  rep.rule_detection_rate =
      rep.perturbed_steps > 0
          ? static_cast<double>(rep.rule_flagged_steps) /
                static_cast<double>(rep.perturbed_steps)
          : 0.0;
  rep.rule_pass_rate =
      1.0 - static_cast<double>(violating.size()) /
                static_cast<double>(emitted.length());

  // Ground truth is always recomputed on the series the detector scores.
  emitted.labels = ground_truth(emitted, ctx.ranges);
  const Eigen::MatrixXd residuals = prediction_residuals(
      ctx.model, emitted_norm.values, schema.sensor_indices());
  const std::vector<Label> y_c = classify(residuals, ctx.detector);
  const std::vector<Label> y_t(emitted.labels.begin() + w,
                               emitted.labels.end());
  rep.detector = confusion_metrics(y_t, y_c);

  if (emitted_raw) *emitted_raw = std::move(emitted);
  return rep;
}

namespace {

Config subsection(const Config& cfg, const std::string& prefix) {
  std::string text;
  for (const auto& key : cfg.keys_with_prefix(prefix))
    text += key.substr(prefix.size()) + " = " + cfg.get_string(key) + "\n";
  return Config::from_string(text);
}

Hyperparams hyperparams_from(const Config& spec, unsigned seed) {
  Hyperparams hp;
  hp.window = static_cast<int>(spec.get_int("model.window", hp.window));
  hp.hidden = static_cast<int>(spec.get_int("model.hidden", hp.hidden));
  hp.epochs = static_cast<int>(spec.get_int("model.epochs", hp.epochs));
  hp.batch = static_cast<int>(spec.get_int("model.batch", hp.batch));
  hp.learning_rate = spec.get_double("model.learning_rate", hp.learning_rate);
  hp.seed = seed;
  return hp;
}

}  // namespace

ExperimentOutcome run_experiment(const Config& spec,
                                 const std::string& artifact_dir) {
  const unsigned seed = static_cast<unsigned>(spec.get_int("seed", 42));

  Config plant_cfg = subsection(spec, "plant.");
  PlantConfig plant = PlantConfig::from_config(plant_cfg);
  if (!plant_cfg.has("seed")) plant.seed = seed;
  const FeatureSchema schema = plant.schema();
  const OperatingRanges ranges = OperatingRanges::from_plant(plant);

  const Eigen::Index train_dur = spec.get_int("train.duration", 7200);
  const Eigen::Index holdout_dur = spec.get_int("holdout.duration", 1800);
  const Eigen::Index calib_dur = spec.get_int("calibration.duration", 3000);
  const Eigen::Index test_dur = spec.get_int("test.duration", 3600);

  TimeSeries train_raw = simulate_normal(plant, train_dur);
  const NormParams norm = fit_normalization(train_raw, schema);
  const TimeSeries train_norm = normalize(train_raw, schema, norm);

  const Hyperparams hp = hyperparams_from(spec, seed);
  TrainResult tr = train(window(train_norm, hp.window), hp);
  tr.model.schema_hash = schema.hash();
  tr.model.norm = norm;

  PlantConfig holdout_plant = plant;
  holdout_plant.seed = plant.seed + 1;
  const TimeSeries holdout_raw = simulate_normal(holdout_plant, holdout_dur);
  const Eigen::MatrixXd holdout_res = prediction_residuals(
      tr.model, normalize(holdout_raw, schema, norm).values,
      schema.sensor_indices());

  PlantConfig calib_plant = plant;
  calib_plant.seed = plant.seed + 2;
  AttackScript calib_script =
      AttackScript::from_config(subsection(spec, "calibration."), schema);
  calib_script.validate(schema, calib_dur);
  const SimulationResult calib =
      simulate_with_attacks(calib_plant, calib_dur, calib_script);
  const Eigen::MatrixXd calib_res = prediction_residuals(
      tr.model, normalize(calib.historian, schema, norm).values,
      schema.sensor_indices());
  const std::vector<Label> calib_truth = ground_truth(calib.historian, ranges);

  const double slack_frac = spec.get_double("detector.slack_frac", 0.05);
  const std::vector<double> slack = slack_from_residuals(holdout_res, slack_frac);
  std::vector<bool> constant;
  for (int s : schema.sensor_indices())
    constant.push_back(norm.sensors[static_cast<size_t>(s)].constant);
  CalibrationInput ci;
  ci.residuals = calib_res;
  ci.labels.assign(calib_truth.begin() + hp.window, calib_truth.end());
  const DetectorConfig detector =
      calibrate_thresholds(ci, holdout_res, slack, constant,
                           spec.get_double("detector.fallback_factor", 3.0),
                           spec.get_double("detector.ceiling_margin", 2.0));

  ExperimentOutcome out;
  out.train_final_loss = tr.final_loss;
  {
    const std::vector<Label> truth(
        static_cast<size_t>(holdout_res.rows()), Label::Normal);
    out.normal_fp = confusion_metrics(truth, classify(holdout_res, detector));
  }

  PlantConfig test_plant = plant;
  test_plant.seed = plant.seed + 3;
  AttackScript test_script =
      AttackScript::from_config(subsection(spec, "test."), schema);
  test_script.validate(schema, test_dur);
  const SimulationResult test =
      simulate_with_attacks(test_plant, test_dur, test_script);

  ExperimentContext ctx;
  ctx.schema = schema;
  ctx.ranges = ranges;
  ctx.model = tr.model;
  ctx.detector = detector;
  ctx.rules = parse_rules(default_rules_text(), schema);
  if (spec.has("rules.path"))
    ctx.rules = load_rules(spec.get_string("rules.path"), schema);
  ctx.ga.seed = seed;

  const bool persist = !artifact_dir.empty();
  if (persist) {
    std::filesystem::create_directories(artifact_dir);
    save_detector(detector, schema, artifact_dir + "/thresholds.txt");
    save_model(tr.model, artifact_dir + "/model.json");
    write_historian_csv(test.historian, schema, artifact_dir + "/test.csv");
  }

  std::vector<ScenarioParams> scenarios;
  scenarios.push_back(ScenarioParams{"none", EpsilonSpec{}, false});
  for (auto& s : standard_scenarios()) scenarios.push_back(s);
  for (const auto& sc : scenarios) {
    TimeSeries emitted;
    out.scenarios.push_back(run_scenario(ctx, test.historian, sc, &emitted));
    if (persist)
      write_historian_csv(emitted, schema,
                          artifact_dir + "/" + sc.name + ".csv");
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void emit_csv(const ExperimentOutcome& o, std::ostream& os) {
  os << "scenario,tp,fp,tn,fn,precision,recall,f1,accuracy,"
        "perturbed,rule_flagged,rule_detection_rate,rule_pass_rate,"
        "ga_attempted,ga_succeeded\n";
  for (const auto& s : o.scenarios) {
    const MetricsReport& m = s.detector;
    os << s.scenario << ',' << m.tp << ',' << m.fp << ',' << m.tn << ','
       << m.fn << ',' << fmt(m.precision) << ',' << fmt(m.recall) << ','
       << fmt(m.f1) << ',' << fmt(m.accuracy) << ',' << s.perturbed_steps
       << ',' << s.rule_flagged_steps << ',' << fmt(s.rule_detection_rate)
       << ',' << fmt(s.rule_pass_rate) << ',' << s.ga_attempted << ','
       << s.ga_succeeded << '\n';
  }
}

void emit_md(const ExperimentOutcome& o, std::ostream& os) {
  os << "| scenario | precision | recall | f1 | accuracy | rule detection | "
        "rule pass |\n";
  os << "|---|---|---|---|---|---|---|\n";
  for (const auto& s : o.scenarios) {
    const MetricsReport& m = s.detector;
    os << "| " << s.scenario << " | " << fmt(m.precision) << " | "
       << fmt(m.recall) << " | " << fmt(m.f1) << " | " << fmt(m.accuracy)
       << " | " << fmt(s.rule_detection_rate) << " | " << fmt(s.rule_pass_rate)
       << " |\n";
  }
  os << "\ntraining loss " << fmt(o.train_final_loss)
     << ", false alarms on held-out normal traffic: " << o.normal_fp.fp << "/"
     << (o.normal_fp.fp + o.normal_fp.tn) << "\n";
}

void emit_json(const ExperimentOutcome& o, std::ostream& os) {
  nlohmann::json j;
  j["train_final_loss"] = o.train_final_loss;
  j["normal_false_positives"] = o.normal_fp.fp;
  j["normal_timesteps"] = o.normal_fp.fp + o.normal_fp.tn;
  j["scenarios"] = nlohmann::json::array();
  for (const auto& s : o.scenarios) {
    nlohmann::json js;
    js["scenario"] = s.scenario;
    js["confusion"] = {{"tp", s.detector.tp},
                       {"fp", s.detector.fp},
                       {"tn", s.detector.tn},
                       {"fn", s.detector.fn}};
    js["precision"] = s.detector.precision;
    js["recall"] = s.detector.recall;
    js["f1"] = s.detector.f1;
    js["accuracy"] = s.detector.accuracy;
    js["perturbed_steps"] = s.perturbed_steps;
    js["rule_flagged_steps"] = s.rule_flagged_steps;
    js["rule_detection_rate"] = s.rule_detection_rate;
    js["rule_pass_rate"] = s.rule_pass_rate;
    js["ga_attempted"] = s.ga_attempted;
    js["ga_succeeded"] = s.ga_succeeded;
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [rule, count] : s.rule_histogram)
      hist[std::to_string(rule)] = count;
    js["rule_histogram"] = std::move(hist);
    j["scenarios"].push_back(std::move(js));
  }
  os << j.dump(2) << '\n';
}

}  // namespace

void emit_report(const ExperimentOutcome& outcome, const std::string& path,
                 const std::string& format) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write report: " + path);
  if (format == "csv")
    emit_csv(outcome, os);
  else if (format == "md")
    emit_md(outcome, os);
  else if (format == "json")
    emit_json(outcome, os);
  else
    throw std::invalid_argument("unknown report format: " + format);
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace cpsw
