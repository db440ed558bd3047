#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cpsw/attack.hpp"
#include "cpsw/config.hpp"
#include "cpsw/core.hpp"
#include "cpsw/cusum.hpp"
#include "cpsw/defence.hpp"
#include "cpsw/eval.hpp"
#include "cpsw/ga.hpp"
#include "cpsw/ingest.hpp"
#include "cpsw/lstm.hpp"
#include "cpsw/plantsim.hpp"
#include "cpsw/rules.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const std::string& what) {
  if (!std::filesystem::exists(path))
    throw UsageError(what + " not found: " + path);
}

cpsw::PlantConfig load_plant(const std::string& config_path, unsigned seed) {
  cpsw::PlantConfig plant;
  if (config_path.empty()) {
    plant = cpsw::PlantConfig::defaults();
    plant.seed = seed;
  } else {
    require_file(config_path, "plant config");
    cpsw::Config cfg = cpsw::Config::from_file(config_path);
    plant = cpsw::PlantConfig::from_config(cfg);
    if (!cfg.has("seed")) plant.seed = seed;
  }
  return plant;
}

cpsw::ScenarioParams scenario_by_name(const std::string& name) {
  for (const auto& s : cpsw::standard_scenarios()) {
    std::string alias = s.name;  // sensor-1pct -> sensor1
    alias.erase(std::remove(alias.begin(), alias.end(), '-'), alias.end());
    const auto pct = alias.find("pct");
    if (pct != std::string::npos) alias.erase(pct, 3);
    if (name == s.name || name == alias) return s;
  }
  throw UsageError("unknown scenario: " + name +
                   " (expected sensor1, sensor10, all1 or all10)");
}

int cmd_simulate(const std::string& config, long duration,
                 const std::string& attacks, const std::string& out,
                 unsigned seed) {
  if (duration < 1) throw UsageError("--duration must be positive");
  cpsw::PlantConfig plant = load_plant(config, seed);
  const cpsw::FeatureSchema schema = plant.schema();
  cpsw::AttackScript script;
  if (!attacks.empty()) {
    require_file(attacks, "attack script");
    script = cpsw::AttackScript::from_config(cpsw::Config::from_file(attacks),
                                             schema);
    script.validate(schema, duration);
  }
  const cpsw::SimulationResult r =
      cpsw::simulate_with_attacks(plant, duration, script);
  cpsw::write_historian_csv(r.historian, schema, out);
  std::cout << "wrote " << r.historian.length() << " rows to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config, const std::string& data,
              const std::string& out, cpsw::Hyperparams hp) {
  require_file(data, "training data");
  const cpsw::PlantConfig plant = load_plant(config, hp.seed);
  const cpsw::FeatureSchema schema = plant.schema();
  const cpsw::TimeSeries raw = cpsw::read_historian_csv(data, schema);
  const cpsw::NormParams norm = cpsw::fit_normalization(raw, schema);
  cpsw::TrainResult tr =
      cpsw::train(cpsw::window(cpsw::normalize(raw, schema, norm), hp.window), hp);
  tr.model.schema_hash = schema.hash();
  tr.model.norm = norm;
  cpsw::save_model(tr.model, out);
  std::cout << "trained on " << raw.length() << " rows, final loss "
            << tr.final_loss << ", model written to " << out << "\n";
  return 0;
}

int cmd_calibrate(const std::string& config, const std::string& model_path,
                  const std::string& attack_data, const std::string& normal_data,
                  const std::string& out, double slack_frac,
                  double fallback_factor, unsigned seed) {
  require_file(model_path, "model");
  require_file(attack_data, "calibration data");
  require_file(normal_data, "normal data");
  const cpsw::PlantConfig plant = load_plant(config, seed);
  const cpsw::FeatureSchema schema = plant.schema();
  const cpsw::LstmModel model = cpsw::load_model(model_path, schema.hash());
  const cpsw::OperatingRanges ranges = cpsw::OperatingRanges::from_plant(plant);

  const cpsw::TimeSeries attack_raw = cpsw::read_historian_csv(attack_data, schema);
  const cpsw::TimeSeries normal_raw = cpsw::read_historian_csv(normal_data, schema);
  const auto sensors = schema.sensor_indices();
  const Eigen::MatrixXd normal_res = cpsw::prediction_residuals(
      model, cpsw::normalize(normal_raw, schema, model.norm).values, sensors);
  const Eigen::MatrixXd attack_res = cpsw::prediction_residuals(
      model, cpsw::normalize(attack_raw, schema, model.norm).values, sensors);

  const std::vector<double> slack =
      cpsw::slack_from_residuals(normal_res, slack_frac);
  std::vector<bool> constant;
  for (int s : sensors)
    constant.push_back(model.norm.sensors[static_cast<size_t>(s)].constant);
  const std::vector<cpsw::Label> truth = cpsw::ground_truth(attack_raw, ranges);
  cpsw::CalibrationInput ci;
  ci.residuals = attack_res;
  ci.labels.assign(truth.begin() + model.hp().window, truth.end());
  const cpsw::DetectorConfig det = cpsw::calibrate_thresholds(
      ci, normal_res, slack, constant, fallback_factor);
  cpsw::save_detector(det, schema, out);
  std::cout << "thresholds written to " << out << "\n";
  return 0;
}

int cmd_detect(const std::string& config, const std::string& model_path,
               const std::string& thresholds, const std::string& data,
               const std::string& out, unsigned seed) {
  require_file(model_path, "model");
  require_file(thresholds, "thresholds");
  require_file(data, "data");
  const cpsw::PlantConfig plant = load_plant(config, seed);
  const cpsw::FeatureSchema schema = plant.schema();
  const cpsw::LstmModel model = cpsw::load_model(model_path, schema.hash());
  const cpsw::DetectorConfig det = cpsw::load_detector(schema, thresholds);
  const cpsw::OperatingRanges ranges = cpsw::OperatingRanges::from_plant(plant);

  cpsw::TimeSeries raw = cpsw::read_historian_csv(data, schema);
  const Eigen::MatrixXd res = cpsw::prediction_residuals(
      model, cpsw::normalize(raw, schema, model.norm).values,
      schema.sensor_indices());
  const std::vector<cpsw::Label> y_c = cpsw::classify(res, det);
  const int w = model.hp().window;

  cpsw::TimeSeries flagged = raw;
  flagged.labels.assign(static_cast<size_t>(raw.length()), cpsw::Label::Normal);
  for (size_t i = 0; i < y_c.size(); ++i)
    flagged.labels[i + static_cast<size_t>(w)] = y_c[i];
  if (!out.empty()) cpsw::write_historian_csv(flagged, schema, out);

  const std::vector<cpsw::Label> truth = cpsw::ground_truth(raw, ranges);
  const std::vector<cpsw::Label> y_t(truth.begin() + w, truth.end());
  const cpsw::MetricsReport m = cpsw::confusion_metrics(y_t, y_c);
  std::cout << "precision " << m.precision << " recall " << m.recall << " f1 "
            << m.f1 << " accuracy " << m.accuracy << "\n";
  return 0;
}

int cmd_attack(const std::string& config, const std::string& model_path,
               const std::string& data, const std::string& scenario,
               const std::string& rules_path, bool ga, const std::string& out,
               unsigned seed) {
  require_file(model_path, "model");
  require_file(data, "data");
  cpsw::ScenarioParams params = scenario_by_name(scenario);
  params.ga_repair = ga;
  if (ga) params.name += "-ga";

  const cpsw::PlantConfig plant = load_plant(config, seed);
  cpsw::ExperimentContext ctx;
  ctx.schema = plant.schema();
  ctx.ranges = cpsw::OperatingRanges::from_plant(plant);
  ctx.model = cpsw::load_model(model_path, ctx.schema.hash());
  ctx.detector.per_sensor.resize(ctx.schema.sensor_indices().size());
  if (rules_path.empty()) {
    ctx.rules = cpsw::parse_rules(cpsw::default_rules_text(), ctx.schema);
  } else {
    require_file(rules_path, "rule file");
    ctx.rules = cpsw::load_rules(rules_path, ctx.schema);
  }
  ctx.ga.seed = seed;

  const cpsw::TimeSeries raw = cpsw::read_historian_csv(data, ctx.schema);
  cpsw::TimeSeries emitted;
  const cpsw::ScenarioReport rep = cpsw::run_scenario(ctx, raw, params, &emitted);
  cpsw::write_historian_csv(emitted, ctx.schema, out);

  const Eigen::VectorXd eps = params.eps.diagonal(ctx.schema);
  std::cout << "scenario " << rep.scenario << ": perturbed "
            << rep.perturbed_steps << " of " << raw.length()
            << " timesteps, max per-feature step " << eps.maxCoeff()
            << " (normalized), rule pass rate " << rep.rule_pass_rate;
  if (ga)
    std::cout << ", GA repaired " << rep.ga_succeeded << "/" << rep.ga_attempted;
  std::cout << "\nwrote " << out << "\n";
  return 0;
}

int cmd_defend(const std::string& genuine, const std::string& adversarial,
               const std::string& config, double train_frac, unsigned seed) {
  require_file(genuine, "genuine data");
  require_file(adversarial, "adversarial data");
  const cpsw::PlantConfig plant = load_plant(config, seed);
  const cpsw::FeatureSchema schema = plant.schema();
  const cpsw::TimeSeries g = cpsw::read_historian_csv(genuine, schema);
  const cpsw::TimeSeries a = cpsw::read_historian_csv(adversarial, schema);
  const cpsw::NormParams norm = cpsw::fit_normalization(g, schema);
  const cpsw::DefenceDataset ds = cpsw::build_defence_dataset(
      cpsw::normalize(g, schema, norm).values,
      cpsw::normalize(a, schema, norm).values, train_frac, seed);

  cpsw::DefNnParams np;
  np.seed = seed;
  cpsw::DefNn nn;
  nn.train(ds.train_x, ds.train_y, np);
  cpsw::RandomForestParams fp;
  fp.seed = seed;
  cpsw::RandomForest rf;
  rf.train(ds.train_x, ds.train_y, fp);

  auto accuracy = [&](const std::vector<int>& pred) {
    long hits = 0;
    for (size_t i = 0; i < pred.size(); ++i)
      if (pred[i] == ds.test_y[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
  };
  std::cout << "def-nn accuracy " << accuracy(nn.classify_rows(ds.test_x))
            << ", random-forest accuracy "
            << accuracy(rf.classify_rows(ds.test_x)) << " on "
            << ds.test_y.size() << " held-out records\n";
  return 0;
}

int cmd_evaluate(const std::string& spec_path, const std::string& out,
                 const std::string& format, const std::string& artifacts) {
  require_file(spec_path, "experiment spec");
  if (format != "csv" && format != "json" && format != "md")
    throw UsageError("--format must be csv, json or md");
  const cpsw::Config spec = cpsw::Config::from_file(spec_path);
  if (spec.has("rules.path")) require_file(spec.get_string("rules.path"), "rule file");
  const cpsw::ExperimentOutcome outcome = cpsw::run_experiment(spec, artifacts);
  cpsw::emit_report(outcome, out, format);
  std::cout << "report written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial evaluation workbench for a two-stage water plant"};
  app.require_subcommand(1);
  unsigned seed = 42;
  app.add_option("--seed", seed, "global random seed")->capture_default_str();

  std::string config, data, model_path, thresholds, attacks, rules_path;
  std::string normal_data, genuine, adversarial, spec_path, artifacts;
  std::string out = "out.csv", format = "csv", scenario;
  long duration = 3600;
  bool ga = false;
  double slack_frac = 0.05, fallback_factor = 3.0, train_frac = 0.7;
  cpsw::Hyperparams hp;

  auto* sim = app.add_subcommand("simulate", "run the plant and write a historian CSV");
  sim->add_option("--config", config, "plant configuration file");
  sim->add_option("--duration", duration, "seconds to simulate")->capture_default_str();
  sim->add_option("--attacks", attacks, "attack script (key-value file)");
  sim->add_option("--out", out, "output CSV")->required();

  auto* trn = app.add_subcommand("train", "fit the predictor on normal traffic");
  trn->add_option("--config", config, "plant configuration file");
  trn->add_option("--data", data, "normal historian CSV")->required();
  trn->add_option("--out", out, "model output path")->required();
  trn->add_option("--window", hp.window)->capture_default_str();
  trn->add_option("--hidden", hp.hidden)->capture_default_str();
  trn->add_option("--epochs", hp.epochs)->capture_default_str();
  trn->add_option("--batch", hp.batch)->capture_default_str();
  trn->add_option("--learning-rate", hp.learning_rate)->capture_default_str();

  auto* cal = app.add_subcommand("calibrate", "derive CUSUM control limits");
  cal->add_option("--config", config, "plant configuration file");
  cal->add_option("--model", model_path)->required();
  cal->add_option("--data", data, "labelled attack trace CSV")->required();
  cal->add_option("--normal", normal_data, "held-out normal CSV")->required();
  cal->add_option("--out", out, "thresholds output path")->required();
  cal->add_option("--slack-frac", slack_frac)->capture_default_str();
  cal->add_option("--fallback-factor", fallback_factor)->capture_default_str();

  auto* det = app.add_subcommand("detect", "score a trace with the detector");
  det->add_option("--config", config, "plant configuration file");
  det->add_option("--model", model_path)->required();
  det->add_option("--thresholds", thresholds)->required();
  det->add_option("--data", data)->required();
  det->add_option("--out", out, "CSV with predicted Status (optional)");

  auto* atk = app.add_subcommand("attack", "craft adversarial historian data");
  atk->add_option("--config", config, "plant configuration file");
  atk->add_option("--model", model_path)->required();
  atk->add_option("--data", data)->required();
  atk->add_option("--scenario", scenario, "sensor1, sensor10, all1 or all10")->required();
  atk->add_option("--rules", rules_path, "rule file (default: built-in set)");
  atk->add_flag("--ga", ga, "repair actuators until the rule oracle passes");
  atk->add_option("--out", out)->required();

  auto* dfd = app.add_subcommand("defend", "train record classifiers on two traces");
  dfd->add_option("--config", config, "plant configuration file");
  dfd->add_option("--genuine", genuine)->required();
  dfd->add_option("--adversarial", adversarial)->required();
  dfd->add_option("--train-frac", train_frac)->capture_default_str();

  auto* evl = app.add_subcommand("evaluate", "full pipeline from an experiment spec");
  evl->add_option("--spec", spec_path)->required();
  evl->add_option("--out", out)->required();
  evl->add_option("--format", format, "csv, json or md")->capture_default_str();
  evl->add_option("--artifacts", artifacts, "directory for intermediate series");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    hp.seed = seed;
    if (sim->parsed()) return cmd_simulate(config, duration, attacks, out, seed);
    if (trn->parsed()) return cmd_train(config, data, out, hp);
    if (cal->parsed())
      return cmd_calibrate(config, model_path, data, normal_data, out,
                           slack_frac, fallback_factor, seed);
    if (det->parsed())
      return cmd_detect(config, model_path, thresholds,
                        data, det->count("--out") ? out : "", seed);
    if (atk->parsed())
      return cmd_attack(config, model_path, data, scenario, rules_path, ga,
                        out, seed);
    if (dfd->parsed()) return cmd_defend(genuine, adversarial, config, train_frac, seed);
    if (evl->parsed()) return cmd_evaluate(spec_path, out, format, artifacts);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
