#include "cpsw/attack.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cpsw {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Nearest valid normalized actuator code.
double snap(double value, FeatureKind kind) {
  if (kind == FeatureKind::Pump) return value < 0.5 ? 0.0 : 1.0;
  // valve codes: 0 (moving), 0.5 (closed), 1 (open)
  if (value < 0.25) return 0.0;
  if (value < 0.75) return 0.5;
  return 1.0;
}

}  // namespace

Eigen::VectorXd EpsilonSpec::diagonal(const FeatureSchema& schema) const {
  Eigen::VectorXd eps(schema.size());
  for (int f = 0; f < schema.size(); ++f) {
    switch (schema.at(f).kind) {
      case FeatureKind::Sensor:
        eps(f) = sensor;
        break;
      case FeatureKind::Valve:
        eps(f) = sensors_only ? 0.0 : valve;
        break;
      case FeatureKind::Pump:
        eps(f) = sensors_only ? 0.0 : pump;
        break;
    }
  }
  return eps;
}

Eigen::VectorXd perturb_row(const Eigen::VectorXd& state,
                            const Eigen::VectorXd& gradient_row,
                            const Eigen::VectorXd& eps,
                            const FeatureSchema& schema, bool away) {
  const Eigen::Index F = schema.size();
  if (state.size() != F || gradient_row.size() != F || eps.size() != F)
    throw std::invalid_argument("perturb_row: size mismatch");
  Eigen::VectorXd out = state;
  const double dir = away ? 1.0 : -1.0;
  for (Eigen::Index f = 0; f < F; ++f) {
    const double delta = dir * sgn(gradient_row(f)) * eps(f);
    if (delta == 0.0) continue;
    const FeatureKind kind = schema.at(static_cast<int>(f)).kind;
    double v = state(f) + delta;
    if (kind == FeatureKind::Sensor)
      v = std::clamp(v, 0.0, 1.0);
    else
      v = snap(std::clamp(v, 0.0, 1.0), kind);
    out(f) = v;
  }
  return out;
}

CraftResult craft(const TimeSeries& normalized, const LstmModel& model,
                  const EpsilonSpec& eps_spec, const FeatureSchema& schema) {
  const int w = model.hp().window;
  const Eigen::Index len = normalized.values.rows();
  if (normalized.values.cols() != model.input_dim())
    throw std::invalid_argument("craft: feature count mismatch");
  if (normalized.labels.size() != static_cast<size_t>(len))
    throw std::invalid_argument("craft: series has no labels");
  if (len < w + 2)
    throw std::invalid_argument("craft: series shorter than window + 2");

  const Eigen::VectorXd eps = eps_spec.diagonal(schema);

  CraftResult result;
  result.series = normalized;
  result.modified.assign(static_cast<size_t>(len), false);

  // Timestep t sits at the end of the window [t-w+1, t] and the loss is the
  // prediction error for t+1, so t ranges over [w-1, len-2]. Gradients always
  // come from the original series.
  for (Eigen::Index t = w - 1; t + 1 < len; ++t) {
    const Eigen::MatrixXd win = normalized.values.middleRows(t - w + 1, w);
    const Eigen::VectorXd target = normalized.values.row(t + 1).transpose();
    const Eigen::MatrixXd grad = model.input_gradient(win, target);
    const bool away = normalized.labels[static_cast<size_t>(t)] == Label::Normal;
    const Eigen::VectorXd row = perturb_row(
        normalized.values.row(t).transpose(), grad.row(w - 1).transpose(), eps,
        schema, away);
    if ((row - normalized.values.row(t).transpose()).cwiseAbs().maxCoeff() > 0.0)
      result.modified[static_cast<size_t>(t)] = true;
    result.series.values.row(t) = row.transpose();
  }
  return result;
}

std::vector<ScenarioParams> standard_scenarios() {
  std::vector<ScenarioParams> out;
  auto add = [&](std::string name, double lambda, bool sensors_only, bool ga) {
    ScenarioParams p;
    p.name = std::move(name);
    p.eps.sensor = lambda;
    p.eps.sensors_only = sensors_only;
    p.ga_repair = ga;
    out.push_back(std::move(p));
  };
  add("sensor-1pct", 0.01, true, false);
  add("sensor-10pct", 0.10, true, false);
  add("all-1pct", 0.01, false, false);
  add("all-10pct", 0.10, false, false);
  add("all-10pct-ga", 0.10, false, true);
  return out;
}

}  // namespace cpsw
