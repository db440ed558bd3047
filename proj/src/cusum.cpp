#include "cpsw/cusum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cpsw/lstm.hpp"

namespace cpsw {

CusumTrace cusum_stream(const std::vector<double>& residuals, double slack) {
  if (slack < 0.0) throw std::invalid_argument("cusum_stream: negative slack");
  CusumTrace t;
  t.sh.resize(residuals.size());
  t.sl.resize(residuals.size());
  double sh = 0.0, sl = 0.0;
  for (size_t i = 0; i < residuals.size(); ++i) {
    sh = std::max(0.0, sh + residuals[i] - slack);
    sl = std::min(0.0, sl + residuals[i] + slack);
    t.sh[i] = sh;
    t.sl[i] = sl;
  }
  return t;
}

std::vector<double> slack_from_residuals(const Eigen::MatrixXd& residuals,
                                         double std_fraction) {
  if (residuals.rows() < 2)
    throw std::invalid_argument("slack_from_residuals: need at least 2 rows");
  std::vector<double> out(static_cast<size_t>(residuals.cols()));
  for (Eigen::Index c = 0; c < residuals.cols(); ++c) {
    const auto col = residuals.col(c);
    const double mean = col.mean();
    const double var =
        (col.array() - mean).square().sum() / static_cast<double>(col.size() - 1);
    out[static_cast<size_t>(c)] = std_fraction * std::sqrt(var);
  }
  return out;
}

Eigen::MatrixXd prediction_residuals(const LstmModel& model,
                                     const Eigen::MatrixXd& normalized,
                                     const std::vector<int>& sensor_columns) {
  const int w = model.hp().window;
  if (normalized.rows() <= w)
    throw std::invalid_argument("prediction_residuals: series shorter than window");
  if (normalized.cols() != model.input_dim())
    throw std::invalid_argument("prediction_residuals: feature count mismatch");
  const Eigen::Index n = normalized.rows() - w;
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(sensor_columns.size()));
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::VectorXd pred = model.predict(normalized.middleRows(t, w));
    for (size_t s = 0; s < sensor_columns.size(); ++s)
      out(t, static_cast<Eigen::Index>(s)) =
          pred(sensor_columns[s]) - normalized(t + w, sensor_columns[s]);
  }
  return out;
}

namespace {

// Contiguous attack runs in a label stream.
std::vector<std::pair<size_t, size_t>> attack_intervals(
    const std::vector<Label>& labels) {
  std::vector<std::pair<size_t, size_t>> out;
  size_t i = 0;
  while (i < labels.size()) {
    if (labels[i] == Label::Attack) {
      size_t j = i;
      while (j + 1 < labels.size() && labels[j + 1] == Label::Attack) ++j;
      out.emplace_back(i, j + 1);  // [i, j+1)
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace

DetectorConfig calibrate_thresholds(const CalibrationInput& attack_trace,
                                    const Eigen::MatrixXd& normal_residuals,
                                    const std::vector<double>& slack,
                                    const std::vector<bool>& constant_sensor,
                                    double fallback_factor,
                                    double ceiling_margin) {
  const size_t S = slack.size();
  if (static_cast<size_t>(attack_trace.residuals.cols()) != S ||
      static_cast<size_t>(normal_residuals.cols()) != S ||
      constant_sensor.size() != S)
    throw std::invalid_argument("calibrate_thresholds: sensor count mismatch");
  if (attack_trace.labels.size() !=
      static_cast<size_t>(attack_trace.residuals.rows()))
    throw std::invalid_argument("calibrate_thresholds: label/residual length mismatch");

  const auto intervals = attack_intervals(attack_trace.labels);
  if (intervals.empty())
    throw std::invalid_argument("calibrate_thresholds: calibration trace has no attacks");

  DetectorConfig cfg;
  cfg.per_sensor.resize(S);
  for (size_t s = 0; s < S; ++s) {
    SensorThresholds& th = cfg.per_sensor[s];
    th.slack = slack[s];
    if (constant_sensor[s]) {
      th.active = false;
      continue;
    }
    th.bias = normal_residuals.col(static_cast<Eigen::Index>(s)).mean();

    std::vector<double> col(static_cast<size_t>(attack_trace.residuals.rows()));
    for (size_t t = 0; t < col.size(); ++t)
      col[t] = attack_trace.residuals(static_cast<Eigen::Index>(t),
                                      static_cast<Eigen::Index>(s)) -
               th.bias;
    CusumTrace trace = cusum_stream(col, slack[s]);

    std::vector<double> ncol(static_cast<size_t>(normal_residuals.rows()));
    for (size_t t = 0; t < ncol.size(); ++t)
      ncol[t] = normal_residuals(static_cast<Eigen::Index>(t),
                                 static_cast<Eigen::Index>(s)) -
                th.bias;
    CusumTrace ntrace = cusum_stream(ncol, slack[s]);
    const double normal_sh =
        *std::max_element(ntrace.sh.begin(), ntrace.sh.end());
    const double normal_sl =
        *std::min_element(ntrace.sl.begin(), ntrace.sl.end());

    // Lowest per-interval peak over intervals where the statistic clears a
    // margin above the normal-traffic ceiling; otherwise fall back to a
    // multiple of that ceiling so quiet sensors never alarm spuriously. The
    // margin keeps slow statistic drift on long traces below the limit.
    const double floor_h = ceiling_margin * normal_sh;
    const double floor_l = ceiling_margin * normal_sl;
    double ucl = std::numeric_limits<double>::infinity();
    double lcl = -std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : intervals) {
      double peak_h = 0.0, peak_l = 0.0;
      for (size_t t = a; t < b; ++t) {
        peak_h = std::max(peak_h, trace.sh[t]);
        peak_l = std::min(peak_l, trace.sl[t]);
      }
      if (peak_h > floor_h) ucl = std::min(ucl, peak_h);
      if (peak_l < floor_l) lcl = std::max(lcl, peak_l);
    }
    const double eps = 1e-12;
    if (!std::isfinite(ucl))
      ucl = std::max(fallback_factor * normal_sh, eps);
    else
      ucl = std::max(ucl * (1.0 - 1e-9), floor_h);  // alarm at the peak itself
    if (!std::isfinite(lcl))
      lcl = std::min(fallback_factor * normal_sl, -eps);
    else
      lcl = std::min(lcl * (1.0 - 1e-9), floor_l);
    th.ucl = ucl;
    th.lcl = lcl;
  }
  return cfg;
}

std::vector<Label> classify(const Eigen::MatrixXd& residuals,
                            const DetectorConfig& cfg) {
  if (static_cast<size_t>(residuals.cols()) != cfg.per_sensor.size())
    throw std::invalid_argument("classify: sensor count mismatch");
  const size_t S = cfg.per_sensor.size();
  std::vector<Label> out(static_cast<size_t>(residuals.rows()), Label::Normal);
  std::vector<double> sh(S, 0.0), sl(S, 0.0);
  for (Eigen::Index t = 0; t < residuals.rows(); ++t) {
    bool alarm = false;
    for (size_t s = 0; s < S; ++s) {
      const SensorThresholds& th = cfg.per_sensor[s];
      if (!th.active) continue;
      const double d = residuals(t, static_cast<Eigen::Index>(s)) - th.bias;
      sh[s] = std::max(0.0, sh[s] + d - th.slack);
      sl[s] = std::min(0.0, sl[s] + d + th.slack);
      if (sh[s] > th.ucl || sl[s] < th.lcl) alarm = true;
    }
    if (alarm) out[static_cast<size_t>(t)] = Label::Attack;
  }
  return out;
}

void save_detector(const DetectorConfig& cfg, const FeatureSchema& schema,
                   const std::string& path) {
  const auto sensors = schema.sensor_indices();
  if (sensors.size() != cfg.per_sensor.size())
    throw std::invalid_argument("save_detector: sensor count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write detector file: " + path);
  out << "# sensor ucl lcl slack bias active\n";
  out.precision(17);
  for (size_t s = 0; s < sensors.size(); ++s) {
    const SensorThresholds& th = cfg.per_sensor[s];
    out << schema.at(sensors[s]).name << ' '
        << th.ucl << ' ' << th.lcl << ' ' << th.slack << ' ' << th.bias << ' '
        << (th.active ? 1 : 0) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

DetectorConfig load_detector(const FeatureSchema& schema,
                             const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open detector file: " + path);
  const auto sensors = schema.sensor_indices();
  DetectorConfig cfg;
  cfg.per_sensor.resize(sensors.size());
  std::vector<bool> seen(sensors.size(), false);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string name;
    SensorThresholds th;
    int active = 1;
    if (!(ss >> name >> th.ucl >> th.lcl >> th.slack >> th.bias >> active))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": malformed detector line");
    th.active = active != 0;
    bool matched = false;
    for (size_t s = 0; s < sensors.size(); ++s) {
      if (schema.at(sensors[s]).name == name) {
        cfg.per_sensor[s] = th;
        seen[s] = true;
        matched = true;
        break;
      }
    }
    if (!matched)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": unknown sensor '" + name + "'");
  }
  for (size_t s = 0; s < sensors.size(); ++s)
    if (!seen[s])
      throw std::runtime_error(
          path + ": missing thresholds for sensor '" +
          schema.at(sensors[s]).name + "'");
  return cfg;
}

}  // namespace cpsw
