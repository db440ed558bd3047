#pragma once

#include <string>
#include <vector>

#include "cpsw/core.hpp"

namespace cpsw {

class LstmModel;

// Two-sided CUSUM over prediction residuals d[t] = predicted[t] - actual[t],
// one statistic pair per sensor:
//   SH[t] = max(0, SH[t-1] + d[t] - c)
//   SL[t] = min(0, SL[t-1] + d[t] + c)
// with slack c derived from the residual spread on normal traffic.
struct CusumTrace {
  std::vector<double> sh, sl;  // same length as the residual stream
};

CusumTrace cusum_stream(const std::vector<double>& residuals, double slack);

// Slack per sensor: fraction of the residual standard deviation on normal data.
std::vector<double> slack_from_residuals(const Eigen::MatrixXd& residuals,
                                         double std_fraction);

struct SensorThresholds {
  double ucl = 0.0;       // upper control limit for SH (alarm when SH > ucl)
  double lcl = 0.0;       // lower control limit for SL (alarm when SL < lcl)
  double slack = 0.0;
  double bias = 0.0;      // in-control residual mean, subtracted before CUSUM
  bool active = true;     // constant sensors are excluded from detection
};

struct DetectorConfig {
  std::vector<SensorThresholds> per_sensor;  // indexed like schema.sensor_indices()
  double std_fraction = 0.05;
};

// Residuals for every predictable timestep of a normalized series: row t - w
// holds predicted(t) - actual(t) for t in [w, len). One column per sensor.
Eigen::MatrixXd prediction_residuals(const LstmModel& model,
                                     const Eigen::MatrixXd& normalized,
                                     const std::vector<int>& sensor_columns);

// Calibrates control limits so that every labelled attack interval in the
// calibration trace raises at least one alarm: per sensor, the limit is the
// smallest per-interval peak of the statistic, taken over intervals where that
// sensor reacts at all. Sensors with no reaction fall back to a multiple of
// the largest normal-traffic excursion.
struct CalibrationInput {
  Eigen::MatrixXd residuals;          // rows: timesteps w..len-1
  std::vector<Label> labels;          // aligned with residual rows
};

DetectorConfig calibrate_thresholds(const CalibrationInput& attack_trace,
                                    const Eigen::MatrixXd& normal_residuals,
                                    const std::vector<double>& slack,
                                    const std::vector<bool>& constant_sensor,
                                    double fallback_factor = 3.0,
                                    double ceiling_margin = 2.0);

// Per-timestep verdict: attack when any active sensor statistic is strictly
// outside its control limits.
std::vector<Label> classify(const Eigen::MatrixXd& residuals,
                            const DetectorConfig& cfg);

// Plain-text persistence: one line per sensor "name ucl lcl slack active".
void save_detector(const DetectorConfig& cfg, const FeatureSchema& schema,
                   const std::string& path);
DetectorConfig load_detector(const FeatureSchema& schema, const std::string& path);

}  // namespace cpsw
