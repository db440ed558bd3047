#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace cpsw {

enum class FeatureKind { Sensor, Valve, Pump };

enum class Label { Normal, Attack };

// Raw historian coding: valves report 0 (moving), 1 (closed), 2 (open);
// pumps report 1 (off) or 2 (on). Sensors are continuous in [raw_min, raw_max].
struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::Sensor;
  double raw_min = 0.0;
  double raw_max = 1.0;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<Feature> features);

  int size() const { return static_cast<int>(features_.size()); }
  const Feature& at(int i) const { return features_.at(static_cast<size_t>(i)); }
  const std::vector<Feature>& features() const { return features_; }

  // -1 if absent.
  int index_of(const std::string& name) const;
  bool is_sensor(int i) const { return at(i).kind == FeatureKind::Sensor; }
  bool is_actuator(int i) const { return !is_sensor(i); }

  std::vector<int> sensor_indices() const;
  std::vector<int> actuator_indices() const;

  std::uint64_t hash() const;

 private:
  std::vector<Feature> features_;
};

// Rows are timesteps (one per `period` seconds), columns follow the schema order.
struct TimeSeries {
  std::int64_t start_time = 0;  // seconds since epoch
  double period = 1.0;          // seconds per row
  Eigen::MatrixXd values;       // T x F
  std::vector<Label> labels;    // empty, or size == rows

  Eigen::Index length() const { return values.rows(); }
  bool has_labels() const { return !labels.empty(); }
};

struct NormParams {
  struct SensorRange {
    double min = 0.0;
    double max = 1.0;
    bool constant = false;  // constant sensors map to 0.5 both ways
  };
  // One entry per schema feature; actuator entries are ignored (fixed maps).
  std::vector<SensorRange> sensors;

  double normalize_value(int feature, double raw, const FeatureSchema& schema,
                         Eigen::Index timestep = -1) const;
  double denormalize_value(int feature, double norm, const FeatureSchema& schema,
                           Eigen::Index timestep = -1) const;
};

NormParams fit_normalization(const TimeSeries& raw_normal, const FeatureSchema& schema);

TimeSeries normalize(const TimeSeries& raw, const FeatureSchema& schema,
                     const NormParams& params);
TimeSeries denormalize(const TimeSeries& norm, const FeatureSchema& schema,
                       const NormParams& params);

// Throws if a state violates the [0,1] bound or the discrete actuator codes.
void validate_state(const Eigen::VectorXd& state, const FeatureSchema& schema,
                    const std::string& context = "");

struct Window {
  Eigen::MatrixXd input;   // w x F, rows in time order
  Eigen::VectorXd target;  // state following the window
  Eigen::Index target_index = 0;
};

std::vector<Window> window(const TimeSeries& series, int w, int stride = 1);

}  // namespace cpsw
