#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpsw/config.hpp"
#include "cpsw/core.hpp"

namespace cpsw {

// One treatment stage: a tank fed through an inlet valve, drained by a primary
// pump (plus an idle backup), with a level sensor on the tank and a flow
// sensor on the inlet.
struct StageConfig {
  double capacity = 1250.0;
  double level_low = 500.0;    // valve opens at or below this level
  double level_high = 800.0;   // valve closes at or above this level
  double inflow_rate = 4.0;    // units/s through a fully open valve
  double outflow_rate = 2.5;   // units/s per running pump
  double pump_min_level = 400.0;  // pump cuts out below this level
  double safe_min = 340.0;     // operator range for the level sensor
  double safe_max = 950.0;
  double initial_level = 650.0;
  int valve_travel_s = 3;      // seconds spent in the moving (0) state
};

struct PlantConfig {
  StageConfig stage1;
  StageConfig stage2;
  double flow_safe_min = -1.0;  // operator range for flow sensors
  double flow_safe_max = 6.0;
  double noise_frac = 0.001;    // sensor noise sigma as a fraction of range
  unsigned seed = 42;

  static PlantConfig defaults();
  static PlantConfig from_config(const Config& cfg);
  FeatureSchema schema() const;
};

struct AttackAction {
  enum class Kind { SpoofFixed, SpoofRamp, ForceActuator } kind = Kind::SpoofFixed;
  std::string feature;
  Eigen::Index start = 0;  // inclusive timestep
  Eigen::Index end = 0;    // exclusive timestep
  double value = 0.0;      // fixed reading, ramp rate (units/s), or raw code
};

struct AttackScript {
  std::vector<AttackAction> actions;

  static AttackScript from_config(const Config& cfg, const FeatureSchema& schema);
  void validate(const FeatureSchema& schema, Eigen::Index duration) const;
};

// Per-sensor operator ranges; model T flags a timestep when any sensor
// reading falls strictly outside its (safe_min, safe_max).
struct OperatingRanges {
  struct Range {
    double safe_min = 0.0;
    double safe_max = 0.0;
  };
  std::vector<std::optional<Range>> per_feature;  // set for sensors only

  static OperatingRanges from_plant(const PlantConfig& cfg);
  // WADI-style: ranges observed on a normal run widened by tolerance
  // tau = tau_frac * observed span.
  static OperatingRanges fitted(const TimeSeries& normal_raw,
                                const FeatureSchema& schema,
                                double tau_frac = 0.05);
};

struct SimulationResult {
  TimeSeries historian;  // what the PLC saw (noisy, possibly spoofed readings)
  TimeSeries physical;   // noise-free true process values, same shape
};

TimeSeries simulate_normal(const PlantConfig& cfg, Eigen::Index duration);

// Control logic runs on spoofed readings; the process integrates true values.
// Labels on the historian series come from ground_truth over the physical
// trace, so they reflect real process damage rather than the spoofed view.
SimulationResult simulate_with_attacks(const PlantConfig& cfg,
                                       Eigen::Index duration,
                                       const AttackScript& script);

std::vector<Label> ground_truth(const TimeSeries& raw, const OperatingRanges& ranges);

}  // namespace cpsw
