#include "cpsw/plantsim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace cpsw {

namespace {

constexpr int kFit1 = 0, kLit1 = 1, kMv1 = 2, kP101 = 3, kP102 = 4;
constexpr int kFit2 = 5, kLit2 = 6, kMv2 = 7, kP201 = 8, kP202 = 9;

constexpr double kValveMoving = 0.0, kValveClosed = 1.0, kValveOpen = 2.0;
constexpr double kPumpOff = 1.0, kPumpOn = 2.0;

struct ValveState {
  bool open = false;      // terminal position currently held or being reached
  int travel_left = 0;    // >0 while moving

  double code() const {
    if (travel_left > 0) return kValveMoving;
    return open ? kValveOpen : kValveClosed;
  }
  bool fully_open() const { return open && travel_left == 0; }

  void command(bool want_open, int travel_s) {
    if (want_open != open) {
      open = want_open;
      travel_left = travel_s;
    }
  }
  void step() {
    if (travel_left > 0) --travel_left;
  }
};

void read_stage(const Config& cfg, const std::string& prefix, StageConfig& s) {
  s.capacity = cfg.get_double(prefix + ".capacity", s.capacity);
  s.level_low = cfg.get_double(prefix + ".level_low", s.level_low);
  s.level_high = cfg.get_double(prefix + ".level_high", s.level_high);
  s.inflow_rate = cfg.get_double(prefix + ".inflow_rate", s.inflow_rate);
  s.outflow_rate = cfg.get_double(prefix + ".outflow_rate", s.outflow_rate);
  s.pump_min_level = cfg.get_double(prefix + ".pump_min_level", s.pump_min_level);
  s.safe_min = cfg.get_double(prefix + ".safe_min", s.safe_min);
  s.safe_max = cfg.get_double(prefix + ".safe_max", s.safe_max);
  s.initial_level = cfg.get_double(prefix + ".initial_level", s.initial_level);
  s.valve_travel_s =
      static_cast<int>(cfg.get_int(prefix + ".valve_travel_s", s.valve_travel_s));
}

void check_stage(const StageConfig& s, const std::string& name) {
  if (!(s.level_low < s.level_high && s.level_high < s.capacity))
    throw std::runtime_error(name + ": need level_low < level_high < capacity");
  if (s.inflow_rate <= 0 || s.outflow_rate <= 0)
    throw std::runtime_error(name + ": rates must be positive");
}

}  // namespace

PlantConfig PlantConfig::defaults() {
  PlantConfig cfg;
  cfg.stage2.outflow_rate = 1.6;  // consumer demand
  cfg.stage2.initial_level = 600.0;
  return cfg;
}

PlantConfig PlantConfig::from_config(const Config& c) {
  PlantConfig cfg = defaults();
  cfg.seed = static_cast<unsigned>(c.get_int("seed", cfg.seed));
  cfg.noise_frac = c.get_double("noise_frac", cfg.noise_frac);
  cfg.flow_safe_min = c.get_double("flow_safe_min", cfg.flow_safe_min);
  cfg.flow_safe_max = c.get_double("flow_safe_max", cfg.flow_safe_max);
  read_stage(c, "stage1", cfg.stage1);
  read_stage(c, "stage2", cfg.stage2);
  check_stage(cfg.stage1, "stage1");
  check_stage(cfg.stage2, "stage2");
  return cfg;
}

FeatureSchema PlantConfig::schema() const {
  double flow_max = std::max(stage1.inflow_rate, stage1.outflow_rate) * 1.25;
  flow_max = std::max(flow_max, std::max(stage2.inflow_rate, stage2.outflow_rate) * 1.25);
  flow_max = std::max(flow_max, 5.0);
  return FeatureSchema({
      {"FIT101", FeatureKind::Sensor, 0.0, flow_max},
      {"LIT101", FeatureKind::Sensor, 0.0, stage1.capacity},
      {"MV101", FeatureKind::Valve, 0.0, 2.0},
      {"P101", FeatureKind::Pump, 1.0, 2.0},
      {"P102", FeatureKind::Pump, 1.0, 2.0},
      {"FIT201", FeatureKind::Sensor, 0.0, flow_max},
      {"LIT201", FeatureKind::Sensor, 0.0, stage2.capacity},
      {"MV201", FeatureKind::Valve, 0.0, 2.0},
      {"P201", FeatureKind::Pump, 1.0, 2.0},
      {"P202", FeatureKind::Pump, 1.0, 2.0},
  });
}

AttackScript AttackScript::from_config(const Config& cfg,
                                       const FeatureSchema& schema) {
  AttackScript script;
  for (int n = 1;; ++n) {
    std::string p = "attack." + std::to_string(n);
    if (!cfg.has(p + ".feature")) break;
    AttackAction a;
    a.feature = cfg.get_string(p + ".feature");
    a.start = cfg.get_int(p + ".start");
    a.end = cfg.get_int(p + ".end");
    a.value = cfg.get_double(p + ".value");
    std::string mode = cfg.get_string(p + ".mode");
    if (mode == "fixed")
      a.kind = AttackAction::Kind::SpoofFixed;
    else if (mode == "ramp")
      a.kind = AttackAction::Kind::SpoofRamp;
    else if (mode == "force")
      a.kind = AttackAction::Kind::ForceActuator;
    else
      throw std::runtime_error(p + ".mode must be fixed, ramp, or force");
    script.actions.push_back(std::move(a));
  }
  (void)schema;
  return script;
}

void AttackScript::validate(const FeatureSchema& schema,
                            Eigen::Index duration) const {
  for (const auto& a : actions) {
    int idx = schema.index_of(a.feature);
    if (idx < 0) throw std::runtime_error("attack on unknown feature " + a.feature);
    if (a.start < 0 || a.end > duration || a.start >= a.end)
      throw std::runtime_error("attack interval out of bounds for " + a.feature);
    bool spoof = a.kind != AttackAction::Kind::ForceActuator;
    if (spoof && !schema.is_sensor(idx))
      throw std::runtime_error("spoof target " + a.feature + " is not a sensor");
    if (!spoof && !schema.is_actuator(idx))
      throw std::runtime_error("force target " + a.feature + " is not an actuator");
  }
  for (size_t i = 0; i < actions.size(); ++i)
    for (size_t j = i + 1; j < actions.size(); ++j) {
      const auto& a = actions[i];
      const auto& b = actions[j];
      if (a.kind == AttackAction::Kind::ForceActuator &&
          b.kind == AttackAction::Kind::ForceActuator &&
          a.feature == b.feature && a.start < b.end && b.start < a.end)
        throw std::runtime_error("overlapping ForceActuator on " + a.feature);
    }
}

OperatingRanges OperatingRanges::from_plant(const PlantConfig& cfg) {
  OperatingRanges r;
  r.per_feature.resize(10);
  r.per_feature[kFit1] = Range{cfg.flow_safe_min, cfg.flow_safe_max};
  r.per_feature[kLit1] = Range{cfg.stage1.safe_min, cfg.stage1.safe_max};
  r.per_feature[kFit2] = Range{cfg.flow_safe_min, cfg.flow_safe_max};
  r.per_feature[kLit2] = Range{cfg.stage2.safe_min, cfg.stage2.safe_max};
  return r;
}

OperatingRanges OperatingRanges::fitted(const TimeSeries& normal_raw,
                                        const FeatureSchema& schema,
                                        double tau_frac) {
  if (normal_raw.length() == 0)
    throw std::runtime_error("fitted ranges: empty series");
  OperatingRanges r;
  r.per_feature.resize(static_cast<size_t>(schema.size()));
  for (int j = 0; j < schema.size(); ++j) {
    if (!schema.is_sensor(j)) continue;
    double lo = normal_raw.values.col(j).minCoeff();
    double hi = normal_raw.values.col(j).maxCoeff();
    double tau = tau_frac * (hi - lo);
    r.per_feature[static_cast<size_t>(j)] = Range{lo - tau, hi + tau};
  }
  return r;
}

std::vector<Label> ground_truth(const TimeSeries& raw,
                                const OperatingRanges& ranges) {
  if (static_cast<size_t>(raw.values.cols()) != ranges.per_feature.size())
    throw std::runtime_error("ground_truth: schema mismatch");
  std::vector<Label> labels(static_cast<size_t>(raw.length()), Label::Normal);
  for (Eigen::Index t = 0; t < raw.length(); ++t)
    for (size_t j = 0; j < ranges.per_feature.size(); ++j) {
      const auto& range = ranges.per_feature[j];
      if (!range) continue;
      double v = raw.values(t, static_cast<Eigen::Index>(j));
      if (v < range->safe_min || v > range->safe_max) {
        labels[static_cast<size_t>(t)] = Label::Attack;
        break;
      }
    }
  return labels;
}

SimulationResult simulate_with_attacks(const PlantConfig& cfg,
                                       Eigen::Index duration,
                                       const AttackScript& script) {
  if (duration < 1) throw std::runtime_error("simulate: duration must be >= 1");
  const FeatureSchema schema = cfg.schema();
  script.validate(schema, duration);
  check_stage(cfg.stage1, "stage1");
  check_stage(cfg.stage2, "stage2");

  std::mt19937 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noise_for = [&](int feature) {
    const Feature& f = schema.at(feature);
    return gauss(rng) * cfg.noise_frac * (f.raw_max - f.raw_min);
  };

  SimulationResult result;
  result.historian.values.resize(duration, schema.size());
  result.physical.values.resize(duration, schema.size());
  result.historian.period = result.physical.period = 1.0;
  result.historian.start_time = result.physical.start_time = 1577836800;  // 2020-01-01

  double level1 = cfg.stage1.initial_level;
  double level2 = cfg.stage2.initial_level;
  ValveState valve1, valve2;
  bool p101 = false, p102 = false, p201 = false, p202 = false;

  // PLC view of the level sensors, updated from the (possibly spoofed)
  // readings of the previous scan.
  double view_lit1 = level1;
  double view_lit2 = level2;
  std::vector<double> ramp_base(static_cast<size_t>(schema.size()), 0.0);
  std::vector<bool> ramp_started(static_cast<size_t>(schema.size()), false);

  for (Eigen::Index t = 0; t < duration; ++t) {
    // control scan
    if (view_lit1 <= cfg.stage1.level_low)
      valve1.command(true, cfg.stage1.valve_travel_s);
    else if (view_lit1 >= cfg.stage1.level_high)
      valve1.command(false, cfg.stage1.valve_travel_s);
    if (view_lit2 <= cfg.stage2.level_low)
      valve2.command(true, cfg.stage2.valve_travel_s);
    else if (view_lit2 >= cfg.stage2.level_high)
      valve2.command(false, cfg.stage2.valve_travel_s);
    valve1.step();
    valve2.step();

    p101 = valve2.fully_open() && view_lit1 >= cfg.stage1.pump_min_level;
    p102 = false;
    p201 = view_lit2 >= cfg.stage2.pump_min_level;
    p202 = false;

    for (const auto& a : script.actions) {
      if (a.kind != AttackAction::Kind::ForceActuator) continue;
      if (t < a.start || t >= a.end) continue;
      bool on = std::abs(a.value - 2.0) < 1e-9;
      int idx = schema.index_of(a.feature);
      if (idx == kMv1) {
        valve1.open = on;
        valve1.travel_left = 0;
      } else if (idx == kMv2) {
        valve2.open = on;
        valve2.travel_left = 0;
      } else if (idx == kP101) {
        p101 = on;
      } else if (idx == kP102) {
        p102 = on;
      } else if (idx == kP201) {
        p201 = on;
      } else if (idx == kP202) {
        p202 = on;
      }
    }

    // process integration (1 s step)
    double flow1 = valve1.fully_open() ? cfg.stage1.inflow_rate : 0.0;
    double out1 = cfg.stage1.outflow_rate * ((p101 ? 1 : 0) + (p102 ? 1 : 0));
    if (level1 + flow1 - out1 < 0.0) out1 = level1 + flow1;  // tank ran dry
    level1 = std::min(level1 + flow1 - out1, cfg.stage1.capacity);

    double flow2 = valve2.fully_open() ? out1 : 0.0;
    double out2 = cfg.stage2.outflow_rate * ((p201 ? 1 : 0) + (p202 ? 1 : 0));
    if (level2 + flow2 - out2 < 0.0) out2 = level2 + flow2;
    level2 = std::min(level2 + flow2 - out2, cfg.stage2.capacity);

    // true process values
    Eigen::VectorXd truth(schema.size());
    truth(kFit1) = flow1;
    truth(kLit1) = level1;
    truth(kMv1) = valve1.code();
    truth(kP101) = p101 ? kPumpOn : kPumpOff;
    truth(kP102) = p102 ? kPumpOn : kPumpOff;
    truth(kFit2) = flow2;
    truth(kLit2) = level2;
    truth(kMv2) = valve2.code();
    truth(kP201) = p201 ? kPumpOn : kPumpOff;
    truth(kP202) = p202 ? kPumpOn : kPumpOff;
    result.physical.values.row(t) = truth;

    // sensor readings: noise, then spoofing
    Eigen::VectorXd reading = truth;
    for (int j : schema.sensor_indices()) reading(j) += noise_for(j);
    for (const auto& a : script.actions) {
      if (a.kind == AttackAction::Kind::ForceActuator) continue;
      if (t < a.start || t >= a.end) continue;
      int idx = schema.index_of(a.feature);
      size_t uidx = static_cast<size_t>(idx);
      if (a.kind == AttackAction::Kind::SpoofFixed) {
        reading(idx) = a.value;
      } else {
        if (!ramp_started[uidx]) {
          ramp_base[uidx] = truth(idx);
          ramp_started[uidx] = true;
        }
        reading(idx) = ramp_base[uidx] +
                       a.value * static_cast<double>(t - a.start);
      }
    }
    result.historian.values.row(t) = reading;

    view_lit1 = reading(kLit1);
    view_lit2 = reading(kLit2);
  }

  // Ground truth labels come from the physical trace: damage is judged on
  // what the process actually did, not on the spoofed view.
  auto labels = ground_truth(result.physical, OperatingRanges::from_plant(cfg));
  result.physical.labels = labels;
  result.historian.labels = std::move(labels);
  return result;
}

TimeSeries simulate_normal(const PlantConfig& cfg, Eigen::Index duration) {
  return simulate_with_attacks(cfg, duration, AttackScript{}).historian;
}

}  // namespace cpsw
