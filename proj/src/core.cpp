#include "cpsw/core.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cpsw {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string at_timestep(Eigen::Index t) {
  return t >= 0 ? " at timestep " + std::to_string(t) : "";
}

bool near(double a, double b) { return std::abs(a - b) < 1e-6; }

}  // namespace

FeatureSchema::FeatureSchema(std::vector<Feature> features)
    : features_(std::move(features)) {
  std::set<std::string> seen;
  for (const auto& f : features_) {
    if (!seen.insert(f.name).second) fail("duplicate feature name: " + f.name);
    switch (f.kind) {
      case FeatureKind::Sensor:
        if (!(f.raw_min < f.raw_max))
          fail("sensor " + f.name + " needs raw_min < raw_max");
        break;
      case FeatureKind::Valve:
        if (!near(f.raw_min, 0.0) || !near(f.raw_max, 2.0))
          fail("valve " + f.name + " must use raw domain {0,1,2}");
        break;
      case FeatureKind::Pump:
        if (!near(f.raw_min, 1.0) || !near(f.raw_max, 2.0))
          fail("pump " + f.name + " must use raw domain {1,2}");
        break;
    }
  }
}

int FeatureSchema::index_of(const std::string& name) const {
  for (size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<int> FeatureSchema::sensor_indices() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (is_sensor(i)) out.push_back(i);
  return out;
}

std::vector<int> FeatureSchema::actuator_indices() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (is_actuator(i)) out.push_back(i);
  return out;
}

std::uint64_t FeatureSchema::hash() const {
  // FNV-1a over the schema description.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& f : features_) {
    mix(f.name);
    mix(std::to_string(static_cast<int>(f.kind)));
    mix(std::to_string(f.raw_min));
    mix(std::to_string(f.raw_max));
  }
  return h;
}

double NormParams::normalize_value(int feature, double raw,
                                   const FeatureSchema& schema,
                                   Eigen::Index t) const {
  const Feature& f = schema.at(feature);
  switch (f.kind) {
    case FeatureKind::Sensor: {
      const SensorRange& r = sensors.at(static_cast<size_t>(feature));
      if (r.constant) return 0.5;
      double v = (raw - r.min) / (r.max - r.min);
      return std::clamp(v, 0.0, 1.0);
    }
    case FeatureKind::Valve:
      if (near(raw, 0.0)) return 0.0;
      if (near(raw, 1.0)) return 0.5;
      if (near(raw, 2.0)) return 1.0;
      fail("unknown valve code " + std::to_string(raw) + " for " + f.name +
           at_timestep(t));
    case FeatureKind::Pump:
      if (near(raw, 1.0)) return 0.0;
      if (near(raw, 2.0)) return 1.0;
      fail("unknown pump code " + std::to_string(raw) + " for " + f.name +
           at_timestep(t));
  }
  fail("unreachable");
}

double NormParams::denormalize_value(int feature, double norm,
                                     const FeatureSchema& schema,
                                     Eigen::Index t) const {
  const Feature& f = schema.at(feature);
  switch (f.kind) {
    case FeatureKind::Sensor: {
      const SensorRange& r = sensors.at(static_cast<size_t>(feature));
      if (r.constant) return r.min;
      return r.min + norm * (r.max - r.min);
    }
    case FeatureKind::Valve:
      if (near(norm, 0.0)) return 0.0;
      if (near(norm, 0.5)) return 1.0;
      if (near(norm, 1.0)) return 2.0;
      fail("valve value " + std::to_string(norm) + " for " + f.name +
           " is not one of {0, 0.5, 1}" + at_timestep(t));
    case FeatureKind::Pump:
      if (near(norm, 0.0)) return 1.0;
      if (near(norm, 1.0)) return 2.0;
      fail("pump value " + std::to_string(norm) + " for " + f.name +
           " is not one of {0, 1}" + at_timestep(t));
  }
  fail("unreachable");
}

NormParams fit_normalization(const TimeSeries& raw_normal,
                             const FeatureSchema& schema) {
  if (raw_normal.length() == 0) fail("fit_normalization: empty series");
  if (raw_normal.values.cols() != schema.size())
    fail("fit_normalization: series width does not match schema");
  NormParams p;
  p.sensors.resize(static_cast<size_t>(schema.size()));
  for (int j = 0; j < schema.size(); ++j) {
    if (!schema.is_sensor(j)) continue;
    auto col = raw_normal.values.col(j);
    NormParams::SensorRange r;
    r.min = col.minCoeff();
    r.max = col.maxCoeff();
    if (r.max - r.min < 1e-12) {
      r.constant = true;
      r.max = r.min;
    }
    p.sensors[static_cast<size_t>(j)] = r;
  }
  return p;
}

TimeSeries normalize(const TimeSeries& raw, const FeatureSchema& schema,
                     const NormParams& params) {
  if (raw.values.cols() != schema.size())
    fail("normalize: series width does not match schema");
  TimeSeries out = raw;
  for (Eigen::Index t = 0; t < raw.length(); ++t)
    for (int j = 0; j < schema.size(); ++j)
      out.values(t, j) = params.normalize_value(j, raw.values(t, j), schema, t);
  return out;
}

TimeSeries denormalize(const TimeSeries& norm, const FeatureSchema& schema,
                       const NormParams& params) {
  if (norm.values.cols() != schema.size())
    fail("denormalize: series width does not match schema");
  TimeSeries out = norm;
  for (Eigen::Index t = 0; t < norm.length(); ++t)
    for (int j = 0; j < schema.size(); ++j)
      out.values(t, j) = params.denormalize_value(j, norm.values(t, j), schema, t);
  return out;
}

void validate_state(const Eigen::VectorXd& state, const FeatureSchema& schema,
                    const std::string& context) {
  if (state.size() != schema.size())
    fail("validate_state: wrong dimension " + context);
  for (int j = 0; j < schema.size(); ++j) {
    double v = state(j);
    std::string where = context.empty() ? schema.at(j).name
                                        : schema.at(j).name + " (" + context + ")";
    if (v < -1e-9 || v > 1.0 + 1e-9) fail("state out of [0,1] for " + where);
    if (schema.at(j).kind == FeatureKind::Valve &&
        !(near(v, 0.0) || near(v, 0.5) || near(v, 1.0)))
      fail("valve state not in {0, 0.5, 1} for " + where);
    if (schema.at(j).kind == FeatureKind::Pump && !(near(v, 0.0) || near(v, 1.0)))
      fail("pump state not in {0, 1} for " + where);
  }
}

std::vector<Window> window(const TimeSeries& series, int w, int stride) {
  if (w < 1) throw std::invalid_argument("window: w must be positive");
  if (stride < 1) throw std::invalid_argument("window: stride must be positive");
  if (series.length() <= w)
    throw std::invalid_argument("window: series length must exceed w");
  std::vector<Window> out;
  for (Eigen::Index i = 0; i + w < series.length(); i += stride) {
    Window win;
    win.input = series.values.middleRows(i, w);
    win.target = series.values.row(i + w);
    win.target_index = i + w;
    out.push_back(std::move(win));
  }
  return out;
}

}  // namespace cpsw
