#pragma once

#include <string>
#include <vector>

#include "cpsw/core.hpp"
#include "cpsw/lstm.hpp"

namespace cpsw {

// Per-feature perturbation magnitudes in normalized units. Sensors get a
// tunable lambda; a valve step of 0.5 and a pump step of 1.0 always reach the
// neighbouring actuator code.
struct EpsilonSpec {
  double sensor = 0.1;
  double valve = 0.5;
  double pump = 1.0;
  bool sensors_only = false;  // zero out actuator entries

  Eigen::VectorXd diagonal(const FeatureSchema& schema) const;
};

// Gradient-sign step for one state row:
//   delta = sign(grad) .* eps
//   result = state + delta when pushing away from the learned profile,
//            state - delta when masking an anomaly.
// Sensor entries are clipped to [0,1]; actuator entries snap to the nearest
// valid normalized code.
Eigen::VectorXd perturb_row(const Eigen::VectorXd& state,
                            const Eigen::VectorXd& gradient_row,
                            const Eigen::VectorXd& eps,
                            const FeatureSchema& schema, bool away);

struct CraftResult {
  TimeSeries series;                // perturbed copy of the input
  std::vector<bool> modified;       // per timestep
};

// Perturbs every timestep that has both a full history window and a
// successor. The gradient is taken from the model loss at the original
// (unperturbed) window; rows labelled Normal are pushed away from the
// prediction, rows labelled Attack are pulled toward it.
CraftResult craft(const TimeSeries& normalized, const LstmModel& model,
                  const EpsilonSpec& eps_spec, const FeatureSchema& schema);

// The experiment grid: which features are touched and how hard.
struct ScenarioParams {
  std::string name;
  EpsilonSpec eps;
  bool ga_repair = false;
};

std::vector<ScenarioParams> standard_scenarios();

}  // namespace cpsw
