#pragma once

#include <functional>
#include <vector>

#include "cpsw/core.hpp"

namespace cpsw {

// Genetic search over discrete actuator codes. The oracle is a black box: it
// answers whether a candidate actuator assignment is consistent with the
// plant interlocks, nothing more. Fitness rewards candidates that both pass
// the oracle and stay close to the assignment the gradient attack asked for.
struct GaParams {
  int population = 50;
  int generations = 100;
  double mutation_rate = 0.5;  // per-gene resample probability
  double c1 = 1.0;             // fitness scale
  unsigned seed = 42;
};

struct GaResult {
  bool success = false;
  Eigen::VectorXd actuators;   // best oracle-passing candidate (or original)
  double fitness = 0.0;
  int generations_used = 0;
};

using ActuatorOracle = std::function<bool(const Eigen::VectorXd&)>;

// Valid normalized codes for one actuator kind.
const std::vector<double>& actuator_codes(FeatureKind kind);

double repair_fitness(const Eigen::VectorXd& candidate,
                      const Eigen::VectorXd& original, double c1);

GaResult repair_actuators(const Eigen::VectorXd& original,
                          const std::vector<FeatureKind>& kinds,
                          const ActuatorOracle& oracle, const GaParams& params);

}  // namespace cpsw
