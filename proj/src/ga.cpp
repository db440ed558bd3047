#include "cpsw/ga.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace cpsw {

namespace {
constexpr double kFitnessCap = 1e9;
}

const std::vector<double>& actuator_codes(FeatureKind kind) {
  static const std::vector<double> valve{0.0, 0.5, 1.0};
  static const std::vector<double> pump{0.0, 1.0};
  if (kind == FeatureKind::Valve) return valve;
  if (kind == FeatureKind::Pump) return pump;
  throw std::invalid_argument("actuator_codes: not an actuator kind");
}

double repair_fitness(const Eigen::VectorXd& candidate,
                      const Eigen::VectorXd& original, double c1) {
  const double dist = (candidate - original).norm();
  if (dist <= 0.0) return kFitnessCap;
  return std::min(kFitnessCap, c1 / dist);
}

GaResult repair_actuators(const Eigen::VectorXd& original,
                          const std::vector<FeatureKind>& kinds,
                          const ActuatorOracle& oracle,
                          const GaParams& params) {
  const size_t genes = kinds.size();
  if (static_cast<size_t>(original.size()) != genes)
    throw std::invalid_argument("repair_actuators: kinds/original size mismatch");
  if (params.population < 2)
    throw std::invalid_argument("repair_actuators: population must be >= 2");

  GaResult result;
  result.actuators = original;

  // Nothing to do when the attack's own assignment already passes.
  if (oracle(original)) {
    result.success = true;
    result.fitness = kFitnessCap;
    return result;
  }
  if (genes == 0) return result;

  std::mt19937 rng(params.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto random_gene = [&](size_t g) {
    const auto& codes = actuator_codes(kinds[g]);
    std::uniform_int_distribution<size_t> pick(0, codes.size() - 1);
    return codes[pick(rng)];
  };

  using Individual = Eigen::VectorXd;
  std::vector<Individual> pop;
  pop.reserve(static_cast<size_t>(params.population));
  pop.push_back(original);
  while (pop.size() < static_cast<size_t>(params.population)) {
    Individual ind(original.size());
    for (size_t g = 0; g < genes; ++g)
      ind(static_cast<Eigen::Index>(g)) = random_gene(g);
    pop.push_back(std::move(ind));
  }

  double best_fitness = 0.0;
  auto consider = [&](const Individual& ind) {
    if (!oracle(ind)) return;
    const double f = repair_fitness(ind, original, params.c1);
    if (!result.success || f > best_fitness) {
      result.success = true;
      best_fitness = f;
      result.actuators = ind;
      result.fitness = f;
    }
  };

  std::vector<double> weights(pop.size());
  for (int gen = 0; gen < params.generations; ++gen) {
    result.generations_used = gen + 1;
    double total = 0.0;
    for (size_t i = 0; i < pop.size(); ++i) {
      consider(pop[i]);
      weights[i] = oracle(pop[i]) ? repair_fitness(pop[i], original, params.c1)
                                  : 0.0;
      total += weights[i];
    }
    if (result.success && result.fitness >= kFitnessCap) break;

    // Roulette-wheel selection; uniform when no candidate has any fitness yet.
    auto select = [&]() -> const Individual& {
      if (total <= 0.0) {
        std::uniform_int_distribution<size_t> pick(0, pop.size() - 1);
        return pop[pick(rng)];
      }
      double r = uni(rng) * total;
      for (size_t i = 0; i < pop.size(); ++i) {
        r -= weights[i];
        if (r <= 0.0) return pop[i];
      }
      return pop.back();
    };

    std::vector<Individual> next;
    next.reserve(pop.size());
    if (result.success) next.push_back(result.actuators);  // keep the best
    while (next.size() < pop.size()) {
      const Individual& a = select();
      const Individual& b = select();
      Individual child(original.size());
      if (genes > 1) {
        std::uniform_int_distribution<size_t> cut(1, genes - 1);
        const size_t k = cut(rng);
        for (size_t g = 0; g < genes; ++g)
          child(static_cast<Eigen::Index>(g)) =
              g < k ? a(static_cast<Eigen::Index>(g))
                    : b(static_cast<Eigen::Index>(g));
      } else {
        child = uni(rng) < 0.5 ? a : b;
      }
      for (size_t g = 0; g < genes; ++g)
        if (uni(rng) < params.mutation_rate)
          child(static_cast<Eigen::Index>(g)) = random_gene(g);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    weights.assign(pop.size(), 0.0);
  }
  for (const auto& ind : pop) consider(ind);

  if (result.success && !oracle(result.actuators)) result.success = false;
  return result;
}

}  // namespace cpsw
