#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "cpsw/ga.hpp"

using namespace cpsw;

namespace {

// Every assignment over the given kinds, in code order.
std::vector<Eigen::VectorXd> all_assignments(const std::vector<FeatureKind>& kinds) {
  std::vector<Eigen::VectorXd> out;
  Eigen::VectorXd cur(static_cast<Eigen::Index>(kinds.size()));
  std::function<void(size_t)> rec = [&](size_t g) {
    if (g == kinds.size()) {
      out.push_back(cur);
      return;
    }
    for (double code : actuator_codes(kinds[g])) {
      cur(static_cast<Eigen::Index>(g)) = code;
      rec(g + 1);
    }
  };
  rec(0);
  return out;
}

}  // namespace

TEST_CASE("actuator code tables") {
  CHECK(actuator_codes(FeatureKind::Valve) == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(actuator_codes(FeatureKind::Pump) == std::vector<double>{0.0, 1.0});
  CHECK_THROWS_AS(actuator_codes(FeatureKind::Sensor), std::invalid_argument);
}

TEST_CASE("fitness rewards closeness and caps at identity") {
  Eigen::VectorXd orig(2), near(2), far(2);
  orig << 1.0, 0.0;
  near << 1.0, 1.0;
  far << 0.0, 1.0;
  CHECK(repair_fitness(orig, orig, 1.0) == doctest::Approx(1e9));
  CHECK(repair_fitness(near, orig, 1.0) == doctest::Approx(1.0));
  CHECK(repair_fitness(far, orig, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(repair_fitness(near, orig, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("an already-passing assignment short-circuits unchanged") {
  Eigen::VectorXd orig(3);
  orig << 1.0, 0.0, 0.5;
  long calls = 0;
  GaResult r = repair_actuators(
      orig, {FeatureKind::Pump, FeatureKind::Pump, FeatureKind::Valve},
      [&](const Eigen::VectorXd&) {
        ++calls;
        return true;
      },
      GaParams{});
  CHECK(r.success);
  CHECK(calls == 1);
  CHECK((r.actuators - orig).norm() == 0.0);
  CHECK(r.fitness == doctest::Approx(1e9));
}

TEST_CASE("an unsatisfiable oracle reports failure with the original kept") {
  Eigen::VectorXd orig(2);
  orig << 1.0, 0.0;
  GaResult r = repair_actuators(orig, {FeatureKind::Pump, FeatureKind::Pump},
                                [](const Eigen::VectorXd&) { return false; },
                                GaParams{});
  CHECK_FALSE(r.success);
  CHECK((r.actuators - orig).norm() == 0.0);
}

TEST_CASE("repairs are deterministic per seed") {
  std::vector<FeatureKind> kinds(5, FeatureKind::Pump);
  kinds.push_back(FeatureKind::Valve);
  Eigen::VectorXd orig(6);
  orig << 1, 1, 0, 0, 1, 0.5;
  auto oracle = [](const Eigen::VectorXd& c) {
    return c.sum() >= 3.0;  // arbitrary interlock
  };
  GaParams p;
  p.seed = 5;
  GaResult a = repair_actuators(orig, kinds, oracle, p);
  GaResult b = repair_actuators(orig, kinds, oracle, p);
  REQUIRE(a.success);
  CHECK((a.actuators - b.actuators).norm() == 0.0);
  CHECK(a.fitness == b.fitness);
}

TEST_CASE("matches exhaustive search on 500 random small oracles") {
  std::mt19937 rng(99);
  int agree = 0;
  double worst_ms = 0.0;
  const int cases = 500;
  for (int k = 0; k < cases; ++k) {
    // Up to 64 combinations: six pumps (64) or four pumps and a valve (48).
    std::vector<FeatureKind> kinds;
    if ((k % 2) == 1) {
      kinds.assign(4, FeatureKind::Pump);
      kinds.push_back(FeatureKind::Valve);
    } else {
      kinds.assign(6, FeatureKind::Pump);
    }

    auto combos = all_assignments(kinds);
    REQUIRE(combos.size() <= 64);

    // Original assignment plus a random satisfiable subset (never the
    // original itself, so the GA actually has to search).
    Eigen::VectorXd orig = combos[rng() % combos.size()];
    std::vector<bool> allowed(combos.size(), false);
    int n_allowed = 1 + static_cast<int>(rng() % 6);
    for (int j = 0; j < n_allowed; ++j) allowed[rng() % combos.size()] = true;
    auto index_of = [&](const Eigen::VectorXd& c) -> size_t {
      for (size_t i = 0; i < combos.size(); ++i)
        if ((combos[i] - c).norm() == 0.0) return i;
      return combos.size();
    };
    allowed[index_of(orig)] = false;

    auto oracle = [&](const Eigen::VectorXd& c) {
      size_t i = index_of(c);
      return i < combos.size() && allowed[i];
    };

    double best = 0.0;
    bool satisfiable = false;
    for (size_t i = 0; i < combos.size(); ++i)
      if (allowed[i]) {
        satisfiable = true;
        best = std::max(best, repair_fitness(combos[i], orig, 1.0));
      }

    GaParams p;
    p.seed = 1000 + static_cast<unsigned>(k);
    auto t0 = std::chrono::steady_clock::now();
    GaResult r = repair_actuators(orig, kinds, oracle, p);
    auto t1 = std::chrono::steady_clock::now();
    worst_ms = std::max(
        worst_ms,
        std::chrono::duration<double, std::milli>(t1 - t0).count());

    if (!satisfiable) {
      CHECK_FALSE(r.success);
      ++agree;
      continue;
    }
    if (r.success && std::abs(r.fitness - best) < 1e-12) ++agree;
  }
  // The search is stochastic; parity with brute force on at least 99%.
  CHECK(agree >= cases * 99 / 100);
  CHECK(worst_ms < 1000.0);
}

TEST_CASE("repaired assignment always satisfies the oracle it was given") {
  std::mt19937 rng(7);
  for (int k = 0; k < 50; ++k) {
    std::vector<FeatureKind> kinds = {FeatureKind::Valve, FeatureKind::Valve,
                                      FeatureKind::Pump, FeatureKind::Pump};
    Eigen::VectorXd orig(4);
    orig << 0.5, 1.0, 0.0, 1.0;
    const double want = static_cast<double>(rng() % 3);
    auto oracle = [&](const Eigen::VectorXd& c) {
      return std::abs(c.head(2).sum() - want) < 1e-9;
    };
    GaParams p;
    p.seed = static_cast<unsigned>(k);
    GaResult r = repair_actuators(orig, kinds, oracle, p);
    if (r.success) CHECK(oracle(r.actuators));
    // These oracles are always satisfiable.
    CHECK(r.success);
  }
}

TEST_CASE("parameter validation") {
  Eigen::VectorXd orig(1);
  orig << 1.0;
  GaParams p;
  p.population = 1;
  CHECK_THROWS_AS(repair_actuators(orig, {FeatureKind::Pump},
                                   [](const Eigen::VectorXd&) { return true; },
                                   p),
                  std::invalid_argument);
  CHECK_THROWS_AS(repair_actuators(orig, {FeatureKind::Pump, FeatureKind::Pump},
                                   [](const Eigen::VectorXd&) { return true; },
                                   GaParams{}),
                  std::invalid_argument);
}
