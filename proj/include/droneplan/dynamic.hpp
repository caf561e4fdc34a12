#pragma once

// Repeated coalition formation with belief updates from observed deliveries.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "droneplan/coalition.hpp"
#include "droneplan/sim.hpp"

namespace droneplan {

/// (P_success, P_failure) = (ok / theta, 1 - ok / theta). Throws
/// std::invalid_argument("no observation") when theta is 0.
std::pair<Rational, Rational> outcome_probabilities(std::int64_t theta, std::int64_t theta_ok);

/// Belief implied by one observation: ok / (theta (1 - eps)), capped at 1.
Rational raw_belief(std::int64_t theta, std::int64_t theta_ok, const Rational& eps);

/// w1 * old + w2 * raw. Throws std::invalid_argument on invalid weights.
Rational ema_update(const Rational& old, const Rational& raw, const Rational& w1, const Rational& w2);

struct DynamicConfig {
  BeliefMatrix initial;               // size 0: everyone fully trusted
  std::vector<Rational> misbehavior;  // ground truth per shipper index; empty: none
  Rational error_prob = Rational(1, 20);
  Rational w1 = Rational(1, 2);
  Rational w2 = Rational(1, 2);
  std::size_t max_iters = 12;
  double tolerance = 1e-3;            // on the largest belief change
  std::size_t settle = 2;             // consecutive iterations under tolerance
  std::uint64_t seed = 1;
  std::uint64_t runs_per_iteration = 1;
  unsigned jobs = 1;
};

struct Observation {
  std::size_t p = 0;  // sender
  std::size_t q = 0;  // receiver
  std::int64_t theta = 0;
  std::int64_t theta_ok = 0;
};

struct DynamicIteration {
  std::size_t iteration = 0;     // from 1
  BeliefMatrix beliefs;          // used for planning this iteration
  CoalitionStructure structure;
  std::vector<Rational> expected;  // mu_p in its coalition
  std::vector<double> realized;    // mean realized cost per shipper
  std::vector<Observation> observations;  // pairs with transfers only
  BeliefMatrix updated;
  double max_change = 0.0;
};

struct DynamicResult {
  std::vector<DynamicIteration> iterations;
  bool converged = false;
};

DynamicResult run_dynamic(const DeliveryScenario& scenario, const DynamicConfig& config,
                          SolveOptions solve_options = {});

}  // namespace droneplan
