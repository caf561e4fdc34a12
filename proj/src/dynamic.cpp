#include "droneplan/dynamic.hpp"

#include <cmath>
#include <stdexcept>

namespace droneplan {

std::pair<Rational, Rational> outcome_probabilities(std::int64_t theta, std::int64_t theta_ok) {
  if (theta == 0) throw std::invalid_argument("no observation");
  if (theta < 0 || theta_ok < 0 || theta_ok > theta) {
    throw std::invalid_argument("observation counts must satisfy 0 <= delivered <= transferred");
  }
  const Rational success = ratio(theta_ok, theta);
  return {success, 1 - success};
}

Rational raw_belief(std::int64_t theta, std::int64_t theta_ok, const Rational& eps) {
  if (eps < 0 || eps >= 1) throw std::invalid_argument("error probability must lie in [0, 1)");
  const auto success = outcome_probabilities(theta, theta_ok).first;
  if (success < 1 - eps) return success / (1 - eps);
  return 1;
}

Rational ema_update(const Rational& old, const Rational& raw, const Rational& w1, const Rational& w2) {
  if (w1 < 0 || w2 < 0 || w1 + w2 != 1) throw std::invalid_argument("EMA weights must be non-negative and sum to 1");
  return w1 * old + w2 * raw;
}

DynamicResult run_dynamic(const DeliveryScenario& scenario, const DynamicConfig& config,
                          SolveOptions solve_options) {
  const auto n = scenario.shippers().size();
  BeliefMatrix beliefs = config.initial.size() ? config.initial : BeliefMatrix(n);
  if (beliefs.size() != n) throw std::invalid_argument("belief matrix size mismatch");
  // Validate the update parameters before any solving.
  ema_update(0, 0, config.w1, config.w2);
  if (config.error_prob < 0 || config.error_prob >= 1) {
    throw std::invalid_argument("error probability must lie in [0, 1)");
  }

  CharacteristicCache cache(scenario, PlanMode::stochastic, solve_options);
  DynamicResult result;
  std::size_t quiet = 0;
  for (std::size_t t = 1; t <= config.max_iters; ++t) {
    DynamicIteration it;
    it.iteration = t;
    it.beliefs = beliefs;
    PayoffModel payoffs(cache, beliefs, config.jobs);
    it.structure = merge_split(payoffs).structure;
    for (std::size_t p = 0; p < n; ++p) {
      it.expected.push_back(payoffs.payoff(p, it.structure.block_of(p)));
    }

    SimConfig sim;
    sim.runs = config.runs_per_iteration;
    sim.seed = config.seed;
    sim.first_run = (t - 1) * config.runs_per_iteration;
    sim.misbehavior = config.misbehavior;
    sim.jobs = config.jobs;
    const auto report = simulate_plan(scenario, make_plan(cache, it.structure), sim);
    it.realized = report.shipper_mean;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = 0; q < n; ++q) {
        const auto theta = static_cast<std::int64_t>(report.theta[p][q]);
        if (p == q || theta == 0) continue;  // no transfers: belief carries over
        const auto ok = static_cast<std::int64_t>(report.theta_ok[p][q]);
        it.observations.push_back({p, q, theta, ok});
        const auto next = ema_update(beliefs(p, q), raw_belief(theta, ok, config.error_prob),
                                     config.w1, config.w2);
        it.max_change = std::max(it.max_change, std::abs(to_double(next - beliefs(p, q))));
        beliefs.set(p, q, next);
      }
    }
    it.updated = beliefs;
    quiet = it.max_change < config.tolerance ? quiet + 1 : 0;
    result.iterations.push_back(std::move(it));
    if (quiet >= config.settle) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace droneplan
