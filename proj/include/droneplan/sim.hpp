#pragma once

// Monte Carlo execution of assignment plans: drone breakdowns per delivery
// attempt and partners dropping transferred packages.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "droneplan/coalition.hpp"
#include "droneplan/costshare.hpp"

namespace droneplan {

/// Philox4x32-10 counter-based generator.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter block(Counter counter, Key key);
};

/// Stable substream id derived from an entity id, so adding entities does not
/// shift anyone else's draws.
std::uint32_t stream_id(std::string_view kind, std::string_view id);

/// Uniform double in [0, 1) for (seed, run, stream, draw).
double uniform01(std::uint64_t seed, std::uint64_t run, std::uint32_t stream, std::uint32_t draw);

/// One assignment per block of a structure, plus the Shapley split of each
/// block's planned non-penalty cost (initial + routing + transfer + outsourcing).
struct Plan {
  PlanMode mode = PlanMode::stochastic;
  CoalitionStructure structure;
  std::vector<AssignmentSolution> solutions;   // same order as structure.blocks
  std::vector<CostAllocation> planned_shares;  // same order
};

Plan make_plan(CharacteristicCache& cache, const CoalitionStructure& structure);

/// Planned non-penalty cost of a solution.
Rational planned_fixed_cost(const DeliveryScenario& scenario, const AssignmentSolution& solution);

struct SimConfig {
  std::uint64_t runs = 1000;
  std::uint64_t seed = 1;
  std::uint64_t first_run = 0;       // run counter offset (distinct batches share a seed)
  std::vector<Rational> misbehavior; // per shipper index; empty means none
  unsigned jobs = 1;
  bool keep_events = false;
};

struct SimEvent {
  std::uint64_t run = 0;
  std::string kind;  // deliver, breakdown, strand, drop, outsource
  std::string customer;
  std::string owner;
  std::string drone;  // empty for outsourced or dropped packages
  double cost = 0.0;
};

struct SimReport {
  std::uint64_t runs = 0;
  std::vector<double> shipper_mean;     // per shipper index
  std::vector<double> shipper_stderr;
  std::vector<double> block_mean;       // per structure block
  double total_mean = 0.0;
  double total_stderr = 0.0;
  double penalty_mean = 0.0;            // breakdown and misbehavior penalties
  double breakdown_penalty_mean = 0.0;  // breakdown strandings only
  std::uint64_t assigned = 0;           // drone-assigned packages over all runs
  std::uint64_t delivered = 0;
  std::vector<std::vector<std::uint64_t>> theta;     // planned transfers p -> q, summed over runs
  std::vector<std::vector<std::uint64_t>> theta_ok;  // of which delivered
  std::vector<SimEvent> events;
};

/// Throws std::invalid_argument when the plan does not match the scenario.
SimReport simulate_plan(const DeliveryScenario& scenario, const Plan& plan, const SimConfig& config);

struct FrameworkResult {
  std::string name;  // DDD, SDD, CoDDD, CoSDD, BCoSDD
  CoalitionStructure structure;
  SimReport report;
};

/// Singleton plans (DDD, SDD), cooperative plans with full trust (CoDDD,
/// CoSDD) and the Bayesian plan with `beliefs` (BCoSDD), each simulated with
/// the same seed.
std::vector<FrameworkResult> compare_frameworks(const DeliveryScenario& scenario,
                                                const BeliefMatrix& beliefs,
                                                const SimConfig& config,
                                                SolveOptions solve_options = {});

}  // namespace droneplan
