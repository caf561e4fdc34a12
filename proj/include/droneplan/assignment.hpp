#pragma once

// Package assignment for one coalition: which pooled drone (flying from which
// member depot) serves each pooled customer, and which packages are handed to
// the outsourcing carrier. The deterministic objective charges drone start-up,
// round-trip routing, transfers and outsourcing; the stochastic objective adds
// the expected penalty of packages stranded by a drone breakdown.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "droneplan/model.hpp"
#include "droneplan/program.hpp"
#include "droneplan/rational.hpp"
#include "droneplan/structure.hpp"

namespace droneplan {

enum class PlanMode { deterministic, stochastic };

const char* to_string(PlanMode mode);
PlanMode parse_plan_mode(std::string_view text);

/// Thrown when a solve or an oracle cannot run (size limits, node budget).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pooled index sets and per-trip quantities for one coalition. Depot, customer
/// and drone "slots" index into the vectors below; all lists follow id order.
struct CoalitionData {
  Coalition coalition;
  std::vector<std::size_t> depots;     // scenario shipper indices
  std::vector<std::size_t> customers;  // scenario customer indices
  std::vector<std::size_t> drones;     // scenario drone indices
  std::vector<std::size_t> owner_slot; // per customer
  std::vector<std::size_t> home_slot;  // per drone

  std::vector<std::vector<Rational>> leg;               // [customer][depot] one-way routing cost
  std::vector<std::vector<std::int64_t>> leg_cents;     // same, in cents
  std::vector<std::vector<std::int64_t>> round_trip;    // [customer][depot] micro-km
  std::vector<std::vector<std::vector<std::int64_t>>> trip_time;  // [customer][drone][depot] micro-hours
  std::vector<double> weight;                           // per customer, kg
  std::vector<double> capacity;                         // per drone, kg
  std::vector<std::int64_t> trip_limit;                 // micro-km
  std::vector<std::int64_t> day_limit;                  // micro-km
  std::vector<std::int64_t> shift_limit;                // micro-hours

  /// Single-trip feasibility of drone `d` serving customer `i` from depot `p`.
  bool can_serve(std::size_t i, std::size_t d, std::size_t p) const;
};

CoalitionData make_coalition_data(const DeliveryScenario& scenario, Coalition coalition);

/// Values of every decision variable over the pooled index sets. Maps in the
/// model are stored densely by slot; JSON output re-keys them by string id.
struct AssignmentSolution {
  PlanMode mode = PlanMode::stochastic;
  Coalition coalition;
  std::vector<std::size_t> depots;
  std::vector<std::size_t> customers;
  std::vector<std::size_t> drones;

  std::vector<std::optional<std::size_t>> served_by;  // Y / Z: drone slot, nullopt = outsourced
  std::vector<bool> use_drone;                        // W
  std::vector<std::size_t> drone_depot;               // B: depot slot per drone
  std::vector<int> served_count;                      // N
  std::vector<bool> transfers_active;                 // T per depot slot
  // M: customer -> (from depot slot, to depot slot) when transferred.
  std::vector<std::optional<std::pair<std::size_t, std::size_t>>> transfer;

  // Linearization auxiliaries [drone][position], stochastic mode only.
  std::vector<std::vector<int>> prefix;                // X
  std::vector<std::vector<Rational>> penalty_value;    // V
  std::vector<std::vector<Rational>> penalty_share;    // A

  Rational objective;

  bool outsourced(std::size_t customer_slot) const { return !served_by[customer_slot]; }
  std::size_t transferred_count() const;
};

struct ObjectiveBreakdown {
  Rational initial;
  Rational routing;
  Rational transfer;
  Rational outsource;
  Rational expected_penalty;

  Rational total() const { return initial + routing + transfer + outsource + expected_penalty; }
};

/// Expected breakdown penalty of a drone carrying `n` packages in sequence,
/// each attempt failing with probability `p` and stranding the rest.
Rational expected_penalty(unsigned n, const Rational& p, const Rational& c_pen);

/// Auxiliary X/V/A columns of one drone serving `n` packages among `positions`.
struct PenaltyAuxiliaries {
  std::vector<int> prefix;
  std::vector<Rational> value;
  std::vector<Rational> share;
};
PenaltyAuxiliaries penalty_auxiliaries(unsigned n, std::size_t positions, const Rational& p,
                                       const Rational& c_pen);

/// Throws std::invalid_argument("coalition must be nonempty") for empty coalitions.
LinearProgram build_program(const DeliveryScenario& scenario, Coalition coalition, PlanMode mode);

/// The solution laid out as a value vector over `program`'s variables.
std::vector<Rational> program_values(const LinearProgram& program,
                                     const DeliveryScenario& scenario,
                                     const AssignmentSolution& solution);

struct SolveOptions {
  std::uint64_t max_nodes = 0;  // 0: unlimited
};

struct SolveStats {
  std::uint64_t configurations = 0;
  std::uint64_t nodes = 0;
};

/// Exact minimum of the coalition's assignment program. Repeated calls return
/// identical solutions.
AssignmentSolution solve_assignment(const DeliveryScenario& scenario, Coalition coalition,
                                    PlanMode mode, const SolveOptions& options = {},
                                    SolveStats* stats = nullptr);

/// Exhaustive enumeration over depot choices and per-customer service options,
/// evaluating the breakdown penalty as the explicit scenario-tree sum. Limited
/// to 8 customers and 3 drones; larger instances throw SolverError.
AssignmentSolution brute_force_assignment(const DeliveryScenario& scenario, Coalition coalition,
                                          PlanMode mode);

/// Recomputes the objective of `solution` from its raw variables under `mode`.
/// Throws std::domain_error naming the violated constraint role.
ObjectiveBreakdown evaluate_objective(const DeliveryScenario& scenario, Coalition coalition,
                                      const AssignmentSolution& solution, PlanMode mode);

/// Transferred package counts theta[p][q] indexed by scenario shipper index.
std::vector<std::vector<int>> transfer_counts(const AssignmentSolution& solution,
                                              std::size_t shipper_count);

}  // namespace droneplan
