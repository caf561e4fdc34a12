#include "droneplan/assignment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

namespace droneplan {

const char* to_string(PlanMode mode) {
  return mode == PlanMode::deterministic ? "deterministic" : "stochastic";
}

PlanMode parse_plan_mode(std::string_view text) {
  if (text == "deterministic" || text == "ddd") return PlanMode::deterministic;
  if (text == "stochastic" || text == "sdd") return PlanMode::stochastic;
  throw std::invalid_argument("unknown mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Pooled coalition data

bool CoalitionData::can_serve(std::size_t i, std::size_t d, std::size_t p) const {
  const auto rt = round_trip[i][p];
  return weight[i] <= capacity[d] && rt <= trip_limit[d] && rt <= day_limit[d] &&
         trip_time[i][d][p] <= shift_limit[d];
}

CoalitionData make_coalition_data(const DeliveryScenario& scenario, Coalition coalition) {
  if (coalition.empty()) {
    throw std::invalid_argument("coalition must be nonempty");
  }
  const auto& shippers = scenario.shippers();
  CoalitionData data;
  data.coalition = coalition;
  data.depots = coalition.members();
  if (data.depots.back() >= shippers.size()) {
    throw std::invalid_argument("coalition references an unknown shipper");
  }
  std::vector<std::size_t> slot_of(shippers.size(), 0);
  for (std::size_t s = 0; s < data.depots.size(); ++s) {
    slot_of[data.depots[s]] = s;
  }
  for (std::size_t i = 0; i < scenario.customers().size(); ++i) {
    const auto owner = scenario.owner_index(i);
    if (coalition.contains(owner)) {
      data.customers.push_back(i);
      data.owner_slot.push_back(slot_of[owner]);
    }
  }
  for (std::size_t d = 0; d < scenario.drones().size(); ++d) {
    const auto home = scenario.home_index(d);
    if (coalition.contains(home)) {
      data.drones.push_back(d);
      data.home_slot.push_back(slot_of[home]);
    }
  }

  const auto nc = data.customers.size();
  const auto nd = data.drones.size();
  const auto ns = data.depots.size();
  data.leg.assign(nc, std::vector<Rational>(ns));
  data.leg_cents.assign(nc, std::vector<std::int64_t>(ns));
  data.round_trip.assign(nc, std::vector<std::int64_t>(ns));
  data.trip_time.assign(nc, std::vector<std::vector<std::int64_t>>(nd, std::vector<std::int64_t>(ns)));
  for (std::size_t i = 0; i < nc; ++i) {
    const auto& c = scenario.customers()[data.customers[i]];
    data.weight.push_back(c.weight);
    for (std::size_t p = 0; p < ns; ++p) {
      const auto& depot = shippers[data.depots[p]].depot;
      data.leg[i][p] = leg_cost(scenario.costs(), depot, c.location);
      data.leg_cents[i][p] = floor_scaled(data.leg[i][p], 100);
      data.round_trip[i][p] = 2 * to_micro(distance(depot, c.location));
      const double km = static_cast<double>(data.round_trip[i][p]) / kMicro;
      for (std::size_t d = 0; d < nd; ++d) {
        const auto& drone = scenario.drones()[data.drones[d]];
        data.trip_time[i][d][p] = to_micro(km / drone.speed + c.service_time);
      }
    }
  }
  for (auto d : data.drones) {
    const auto& drone = scenario.drones()[d];
    data.capacity.push_back(drone.capacity);
    data.trip_limit.push_back(to_micro(drone.trip_range));
    data.day_limit.push_back(to_micro(drone.daily_range));
    data.shift_limit.push_back(to_micro(drone.shift_hours));
  }
  return data;
}

std::size_t AssignmentSolution::transferred_count() const {
  return static_cast<std::size_t>(
      std::count_if(transfer.begin(), transfer.end(), [](const auto& t) { return t.has_value(); }));
}

// ---------------------------------------------------------------------------
// Breakdown penalty

Rational expected_penalty(unsigned n, const Rational& p, const Rational& c_pen) {
  if (n == 0 || p == 0) {
    return Rational(0);
  }
  // Sum_{j=1..n} q^(j-1) p c (n-j+1) = c (n - q (1 - q^n) / p)
  const Rational q = 1 - p;
  Rational out = c_pen * (Rational(n) - q * (1 - pow_int(q, n)) / p);
  out.canonicalize();
  return out;
}

PenaltyAuxiliaries penalty_auxiliaries(unsigned n, std::size_t positions, const Rational& p,
                                       const Rational& c_pen) {
  PenaltyAuxiliaries aux;
  const Rational q = 1 - p;
  const Rational big = c_pen * Rational(static_cast<long>(positions));
  Rational kappa = p * c_pen;
  for (std::size_t k = 1; k <= positions; ++k) {
    const int x = k <= n ? 1 : 0;
    Rational v = kappa * (Rational(static_cast<long>(n)) - Rational(static_cast<long>(k)) + 1);
    Rational a = v - big * (1 - x);
    if (a < 0) a = 0;
    aux.prefix.push_back(x);
    aux.value.push_back(std::move(v));
    aux.share.push_back(std::move(a));
    kappa *= q;
  }
  return aux;
}

namespace {

// Direct quadratic sum over the scenario tree, used where an independent
// evaluation is wanted.
Rational quadratic_penalty(unsigned n, const Rational& p, const Rational& c_pen) {
  Rational total;
  Rational survive = 1;
  for (unsigned j = 1; j <= n; ++j) {
    total += survive * p * c_pen * Rational(static_cast<long>(n - j + 1));
    survive *= 1 - p;
  }
  return total;
}

Rational breakdown_prob(const DeliveryScenario& s, const CoalitionData& data, std::size_t d) {
  return s.drones()[data.drones[d]].breakdown_prob;
}

Rational initial_cost(const DeliveryScenario& s, const CoalitionData& data, std::size_t d) {
  return s.drones()[data.drones[d]].initial_cost;
}

// Fills every derived variable from the service choice per customer and the
// depot of each used drone.
AssignmentSolution complete_solution(const DeliveryScenario& scenario, const CoalitionData& data,
                                     PlanMode mode,
                                     std::vector<std::optional<std::size_t>> served_by,
                                     const std::vector<std::size_t>& depot_if_used) {
  const auto nc = data.customers.size();
  const auto nd = data.drones.size();
  const auto ns = data.depots.size();
  AssignmentSolution sol;
  sol.mode = mode;
  sol.coalition = data.coalition;
  sol.depots = data.depots;
  sol.customers = data.customers;
  sol.drones = data.drones;
  sol.served_by = std::move(served_by);
  sol.served_count.assign(nd, 0);
  for (const auto& by : sol.served_by) {
    if (by) ++sol.served_count[*by];
  }
  sol.use_drone.assign(nd, false);
  sol.drone_depot.assign(nd, 0);
  for (std::size_t d = 0; d < nd; ++d) {
    sol.use_drone[d] = sol.served_count[d] > 0;
    sol.drone_depot[d] = sol.use_drone[d] ? depot_if_used[d] : data.home_slot[d];
  }
  sol.transfer.assign(nc, std::nullopt);
  sol.transfers_active.assign(ns, false);
  for (std::size_t i = 0; i < nc; ++i) {
    if (!sol.served_by[i]) continue;
    const auto from = data.owner_slot[i];
    const auto to = sol.drone_depot[*sol.served_by[i]];
    if (from != to) {
      sol.transfer[i] = std::make_pair(from, to);
      sol.transfers_active[from] = true;
      sol.transfers_active[to] = true;
    }
  }
  if (mode == PlanMode::stochastic) {
    const auto& c_pen = scenario.costs().penalty_cost;
    for (std::size_t d = 0; d < nd; ++d) {
      auto aux = penalty_auxiliaries(static_cast<unsigned>(sol.served_count[d]), nc,
                                     breakdown_prob(scenario, data, d), c_pen);
      sol.prefix.push_back(std::move(aux.prefix));
      sol.penalty_value.push_back(std::move(aux.value));
      sol.penalty_share.push_back(std::move(aux.share));
    }
  }
  return sol;
}

// Linear objective over the completed solution, penalty taken from A.
Rational linear_objective(const DeliveryScenario& scenario, const CoalitionData& data,
                          const AssignmentSolution& sol) {
  const auto& costs = scenario.costs();
  Rational total;
  for (std::size_t d = 0; d < sol.drones.size(); ++d) {
    if (sol.use_drone[d]) total += initial_cost(scenario, data, d);
  }
  for (std::size_t i = 0; i < sol.customers.size(); ++i) {
    if (sol.served_by[i]) {
      total += 2 * data.leg[i][sol.drone_depot[*sol.served_by[i]]];
    } else {
      total += costs.outsource_cost;
    }
  }
  for (bool t : sol.transfers_active) {
    if (t) total += costs.transfer_cost;
  }
  for (const auto& column : sol.penalty_share) {
    for (const auto& a : column) total += a;
  }
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// Symbolic program

LinearProgram build_program(const DeliveryScenario& scenario, Coalition coalition, PlanMode mode) {
  const auto data = make_coalition_data(scenario, coalition);
  const auto& costs = scenario.costs();
  const auto nc = data.customers.size();
  const auto nd = data.drones.size();
  const auto ns = data.depots.size();
  auto cid = [&](std::size_t i) { return scenario.customers()[data.customers[i]].id; };
  auto did = [&](std::size_t d) { return scenario.drones()[data.drones[d]].id; };
  auto pid = [&](std::size_t p) { return scenario.shippers()[data.depots[p]].id; };
  auto micro = [](std::int64_t v) { return ratio(v, kMicro); };

  LinearProgram lp;
  auto binary = [&](std::string family, std::vector<std::string> labels) {
    return lp.add_variable(
        Variable{std::move(family), std::move(labels), VarKind::binary, Rational(0), Rational(1)});
  };

  std::vector<std::size_t> W(nd), Z(nc), T(ns), N(nd);
  std::vector<std::vector<std::vector<std::size_t>>> Y(nc, std::vector<std::vector<std::size_t>>(nd, std::vector<std::size_t>(ns)));
  std::vector<std::vector<std::vector<std::size_t>>> M(nc, std::vector<std::vector<std::size_t>>(ns, std::vector<std::size_t>(ns)));
  std::vector<std::vector<std::size_t>> B(nd, std::vector<std::size_t>(ns));

  for (std::size_t d = 0; d < nd; ++d) W[d] = binary("W", {did(d)});
  for (std::size_t i = 0; i < nc; ++i)
    for (std::size_t d = 0; d < nd; ++d)
      for (std::size_t p = 0; p < ns; ++p) Y[i][d][p] = binary("Y", {cid(i), did(d), pid(p)});
  for (std::size_t i = 0; i < nc; ++i) Z[i] = binary("Z", {cid(i)});
  for (std::size_t p = 0; p < ns; ++p) T[p] = binary("T", {pid(p)});
  for (std::size_t i = 0; i < nc; ++i)
    for (std::size_t p = 0; p < ns; ++p)
      for (std::size_t q = 0; q < ns; ++q) M[i][p][q] = binary("M", {cid(i), pid(p), pid(q)});
  for (std::size_t d = 0; d < nd; ++d)
    for (std::size_t p = 0; p < ns; ++p) B[d][p] = binary("B", {did(d), pid(p)});
  for (std::size_t d = 0; d < nd; ++d) {
    N[d] = lp.add_variable({"N", {did(d)}, VarKind::integer, Rational(0),
                            Rational(static_cast<long>(nc))});
  }

  std::vector<std::vector<std::size_t>> X, A, V;
  if (mode == PlanMode::stochastic) {
    X.assign(nc, std::vector<std::size_t>(nd));
    A = X;
    V = X;
    for (std::size_t i = 0; i < nc; ++i) {
      for (std::size_t d = 0; d < nd; ++d) {
        X[i][d] = binary("X", {cid(i), did(d)});
        A[i][d] = lp.add_variable({"A", {cid(i), did(d)}, VarKind::continuous, Rational(0), std::nullopt});
        V[i][d] = lp.add_variable({"V", {cid(i), did(d)}, VarKind::continuous, std::nullopt, std::nullopt});
      }
    }
  }

  // Objective.
  for (std::size_t d = 0; d < nd; ++d) lp.add_objective(W[d], initial_cost(scenario, data, d));
  for (std::size_t i = 0; i < nc; ++i)
    for (std::size_t d = 0; d < nd; ++d)
      for (std::size_t p = 0; p < ns; ++p) lp.add_objective(Y[i][d][p], 2 * data.leg[i][p]);
  for (std::size_t p = 0; p < ns; ++p) lp.add_objective(T[p], costs.transfer_cost);
  for (std::size_t i = 0; i < nc; ++i) lp.add_objective(Z[i], costs.outsource_cost);
  if (mode == PlanMode::stochastic) {
    for (std::size_t i = 0; i < nc; ++i)
      for (std::size_t d = 0; d < nd; ++d) lp.add_objective(A[i][d], Rational(1));
  }

  const Rational count_m(static_cast<long>(nc + 1));
  auto add = [&](std::string role, std::string label, std::vector<Term> terms, Sense sense,
                 Rational rhs) {
    lp.add_constraint({std::move(role), std::move(label), std::move(terms), sense, std::move(rhs)});
  };

  for (std::size_t d = 0; d < nd; ++d) {
    std::vector<Term> t;
    for (std::size_t i = 0; i < nc; ++i)
      for (std::size_t p = 0; p < ns; ++p) t.push_back({Y[i][d][p], 1});
    t.push_back({W[d], -count_m});
    add("drone_activation", did(d), std::move(t), Sense::less_equal, 0);
  }
  for (std::size_t p = 0; p < ns; ++p) {
    std::vector<Term> out, in;
    for (std::size_t i = 0; i < nc; ++i) {
      for (std::size_t q = 0; q < ns; ++q) {
        out.push_back({M[i][p][q], 1});
        in.push_back({M[i][q][p], 1});
      }
    }
    out.push_back({T[p], -count_m});
    in.push_back({T[p], -count_m});
    add("transfer_out", pid(p), std::move(out), Sense::less_equal, 0);
    add("transfer_in", pid(p), std::move(in), Sense::less_equal, 0);
  }
  for (std::size_t i = 0; i < nc; ++i) {
    for (std::size_t d = 0; d < nd; ++d) {
      std::vector<Term> t;
      for (std::size_t p = 0; p < ns; ++p) t.push_back({Y[i][d][p], from_double(data.weight[i])});
      add("capacity", cid(i) + "," + did(d), std::move(t), Sense::less_equal,
          from_double(data.capacity[d]));
      std::vector<Term> trip;
      for (std::size_t p = 0; p < ns; ++p) trip.push_back({Y[i][d][p], micro(data.round_trip[i][p])});
      add("trip_range", cid(i) + "," + did(d), std::move(trip), Sense::less_equal,
          micro(data.trip_limit[d]));
    }
  }
  for (std::size_t i = 0; i < nc; ++i) {
    std::vector<Term> t;
    for (std::size_t d = 0; d < nd; ++d)
      for (std::size_t p = 0; p < ns; ++p) t.push_back({Y[i][d][p], 1});
    t.push_back({Z[i], 1});
    add("allocation", cid(i), std::move(t), Sense::equal, 1);
  }
  // A customer leaves its owner's depot only through a transfer, otherwise it is
  // served there or outsourced.
  for (std::size_t i = 0; i < nc; ++i) {
    for (std::size_t p = 0; p < ns; ++p) {
      std::vector<Term> t;
      for (std::size_t q = 0; q < ns; ++q) t.push_back({M[i][p][q], -1});
      for (std::size_t d = 0; d < nd; ++d) t.push_back({Y[i][d][p], -count_m});
      t.push_back({Z[i], -count_m});
      const Rational owns = data.owner_slot[i] == p ? 1 : 0;
      add("ownership", cid(i) + "," + pid(p), std::move(t), Sense::less_equal, -owns);
    }
  }
  for (std::size_t d = 0; d < nd; ++d) {
    std::vector<Term> day, shift, count;
    for (std::size_t i = 0; i < nc; ++i) {
      for (std::size_t p = 0; p < ns; ++p) {
        day.push_back({Y[i][d][p], micro(data.round_trip[i][p])});
        shift.push_back({Y[i][d][p], micro(data.trip_time[i][d][p])});
        count.push_back({Y[i][d][p], 1});
      }
    }
    add("daily_range", did(d), std::move(day), Sense::less_equal, micro(data.day_limit[d]));
    add("shift_time", did(d), std::move(shift), Sense::less_equal, micro(data.shift_limit[d]));
    count.push_back({N[d], -1});
    add("served_count", did(d), std::move(count), Sense::less_equal, 0);
  }
  for (std::size_t i = 0; i < nc; ++i) {
    std::vector<Term> once;
    for (std::size_t p = 0; p < ns; ++p) {
      for (std::size_t q = 0; q < ns; ++q) {
        std::vector<Term> t{{M[i][p][q], 1}};
        for (std::size_t d = 0; d < nd; ++d) t.push_back({Y[i][d][q], -1});
        add("transfer_service", cid(i) + "," + pid(p) + "," + pid(q), std::move(t),
            Sense::less_equal, 0);
        once.push_back({M[i][p][q], 1});
      }
      add("no_self_transfer", cid(i) + "," + pid(p), {{M[i][p][p], 1}}, Sense::equal, 0);
    }
    add("transfer_once", cid(i), std::move(once), Sense::less_equal, 1);
  }
  for (std::size_t d = 0; d < nd; ++d) {
    std::vector<Term> single;
    for (std::size_t p = 0; p < ns; ++p) {
      std::vector<Term> t;
      for (std::size_t i = 0; i < nc; ++i) t.push_back({Y[i][d][p], 1});
      t.push_back({B[d][p], -count_m});
      add("depot_link", did(d) + "," + pid(p), std::move(t), Sense::less_equal, 0);
      single.push_back({B[d][p], 1});
    }
    add("single_depot", did(d), std::move(single), Sense::equal, 1);
  }

  if (mode == PlanMode::stochastic) {
    const Rational penalty_m = costs.penalty_cost * Rational(static_cast<long>(nc));
    for (std::size_t d = 0; d < nd; ++d) {
      const auto p = breakdown_prob(scenario, data, d);
      std::vector<Term> prefix;
      for (std::size_t i = 0; i < nc; ++i) prefix.push_back({X[i][d], 1});
      prefix.push_back({N[d], -1});
      add("prefix_count", did(d), std::move(prefix), Sense::equal, 0);
      for (std::size_t i = 0; i < nc; ++i) {
        for (std::size_t j = i + 1; j < nc; ++j) {
          add("prefix_order", cid(i) + "," + cid(j) + "," + did(d),
              {{X[j][d], 1}, {X[i][d], -1}}, Sense::less_equal, 0);
        }
      }
      Rational kappa = p * costs.penalty_cost;
      for (std::size_t i = 0; i < nc; ++i) {
        const auto label = cid(i) + "," + did(d);
        add("penalty_activation", label, {{V[i][d], 1}, {X[i][d], penalty_m}, {A[i][d], -1}},
            Sense::less_equal, penalty_m);
        // Position i+1 contributes kappa * (N - i).
        add("penalty_value", label, {{V[i][d], 1}, {N[d], -kappa}}, Sense::equal,
            -kappa * Rational(static_cast<long>(i)));
        kappa *= 1 - p;
      }
    }
  }
  return lp;
}

std::vector<Rational> program_values(const LinearProgram& program, const DeliveryScenario& scenario,
                                     const AssignmentSolution& sol) {
  auto cid = [&](std::size_t i) { return scenario.customers()[sol.customers[i]].id; };
  auto did = [&](std::size_t d) { return scenario.drones()[sol.drones[d]].id; };
  auto pid = [&](std::size_t p) { return scenario.shippers()[sol.depots[p]].id; };
  std::map<std::string, Rational> named;
  auto put = [&](const std::string& family, std::vector<std::string> labels, Rational v) {
    named[Variable{family, std::move(labels), VarKind::binary, std::nullopt, std::nullopt}.name()] = std::move(v);
  };
  for (std::size_t d = 0; d < sol.drones.size(); ++d) {
    put("W", {did(d)}, sol.use_drone[d] ? 1 : 0);
    put("N", {did(d)}, sol.served_count[d]);
    put("B", {did(d), pid(sol.drone_depot[d])}, 1);
  }
  for (std::size_t i = 0; i < sol.customers.size(); ++i) {
    if (const auto& by = sol.served_by[i]) {
      put("Y", {cid(i), did(*by), pid(sol.drone_depot[*by])}, 1);
    } else {
      put("Z", {cid(i)}, 1);
    }
    if (const auto& t = sol.transfer[i]) {
      put("M", {cid(i), pid(t->first), pid(t->second)}, 1);
    }
  }
  for (std::size_t p = 0; p < sol.depots.size(); ++p) {
    put("T", {pid(p)}, sol.transfers_active[p] ? 1 : 0);
  }
  for (std::size_t d = 0; d < sol.penalty_share.size(); ++d) {
    for (std::size_t i = 0; i < sol.penalty_share[d].size(); ++i) {
      put("X", {cid(i), did(d)}, sol.prefix[d][i]);
      put("A", {cid(i), did(d)}, sol.penalty_share[d][i]);
      put("V", {cid(i), did(d)}, sol.penalty_value[d][i]);
    }
  }
  std::vector<Rational> values(program.variables().size());
  for (const auto& [name, v] : named) {
    if (auto index = program.find(name)) values[*index] = v;
  }
  return values;
}

// ---------------------------------------------------------------------------
// Exact solver
//
// Outer level: every drone is either idle or parked at one member depot, and a
// set of shippers is allowed to transfer (charged up front). Inner level: depth
// first search over customers with an integer Lagrangian bound on the daily
// range and shift constraints. Costs in the bound are floored to 1e-9 units so
// that pruning against ceil(incumbent) never discards a strictly better plan.

namespace {

constexpr std::int64_t kUnits = 1'000'000'000;
constexpr std::int64_t kUnitsPerCent = kUnits / 100;
constexpr std::int64_t kMultiplierCap = 1'000'000;
constexpr int kRootPasses = 40;
constexpr int kNodePasses = 3;
constexpr std::size_t kWarmupConfigs = 32;
constexpr std::uint64_t kWarmupNodes = 2000;

struct Option {
  int drone = -1;
  std::int64_t cost = 0;  // routing, units
  std::int64_t dist = 0;
  std::int64_t time = 0;
};

struct Item {
  std::size_t customer = 0;
  std::int64_t outsource = 0;
  std::vector<Option> options;
};

struct Config {
  std::vector<int> state;  // -1 idle, else depot slot
  std::uint64_t transfer_set = 0;
  std::int64_t simple_bound = 0;
  std::int64_t root_bound = 0;
  std::vector<std::int64_t> u, v;    // root range and shift multipliers
  std::vector<std::size_t> target;   // root relaxed package count per drone
};

class Solver {
 public:
  Solver(const DeliveryScenario& scenario, const CoalitionData& data, PlanMode mode,
         const SolveOptions& options, SolveStats& stats)
      : scenario_(scenario), data_(data), mode_(mode), options_(options), stats_(stats) {
    nc_ = data.customers.size();
    nd_ = data.drones.size();
    ns_ = data.depots.size();
    const auto& costs = scenario.costs();
    outsource_units_ = floor_scaled(costs.outsource_cost, kUnits);
    transfer_units_ = floor_scaled(costs.transfer_cost, kUnits);
    for (std::size_t d = 0; d < nd_; ++d) {
      init_units_.push_back(floor_scaled(initial_cost(scenario, data, d), kUnits));
      std::vector<Rational> exact(nc_ + 1);
      std::vector<std::int64_t> cum(nc_ + 1, 0);
      if (mode == PlanMode::stochastic) {
        const auto p = breakdown_prob(scenario, data, d);
        for (std::size_t n = 0; n <= nc_; ++n) {
          auto aux = penalty_auxiliaries(static_cast<unsigned>(n), nc_, p, costs.penalty_cost);
          for (const auto& a : aux.share) exact[n] += a;
        }
        for (std::size_t n = 1; n <= nc_; ++n) {
          cum[n] = cum[n - 1] + floor_scaled(exact[n] - exact[n - 1], kUnits);
        }
      }
      pen_exact_.push_back(std::move(exact));
      pen_cum_.push_back(std::move(cum));
    }
    group_.assign(nd_, 0);
    for (std::size_t d = 0; d < nd_; ++d) {
      group_[d] = static_cast<int>(d);
      for (std::size_t e = 0; e < d; ++e) {
        if (identical(e, d)) {
          group_[d] = group_[e];
          break;
        }
      }
    }
  }

  AssignmentSolution run() {
    best_served_.assign(nc_, std::nullopt);
    best_depot_.assign(nd_, 0);
    for (std::size_t d = 0; d < nd_; ++d) best_depot_[d] = data_.home_slot[d];
    incumbent_ = Rational(static_cast<long>(nc_)) * scenario_.costs().outsource_cost;
    incumbent_ceil_ = ceil_scaled(incumbent_, kUnits);

    if (nc_ > 0 && nd_ > 0) {
      auto configs = enumerate_configs();
      std::stable_sort(configs.begin(), configs.end(), [](const Config& a, const Config& b) {
        return a.simple_bound < b.simple_bound;
      });
      std::vector<Config> open;
      for (auto& config : configs) {
        if (config.simple_bound >= incumbent_ceil_) break;
        root(config);
        if (config.root_bound < incumbent_ceil_) open.push_back(std::move(config));
      }
      std::stable_sort(open.begin(), open.end(), [](const Config& a, const Config& b) {
        return a.root_bound < b.root_bound;
      });
      // Short searches first so the full ones start from a strong incumbent.
      for (std::size_t c = 0; c < open.size() && c < kWarmupConfigs; ++c) {
        if (open[c].root_bound < incumbent_ceil_) search(open[c], kWarmupNodes);
      }
      for (const auto& config : open) {
        if (config.root_bound < incumbent_ceil_) search(config, 0);
      }
    }
    auto sol = complete_solution(scenario_, data_, mode_, best_served_, best_depot_);
    sol.objective = linear_objective(scenario_, data_, sol);
    return sol;
  }

 private:
  bool identical(std::size_t a, std::size_t b) const {
    const auto& x = scenario_.drones()[data_.drones[a]];
    const auto& y = scenario_.drones()[data_.drones[b]];
    return x.capacity == y.capacity && x.trip_range == y.trip_range &&
           x.daily_range == y.daily_range && x.shift_hours == y.shift_hours &&
           x.speed == y.speed && x.breakdown_prob == y.breakdown_prob &&
           x.initial_cost == y.initial_cost;
  }

  bool allowed(std::size_t owner, std::size_t depot, std::uint64_t transfer_set) const {
    return owner == depot || (((transfer_set >> owner) & 1U) && ((transfer_set >> depot) & 1U));
  }

  // Items and fixed cost for one configuration.
  std::int64_t build_items(const Config& config, std::vector<Item>& items) const {
    items.clear();
    std::int64_t base = transfer_units_ * std::popcount(config.transfer_set);
    for (std::size_t d = 0; d < nd_; ++d) {
      if (config.state[d] >= 0) base += init_units_[d];
    }
    for (std::size_t i = 0; i < nc_; ++i) {
      Item item{i, outsource_units_, {}};
      for (std::size_t d = 0; d < nd_; ++d) {
        if (config.state[d] < 0) continue;
        const auto p = static_cast<std::size_t>(config.state[d]);
        if (!allowed(data_.owner_slot[i], p, config.transfer_set) || !data_.can_serve(i, d, p)) {
          continue;
        }
        const std::int64_t cost = 2 * data_.leg_cents[i][p] * kUnitsPerCent;
        if (cost + pen_cum_[d][1] >= outsource_units_) continue;
        item.options.push_back({static_cast<int>(d), cost, data_.round_trip[i][p], data_.trip_time[i][d][p]});
      }
      if (item.options.empty()) {
        base += outsource_units_;
      } else {
        items.push_back(std::move(item));
      }
    }
    return base;
  }

  std::vector<Config> enumerate_configs() {
    std::vector<Config> out;
    std::vector<int> state(nd_, -1);
    std::vector<Item> items;
    while (true) {
      bool symmetric_ok = true;
      for (std::size_t d = 1; d < nd_ && symmetric_ok; ++d) {
        for (std::size_t e = 0; e < d; ++e) {
          if (group_[e] == group_[d] && state[e] > state[d]) {
            symmetric_ok = false;
            break;
          }
        }
      }
      bool any_active = std::any_of(state.begin(), state.end(), [](int s) { return s >= 0; });
      if (symmetric_ok && any_active) {
        std::uint64_t active_depots = 0;
        for (int s : state) {
          if (s >= 0) active_depots |= std::uint64_t{1} << s;
        }
        for (std::uint64_t t = 0; t < (std::uint64_t{1} << ns_); ++t) {
          const int size = std::popcount(t);
          if (size == 1) continue;
          // A transfer needs a receiving depot with a drone.
          if (size > 0 && (t & active_depots) == 0) continue;
          Config config{state, t, 0, 0, {}, {}, {}};
          const auto base = build_items(config, items);
          config.simple_bound = base + relaxed_sum(items);
          out.push_back(std::move(config));
        }
      }
      std::size_t k = 0;
      while (k < nd_ && state[k] == static_cast<int>(ns_) - 1) {
        state[k] = -1;
        ++k;
      }
      if (k == nd_) break;
      ++state[k];
    }
    return out;
  }

  std::int64_t relaxed_sum(const std::vector<Item>& items) const {
    std::int64_t total = 0;
    for (const auto& item : items) {
      std::int64_t best = item.outsource;
      for (const auto& o : item.options) {
        best = std::min(best, o.cost + pen_cum_[o.drone][1]);
      }
      total += best;
    }
    return total;
  }

  // Marginal penalty of the m-th package on drone d (floored units).
  std::int64_t slope(std::size_t d, std::size_t m) const {
    m = std::clamp<std::size_t>(m, 1, std::max<std::size_t>(nc_, 1));
    return pen_cum_[d][m] - pen_cum_[d][m - 1];
  }

  // min over k in [0, room] of the extra penalty for k more packages minus g*k.
  std::int64_t conjugate(std::size_t d, std::size_t served, std::int64_t g, std::size_t room) const {
    std::int64_t best = 0;
    const auto last = std::min(nc_, served + room);
    for (std::size_t n = served + 1; n <= last; ++n) {
      const auto k = static_cast<std::int64_t>(n - served);
      best = std::min(best, pen_cum_[d][n] - pen_cum_[d][served] - g * k);
    }
    return best;
  }

  // Multipliers on each drone's remaining range (u, per micro-km) and shift
  // (v, per micro-hour), and the slope g of the line under its penalty curve.
  struct Multipliers {
    std::vector<std::int64_t> u, v, g;
  };

  // One evaluation of the integer Lagrangian bound on every completion of the
  // first k decisions; records relaxed usage and counts per drone.
  std::int64_t evaluate(std::size_t k, std::int64_t acc, const Multipliers& m) {
    const auto room = items_.size() - k;
    std::int64_t value = acc;
    for (std::size_t d = 0; d < nd_; ++d) {
      use_dist_[d] = 0;
      use_time_[d] = 0;
      relaxed_count_[d] = 0;
      if (!active_[d]) continue;
      value -= m.u[d] * dist_left_[d] + m.v[d] * time_left_[d];
      value += conjugate(d, static_cast<std::size_t>(count_[d]), m.g[d], room);
    }
    for (std::size_t j = k; j < items_.size(); ++j) {
      const auto& item = items_[j];
      std::int64_t pick = item.outsource;
      const Option* who = nullptr;
      for (const auto& o : item.options) {
        const auto d = static_cast<std::size_t>(o.drone);
        if (o.dist > dist_left_[d] || o.time > time_left_[d]) continue;
        const auto c = o.cost + m.g[d] + m.u[d] * o.dist + m.v[d] * o.time;
        if (c < pick) {
          pick = c;
          who = &o;
        }
      }
      value += pick;
      if (who) {
        const auto d = static_cast<std::size_t>(who->drone);
        use_dist_[d] += who->dist;
        use_time_[d] += who->time;
        ++relaxed_count_[d];
      }
    }
    return value;
  }

  // Node bound: a few passes moving g toward the relaxed package counts, with
  // the root's range and shift multipliers held fixed.
  std::int64_t node_bound(std::size_t k, std::int64_t acc, Multipliers& m) {
    std::int64_t best = std::numeric_limits<std::int64_t>::min();
    for (int pass = 0; pass < kNodePasses; ++pass) {
      best = std::max(best, evaluate(k, acc, m));
      if (best >= incumbent_ceil_) break;
      bool moved = false;
      for (std::size_t d = 0; d < nd_; ++d) {
        if (!active_[d]) continue;
        const auto g = slope(d, static_cast<std::size_t>(count_[d]) + std::max<std::size_t>(1, relaxed_count_[d]));
        moved = moved || g != m.g[d];
        m.g[d] = g;
      }
      if (!moved) break;
    }
    return best;
  }

  // Root bound of a configuration: alternate a hill climb over each drone's
  // penalty slope (the bound is concave along it) with subgradient steps on
  // the range and shift multipliers.
  std::int64_t root_bound(std::int64_t base, Multipliers& m, std::vector<std::size_t>& target) {
    target.assign(nd_, 1);
    for (std::size_t d = 0; d < nd_; ++d) m.g[d] = active_[d] ? slope(d, 1) : 0;
    std::int64_t best = evaluate(0, base, m);
    for (std::size_t d = 0; d < nd_; ++d) target[d] = std::max<std::size_t>(1, relaxed_count_[d]);
    for (int round = 0; round < 4 && best < incumbent_ceil_; ++round) {
      const auto before = best;
      for (std::size_t d = 0; d < nd_ && best < incumbent_ceil_; ++d) {
        if (!active_[d]) continue;
        auto at = [&](std::size_t t) {
          m.g[d] = slope(d, t);
          return evaluate(0, base, m);
        };
        auto here = at(target[d]);
        best = std::max(best, here);
        for (int dir : {+1, -1}) {
          while (true) {
            const auto next = static_cast<std::size_t>(static_cast<long>(target[d]) + dir);
            if (next < 1 || next > nc_) break;
            const auto value = at(next);
            if (value <= here) break;
            here = value;
            target[d] = next;
          }
        }
        m.g[d] = slope(d, target[d]);
        best = std::max(best, here);
      }
      // Range and shift multipliers, normalized to fractions of each limit.
      double theta = 2.0;
      int stall = 0;
      Multipliers trial = m;
      for (int pass = 0; pass < kRootPasses && best < incumbent_ceil_ && theta > 1e-3; ++pass) {
        const auto value = evaluate(0, base, trial);
        if (value > best) {
          best = value;
          m = trial;
          stall = 0;
        } else if (++stall >= 3) {
          theta *= 0.5;
          stall = 0;
        }
        double norm = 0.0;
        for (std::size_t d = 0; d < nd_; ++d) {
          if (!active_[d]) continue;
          sd_[d] = static_cast<double>(use_dist_[d] - dist_left_[d]) / static_cast<double>(data_.day_limit[d]);
          st_[d] = static_cast<double>(use_time_[d] - time_left_[d]) / static_cast<double>(data_.shift_limit[d]);
          if (trial.u[d] > 0 || sd_[d] > 0) norm += sd_[d] * sd_[d];
          if (trial.v[d] > 0 || st_[d] > 0) norm += st_[d] * st_[d];
        }
        if (norm == 0.0) break;
        const double step = theta * static_cast<double>(incumbent_ceil_ - value) / norm;
        for (std::size_t d = 0; d < nd_; ++d) {
          if (!active_[d]) continue;
          auto shift = [&](std::int64_t now, double sub, std::int64_t limit) {
            const double scaled = static_cast<double>(now) * static_cast<double>(limit) + step * sub;
            const double next = std::floor(std::max(0.0, scaled) / static_cast<double>(limit));
            return static_cast<std::int64_t>(std::min(next, static_cast<double>(kMultiplierCap)));
          };
          trial.u[d] = shift(trial.u[d], sd_[d], data_.day_limit[d]);
          trial.v[d] = shift(trial.v[d], st_[d], data_.shift_limit[d]);
        }
      }
      if (best <= before) break;
    }
    return best;
  }

  // Builds the items of one configuration in branching order (highest regret
  // first) and resets the search state; returns the fixed cost.
  std::int64_t load(const Config& config) {
    config_ = &config;
    const auto base = build_items(config, items_);
    active_.assign(nd_, false);
    for (std::size_t d = 0; d < nd_; ++d) active_[d] = config.state[d] >= 0;
    std::vector<std::int64_t> regret(items_.size());
    for (std::size_t k = 0; k < items_.size(); ++k) {
      std::int64_t best = items_[k].outsource;
      for (const auto& o : items_[k].options) best = std::min(best, o.cost + pen_cum_[o.drone][1]);
      regret[k] = items_[k].outsource - best;
    }
    std::vector<std::size_t> order(items_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return regret[a] > regret[b]; });
    std::vector<Item> sorted;
    for (auto k : order) sorted.push_back(std::move(items_[k]));
    items_ = std::move(sorted);

    count_.assign(nd_, 0);
    dist_left_ = data_.day_limit;
    time_left_ = data_.shift_limit;
    choice_.assign(items_.size(), -1);
    use_dist_.assign(nd_, 0);
    use_time_.assign(nd_, 0);
    relaxed_count_.assign(nd_, 0);
    sd_.assign(nd_, 0.0);
    st_.assign(nd_, 0.0);
    return base;
  }

  void root(Config& config) {
    const auto base = load(config);
    Multipliers m{std::vector<std::int64_t>(nd_, 0), std::vector<std::int64_t>(nd_, 0),
                  std::vector<std::int64_t>(nd_, 0)};
    config.root_bound = root_bound(base, m, config.target);
    config.u = m.u;
    config.v = m.v;
  }

  void search(const Config& config, std::uint64_t budget) {
    ++stats_.configurations;
    const auto base = load(config);
    stack_.assign(items_.size() + 1, Multipliers{config.u, config.v, std::vector<std::int64_t>(nd_, 0)});
    budget_ = budget;
    spent_ = 0;
    dfs(0, base);
  }

  void dfs(std::size_t k, std::int64_t acc) {
    ++stats_.nodes;
    if (options_.max_nodes != 0 && stats_.nodes > options_.max_nodes) {
      throw SolverError("node limit exceeded");
    }
    if (budget_ != 0 && ++spent_ > budget_) return;
    if (k == items_.size()) {
      leaf();
      return;
    }
    auto& m = stack_[k];
    for (std::size_t d = 0; d < nd_; ++d) {
      m.g[d] = active_[d] ? slope(d, std::max<std::size_t>(count_[d] + 1, config_->target[d])) : 0;
    }
    if (node_bound(k, acc, m) >= incumbent_ceil_) return;

    struct Branch {
      std::int64_t key;
      int drone;
      const Option* option;
    };
    std::vector<Branch> branches;
    const auto& item = items_[k];
    branches.push_back({item.outsource, -1, nullptr});
    for (const auto& o : item.options) {
      const auto d = static_cast<std::size_t>(o.drone);
      if (o.dist > dist_left_[d] || o.time > time_left_[d]) continue;
      if (count_[d] == 0 && !first_empty_in_group(d)) continue;
      const auto inc = pen_cum_[d][count_[d] + 1] - pen_cum_[d][count_[d]];
      branches.push_back({o.cost + inc, o.drone, &o});
    }
    std::stable_sort(branches.begin(), branches.end(),
                     [](const Branch& a, const Branch& b) { return a.key < b.key; });
    for (const auto& b : branches) {
      choice_[k] = b.drone;
      if (b.drone < 0) {
        dfs(k + 1, acc + item.outsource);
        continue;
      }
      const auto d = static_cast<std::size_t>(b.drone);
      dist_left_[d] -= b.option->dist;
      time_left_[d] -= b.option->time;
      ++count_[d];
      dfs(k + 1, acc + b.key);
      --count_[d];
      dist_left_[d] += b.option->dist;
      time_left_[d] += b.option->time;
    }
    choice_[k] = -1;
  }

  bool first_empty_in_group(std::size_t d) const {
    for (std::size_t e = 0; e < d; ++e) {
      if (group_[e] == group_[d] && config_->state[e] == config_->state[d] && count_[e] == 0) {
        return false;
      }
    }
    return true;
  }

  void leaf() {
    std::vector<std::optional<std::size_t>> served(nc_);
    for (std::size_t k = 0; k < items_.size(); ++k) {
      if (choice_[k] >= 0) served[items_[k].customer] = static_cast<std::size_t>(choice_[k]);
    }
    std::vector<std::size_t> depot(nd_, 0);
    for (std::size_t d = 0; d < nd_; ++d) {
      depot[d] = config_->state[d] >= 0 ? static_cast<std::size_t>(config_->state[d])
                                        : data_.home_slot[d];
    }
    const auto& costs = scenario_.costs();
    Rational total;
    std::vector<bool> touched(ns_, false);
    for (std::size_t i = 0; i < nc_; ++i) {
      if (!served[i]) {
        total += costs.outsource_cost;
        continue;
      }
      const auto p = depot[*served[i]];
      total += 2 * data_.leg[i][p];
      if (p != data_.owner_slot[i]) {
        touched[p] = true;
        touched[data_.owner_slot[i]] = true;
      }
    }
    for (bool t : touched) {
      if (t) total += costs.transfer_cost;
    }
    for (std::size_t d = 0; d < nd_; ++d) {
      if (count_[d] > 0) {
        total += initial_cost(scenario_, data_, d);
        total += pen_exact_[d][count_[d]];
      }
    }
    if (total < incumbent_) {
      incumbent_ = total;
      incumbent_ceil_ = ceil_scaled(incumbent_, kUnits);
      best_served_ = std::move(served);
      best_depot_ = std::move(depot);
    }
  }

  const DeliveryScenario& scenario_;
  const CoalitionData& data_;
  PlanMode mode_;
  const SolveOptions& options_;
  SolveStats& stats_;
  std::size_t nc_ = 0, nd_ = 0, ns_ = 0;
  std::int64_t outsource_units_ = 0, transfer_units_ = 0;
  std::vector<std::int64_t> init_units_;
  std::vector<std::vector<Rational>> pen_exact_;
  std::vector<std::vector<std::int64_t>> pen_cum_;
  std::vector<int> group_;

  Rational incumbent_;
  std::int64_t incumbent_ceil_ = 0;
  std::vector<std::optional<std::size_t>> best_served_;
  std::vector<std::size_t> best_depot_;

  // Per-configuration search state.
  const Config* config_ = nullptr;
  std::vector<Item> items_;
  std::vector<bool> active_;
  std::vector<Multipliers> stack_;
  std::vector<std::int64_t> use_dist_, use_time_;
  std::vector<std::size_t> relaxed_count_;
  std::uint64_t budget_ = 0, spent_ = 0;
  std::vector<double> sd_, st_;
  std::vector<int> count_;
  std::vector<std::int64_t> dist_left_, time_left_;
  std::vector<int> choice_;
};

}  // namespace

AssignmentSolution solve_assignment(const DeliveryScenario& scenario, Coalition coalition,
                                    PlanMode mode, const SolveOptions& options, SolveStats* stats) {
  const auto data = make_coalition_data(scenario, coalition);
  if (data.depots.size() >= 63) {
    throw SolverError("too many shippers in one coalition");
  }
  SolveStats local;
  Solver solver(scenario, data, mode, options, stats ? *stats : local);
  return solver.run();
}

// ---------------------------------------------------------------------------
// Brute-force oracle

AssignmentSolution brute_force_assignment(const DeliveryScenario& scenario, Coalition coalition,
                                          PlanMode mode) {
  const auto data = make_coalition_data(scenario, coalition);
  const auto nc = data.customers.size();
  const auto nd = data.drones.size();
  const auto ns = data.depots.size();
  if (nc > 8 || nd > 3) {
    throw SolverError("oracle size exceeded");
  }
  const auto& costs = scenario.costs();
  std::vector<std::vector<Rational>> penalty(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t n = 0; n <= nc; ++n) {
      penalty[d].push_back(mode == PlanMode::stochastic
                               ? quadratic_penalty(static_cast<unsigned>(n),
                                                   breakdown_prob(scenario, data, d),
                                                   costs.penalty_cost)
                               : Rational(0));
    }
  }

  std::optional<Rational> best;
  std::vector<std::optional<std::size_t>> best_served(nc);
  std::vector<std::size_t> best_depot(data.home_slot);

  std::vector<std::size_t> depot(nd, 0);
  std::vector<std::size_t> pick(nc, 0);  // 0 = outsource, d+1 = drone d
  std::vector<std::int64_t> dist(nd), time(nd);
  std::vector<unsigned> count(nd);
  while (true) {
    std::fill(pick.begin(), pick.end(), 0);
    while (true) {
      bool feasible = true;
      std::fill(dist.begin(), dist.end(), 0);
      std::fill(time.begin(), time.end(), 0);
      std::fill(count.begin(), count.end(), 0U);
      Rational total;
      std::vector<bool> touched(ns, false);
      for (std::size_t i = 0; i < nc && feasible; ++i) {
        if (pick[i] == 0) {
          total += costs.outsource_cost;
          continue;
        }
        const auto d = pick[i] - 1;
        const auto p = depot[d];
        dist[d] += data.round_trip[i][p];
        time[d] += data.trip_time[i][d][p];
        ++count[d];
        feasible = data.weight[i] <= data.capacity[d] && data.round_trip[i][p] <= data.trip_limit[d] &&
                   dist[d] <= data.day_limit[d] && time[d] <= data.shift_limit[d];
        total += data.leg[i][p] + data.leg[i][p];
        if (p != data.owner_slot[i]) {
          touched[p] = true;
          touched[data.owner_slot[i]] = true;
        }
      }
      if (feasible) {
        for (std::size_t p = 0; p < ns; ++p) {
          if (touched[p]) total += costs.transfer_cost;
        }
        for (std::size_t d = 0; d < nd; ++d) {
          if (count[d] > 0) total += initial_cost(scenario, data, d) + penalty[d][count[d]];
        }
        if (!best || total < *best) {
          best = total;
          for (std::size_t i = 0; i < nc; ++i) {
            best_served[i] = pick[i] == 0 ? std::nullopt : std::optional<std::size_t>(pick[i] - 1);
          }
          best_depot = depot;
        }
      }
      std::size_t k = 0;
      while (k < nc && pick[k] == nd) {
        pick[k] = 0;
        ++k;
      }
      if (k == nc) break;
      ++pick[k];
    }
    std::size_t k = 0;
    while (k < nd && depot[k] == ns - 1) {
      depot[k] = 0;
      ++k;
    }
    if (k == nd) break;
    ++depot[k];
  }
  auto sol = complete_solution(scenario, data, mode, best_served, best_depot);
  sol.objective = best.value_or(Rational(0));
  return sol;
}

// ---------------------------------------------------------------------------
// Evaluation

ObjectiveBreakdown evaluate_objective(const DeliveryScenario& scenario, Coalition coalition,
                                      const AssignmentSolution& sol, PlanMode mode) {
  const auto data = make_coalition_data(scenario, coalition);
  if (sol.customers != data.customers || sol.drones != data.drones || sol.depots != data.depots ||
      sol.served_by.size() != data.customers.size() || sol.use_drone.size() != data.drones.size() ||
      sol.drone_depot.size() != data.drones.size() ||
      sol.served_count.size() != data.drones.size() ||
      sol.transfer.size() != data.customers.size() ||
      sol.transfers_active.size() != data.depots.size()) {
    throw std::domain_error("solution does not match the coalition");
  }
  const auto program = build_program(scenario, coalition, sol.mode);
  const auto violations = program.check(program_values(program, scenario, sol));
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw std::domain_error("constraint violated: " + v.role + " [" + v.label + "] " + v.detail);
  }

  const auto& costs = scenario.costs();
  ObjectiveBreakdown out;
  for (std::size_t d = 0; d < data.drones.size(); ++d) {
    if (sol.use_drone[d]) out.initial += initial_cost(scenario, data, d);
    if (mode == PlanMode::stochastic) {
      out.expected_penalty += quadratic_penalty(static_cast<unsigned>(sol.served_count[d]),
                                                breakdown_prob(scenario, data, d),
                                                costs.penalty_cost);
    }
  }
  for (std::size_t i = 0; i < data.customers.size(); ++i) {
    if (const auto& by = sol.served_by[i]) {
      const auto p = sol.drone_depot[*by];
      out.routing += data.leg[i][p] + data.leg[i][p];
    } else {
      out.outsource += costs.outsource_cost;
    }
  }
  for (bool t : sol.transfers_active) {
    if (t) out.transfer += costs.transfer_cost;
  }
  return out;
}

std::vector<std::vector<int>> transfer_counts(const AssignmentSolution& sol,
                                              std::size_t shipper_count) {
  std::vector<std::vector<int>> theta(shipper_count, std::vector<int>(shipper_count, 0));
  for (const auto& t : sol.transfer) {
    if (t) ++theta[sol.depots[t->first]][sol.depots[t->second]];
  }
  return theta;
}

}  // namespace droneplan
