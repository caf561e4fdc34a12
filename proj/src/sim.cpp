#include "droneplan/sim.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace droneplan {

Philox4x32::Counter Philox4x32::block(Counter c, Key k) {
  constexpr std::uint32_t m0 = 0xD2511F53, m1 = 0xCD9E8D57;
  constexpr std::uint32_t w0 = 0x9E3779B9, w1 = 0xBB67AE85;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += w0;
      k[1] += w1;
    }
    const std::uint64_t p0 = std::uint64_t{m0} * c[0];
    const std::uint64_t p1 = std::uint64_t{m1} * c[2];
    c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
  }
  return c;
}

std::uint32_t stream_id(std::string_view kind, std::string_view id) {
  std::uint32_t h = 2166136261U;
  auto mix = [&h](std::string_view text) {
    for (unsigned char ch : text) {
      h ^= ch;
      h *= 16777619U;
    }
  };
  mix(kind);
  mix(":");
  mix(id);
  return h;
}

double uniform01(std::uint64_t seed, std::uint64_t run, std::uint32_t stream, std::uint32_t draw) {
  const auto out = Philox4x32::block(
      {static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32), stream, draw},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const std::uint64_t bits = (std::uint64_t{out[0]} << 32 | out[1]) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

Rational planned_fixed_cost(const DeliveryScenario& scenario, const AssignmentSolution& sol) {
  const auto b = evaluate_objective(scenario, sol.coalition, sol, PlanMode::deterministic);
  return b.total();
}

Plan make_plan(CharacteristicCache& cache, const CoalitionStructure& structure) {
  const auto& scenario = cache.scenario();
  if (!is_partition(structure, scenario.shippers().size())) {
    throw std::invalid_argument("structure does not partition the shippers");
  }
  Plan plan;
  plan.mode = cache.mode();
  plan.structure = structure;
  for (auto block : structure.blocks) {
    plan.solutions.push_back(*cache.solution(block));
    plan.planned_shares.push_back(shapley_of(block, [&](Coalition c) {
      return planned_fixed_cost(scenario, *cache.solution(c));
    }));
  }
  return plan;
}

namespace {

// Precomputed per-package data for one block's solution.
struct Package {
  std::string customer;
  std::string owner_id;
  std::size_t owner = 0;      // scenario shipper index
  std::size_t receiver = 0;   // shipper whose depot launches the drone
  bool transferred = false;
  double trip = 0.0;          // round-trip routing cost
  std::uint32_t drop_stream = 0;
};

struct DroneRoute {
  std::string drone;
  double breakdown = 0.0;
  bool never = false;   // probability exactly 0
  bool always = false;  // probability exactly 1
  std::uint32_t stream = 0;
  std::vector<Package> packages;
};

struct BlockModel {
  std::vector<DroneRoute> routes;
  std::vector<std::pair<std::size_t, double>> outsourced;  // owner, cost
  std::vector<std::string> outsourced_ids;
  std::vector<std::string> outsourced_owners;
  double fixed_other = 0.0;  // initial + transfer + outsourcing
  std::vector<std::pair<std::size_t, double>> share;         // shipper, planned share
  std::vector<std::pair<std::size_t, double>> planned_trips; // shipper, planned routing of its packages
};

struct RunResult {
  std::vector<double> shipper;
  std::vector<double> block;
  double penalty = 0.0;
  double breakdown_penalty = 0.0;
  std::uint64_t assigned = 0;
  std::uint64_t delivered = 0;
  std::vector<std::pair<std::size_t, std::size_t>> sent;       // (owner, receiver) per transfer
  std::vector<std::pair<std::size_t, std::size_t>> sent_ok;
  std::vector<SimEvent> events;
};

BlockModel build_block(const DeliveryScenario& s, const AssignmentSolution& sol,
                       const CostAllocation& share) {
  BlockModel m;
  const auto& k = s.costs();
  const double c_out = to_double(k.outsource_cost);
  for (std::size_t d = 0; d < sol.drones.size(); ++d) {
    if (!sol.use_drone[d]) continue;
    const auto& drone = s.drones()[sol.drones[d]];
    DroneRoute route;
    route.drone = drone.id;
    route.breakdown = to_double(drone.breakdown_prob);
    route.never = drone.breakdown_prob == 0;
    route.always = drone.breakdown_prob == 1;
    route.stream = stream_id("drone", drone.id);
    m.fixed_other += to_double(drone.initial_cost);
    const auto depot = sol.depots[sol.drone_depot[d]];
    for (std::size_t i = 0; i < sol.customers.size(); ++i) {
      if (sol.served_by[i] != d) continue;
      const auto& c = s.customers()[sol.customers[i]];
      Package pkg;
      pkg.customer = c.id;
      pkg.owner = s.owner_index(sol.customers[i]);
      pkg.owner_id = c.owner;
      pkg.receiver = depot;
      pkg.transferred = depot != pkg.owner;
      pkg.trip = to_double(2 * leg_cost(k, s.shippers()[depot].depot, c.location));
      pkg.drop_stream = stream_id("package", c.id);
      route.packages.push_back(pkg);
    }
    m.routes.push_back(std::move(route));
  }
  for (std::size_t i = 0; i < sol.customers.size(); ++i) {
    if (!sol.outsourced(i)) continue;
    m.outsourced.emplace_back(s.owner_index(sol.customers[i]), c_out);
    m.outsourced_ids.push_back(s.customers()[sol.customers[i]].id);
    m.outsourced_owners.push_back(s.customers()[sol.customers[i]].owner);
    m.fixed_other += c_out;
  }
  for (std::size_t p = 0; p < sol.depots.size(); ++p) {
    if (sol.transfers_active[p]) m.fixed_other += to_double(k.transfer_cost);
  }
  for (const auto& [p, v] : share.shares) {
    m.share.emplace_back(p, to_double(v));
    double planned = 0.0;
    for (const auto& r : m.routes) {
      for (const auto& pkg : r.packages) planned += pkg.owner == p ? pkg.trip : 0.0;
    }
    m.planned_trips.emplace_back(p, planned);
  }
  return m;
}

RunResult run_once(const std::vector<BlockModel>& blocks, std::size_t shippers,
                   const std::vector<double>& misbehavior, double c_pen, std::uint64_t seed,
                   std::uint64_t run, bool keep_events) {
  RunResult r;
  r.shipper.assign(shippers, 0.0);
  r.block.assign(blocks.size(), 0.0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& m = blocks[b];
    double total = m.fixed_other;
    for (const auto& [p, v] : m.share) r.shipper[p] += v;
    for (const auto& [p, v] : m.planned_trips) r.shipper[p] -= v;
    auto charge = [&](std::size_t owner, double amount) {
      r.shipper[owner] += amount;
      total += amount;
    };
    for (const auto& route : m.routes) {
      bool broken = false;
      std::uint32_t attempt = 0;
      for (const auto& pkg : route.packages) {
        r.assigned += 1;
        if (pkg.transferred) r.sent.emplace_back(pkg.owner, pkg.receiver);
        if (broken) {
          charge(pkg.owner, c_pen);
          r.penalty += c_pen;
          r.breakdown_penalty += c_pen;
          if (keep_events) r.events.push_back({run, "strand", pkg.customer, pkg.owner_id, route.drone, c_pen});
          continue;
        }
        if (pkg.transferred && misbehavior[pkg.receiver] > 0.0 &&
            uniform01(seed, run, pkg.drop_stream, 0) < misbehavior[pkg.receiver]) {
          charge(pkg.owner, c_pen);
          r.penalty += c_pen;
          if (keep_events) r.events.push_back({run, "drop", pkg.customer, pkg.owner_id, {}, c_pen});
          continue;
        }
        ++attempt;
        // The drone flies out on every attempt, so the trip is charged either way.
        charge(pkg.owner, pkg.trip);
        const bool breaks = route.always ||
                            (!route.never && uniform01(seed, run, route.stream, attempt) < route.breakdown);
        if (breaks) {
          broken = true;
          charge(pkg.owner, c_pen);
          r.penalty += c_pen;
          r.breakdown_penalty += c_pen;
          if (keep_events) r.events.push_back({run, "breakdown", pkg.customer, pkg.owner_id, route.drone, pkg.trip + c_pen});
          continue;
        }
        r.delivered += 1;
        if (pkg.transferred) r.sent_ok.emplace_back(pkg.owner, pkg.receiver);
        if (keep_events) r.events.push_back({run, "deliver", pkg.customer, pkg.owner_id, route.drone, pkg.trip});
      }
    }
    for (std::size_t k = 0; k < m.outsourced.size(); ++k) {
      if (keep_events) r.events.push_back({run, "outsource", m.outsourced_ids[k], m.outsourced_owners[k], {}, m.outsourced[k].second});
    }
    r.block[b] = total;
  }
  return r;
}

}  // namespace

SimReport simulate_plan(const DeliveryScenario& scenario, const Plan& plan, const SimConfig& config) {
  const auto n = scenario.shippers().size();
  if (!is_partition(plan.structure, n) || plan.solutions.size() != plan.structure.blocks.size() ||
      plan.planned_shares.size() != plan.structure.blocks.size()) {
    throw std::invalid_argument("plan does not match the scenario's shippers");
  }
  for (std::size_t b = 0; b < plan.solutions.size(); ++b) {
    if (plan.solutions[b].coalition != plan.structure.blocks[b]) {
      throw std::invalid_argument("plan solution does not match its structure block");
    }
  }
  if (config.runs == 0) throw std::invalid_argument("runs must be at least 1");
  std::vector<double> misbehavior(n, 0.0);
  if (!config.misbehavior.empty()) {
    if (config.misbehavior.size() != n) throw std::invalid_argument("misbehavior size mismatch");
    for (std::size_t p = 0; p < n; ++p) {
      if (config.misbehavior[p] < 0 || config.misbehavior[p] > 1) {
        throw std::invalid_argument("misbehavior probability must lie in [0, 1]");
      }
      misbehavior[p] = to_double(config.misbehavior[p]);
    }
  }

  std::vector<BlockModel> blocks;
  for (std::size_t b = 0; b < plan.solutions.size(); ++b) {
    blocks.push_back(build_block(scenario, plan.solutions[b], plan.planned_shares[b]));
  }
  const double c_pen = to_double(scenario.costs().penalty_cost);

  std::vector<RunResult> results(config.runs);
  auto work = [&](std::uint64_t from, std::uint64_t to) {
    for (auto k = from; k < to; ++k) {
      results[k] = run_once(blocks, n, misbehavior, c_pen, config.seed, config.first_run + k,
                            config.keep_events);
    }
  };
  const auto jobs = std::max<std::uint64_t>(1, std::min<std::uint64_t>(config.jobs, config.runs));
  if (jobs == 1) {
    work(0, config.runs);
  } else {
    std::vector<std::thread> pool;
    for (std::uint64_t t = 0; t < jobs; ++t) {
      pool.emplace_back(work, config.runs * t / jobs, config.runs * (t + 1) / jobs);
    }
    for (auto& th : pool) th.join();
  }

  // Fixed-order reduction keeps results independent of the thread count.
  SimReport rep;
  rep.runs = config.runs;
  rep.shipper_mean.assign(n, 0.0);
  rep.shipper_stderr.assign(n, 0.0);
  rep.block_mean.assign(blocks.size(), 0.0);
  rep.theta.assign(n, std::vector<std::uint64_t>(n, 0));
  rep.theta_ok = rep.theta;
  std::vector<double> sq(n, 0.0);
  double total_sq = 0.0;
  for (const auto& r : results) {
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      rep.shipper_mean[p] += r.shipper[p];
      sq[p] += r.shipper[p] * r.shipper[p];
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      rep.block_mean[b] += r.block[b];
      total += r.block[b];
    }
    rep.total_mean += total;
    total_sq += total * total;
    rep.penalty_mean += r.penalty;
    rep.breakdown_penalty_mean += r.breakdown_penalty;
    rep.assigned += r.assigned;
    rep.delivered += r.delivered;
    for (const auto& [p, q] : r.sent) rep.theta[p][q] += 1;
    for (const auto& [p, q] : r.sent_ok) rep.theta_ok[p][q] += 1;
    if (config.keep_events) rep.events.insert(rep.events.end(), r.events.begin(), r.events.end());
  }
  const double runs = static_cast<double>(config.runs);
  auto finish = [runs](double& mean, double sum_sq) {
    mean /= runs;
    if (runs < 2) return 0.0;
    const double var = std::max(0.0, (sum_sq - runs * mean * mean) / (runs - 1));
    return std::sqrt(var / runs);
  };
  for (std::size_t p = 0; p < n; ++p) rep.shipper_stderr[p] = finish(rep.shipper_mean[p], sq[p]);
  for (auto& v : rep.block_mean) v /= runs;
  rep.total_stderr = finish(rep.total_mean, total_sq);
  rep.penalty_mean /= runs;
  rep.breakdown_penalty_mean /= runs;
  return rep;
}

std::vector<FrameworkResult> compare_frameworks(const DeliveryScenario& scenario,
                                                const BeliefMatrix& beliefs,
                                                const SimConfig& config,
                                                SolveOptions solve_options) {
  const auto n = scenario.shippers().size();
  CharacteristicCache det(scenario, PlanMode::deterministic, solve_options);
  CharacteristicCache sto(scenario, PlanMode::stochastic, solve_options);
  const BeliefMatrix trust(n, 1);
  std::vector<FrameworkResult> out;
  auto add = [&](std::string name, CharacteristicCache& cache, const CoalitionStructure& structure) {
    auto plan = make_plan(cache, structure);
    out.push_back({std::move(name), structure, simulate_plan(scenario, plan, config)});
  };
  const auto alone = CoalitionStructure::singletons(n);
  add("DDD", det, alone);
  add("SDD", sto, alone);
  {
    PayoffModel payoffs(det, trust, config.jobs);
    add("CoDDD", det, merge_split(payoffs).structure);
  }
  {
    PayoffModel payoffs(sto, trust, config.jobs);
    add("CoSDD", sto, merge_split(payoffs).structure);
  }
  {
    PayoffModel payoffs(sto, beliefs, config.jobs);
    add("BCoSDD", sto, merge_split(payoffs).structure);
  }
  return out;
}

}  // namespace droneplan
