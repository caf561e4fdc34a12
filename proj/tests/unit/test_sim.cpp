#include <cmath>

#include "../common/scenario_kit.hpp"
#include "doctest.h"
#include "droneplan/sim.hpp"

using namespace droneplan;
using testkit::Builder;

namespace {

// One shipper, three customers in reach, one drone.
DeliveryScenario three_drops(const char* breakdown) {
  return Builder()
      .shipper("p1", 0, 0)
      .customer("c1", "p1", 1, 0)
      .customer("c2", "p1", 2, 0)
      .customer("c3", "p1", 0, 3)
      .drone("d1", "p1", breakdown)
      .build();
}

}  // namespace

TEST_CASE("philox known answers") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  const double u = uniform01(1, 2, 3, 4);
  CHECK(u >= 0.0);
  CHECK(u < 1.0);
  CHECK(u == uniform01(1, 2, 3, 4));
  CHECK(u != uniform01(1, 2, 3, 5));
}

TEST_CASE("reliable drones realize the planned cost") {
  const auto s = three_drops("0");
  CharacteristicCache cache(s, PlanMode::deterministic);
  auto plan = make_plan(cache, CoalitionStructure::singletons(1));
  SimConfig cfg;
  cfg.runs = 50;
  auto rep = simulate_plan(s, plan, cfg);
  CHECK(rep.total_mean == doctest::Approx(to_double(plan.solutions[0].objective)));
  CHECK(rep.total_stderr == doctest::Approx(0.0));
  CHECK(rep.penalty_mean == 0.0);
  CHECK(rep.delivered == rep.assigned);
}

TEST_CASE("a certain breakdown strands every package") {
  const auto s = three_drops("1");
  CharacteristicCache cache(s, PlanMode::deterministic);
  auto plan = make_plan(cache, CoalitionStructure::singletons(1));
  REQUIRE(plan.solutions[0].served_count[0] == 3);
  SimConfig cfg;
  cfg.runs = 20;
  auto rep = simulate_plan(s, plan, cfg);
  CHECK(rep.breakdown_penalty_mean == doctest::Approx(48.0));
  CHECK(rep.delivered == 0);
}

TEST_CASE("monte carlo penalty matches the closed form") {
  const auto s = three_drops("0.1");
  CharacteristicCache cache(s, PlanMode::deterministic);
  auto plan = make_plan(cache, CoalitionStructure::singletons(1));
  REQUIRE(plan.solutions[0].served_count[0] == 3);
  SimConfig cfg;
  cfg.runs = 100000;
  cfg.seed = 42;
  auto rep = simulate_plan(s, plan, cfg);
  const double expected = to_double(expected_penalty(3, parse_decimal("0.1"), 16));
  CHECK(expected == doctest::Approx(8.976));
  CHECK(std::abs(rep.breakdown_penalty_mean - expected) / expected < 0.02);
}

TEST_CASE("simulation is seeded and thread-count independent") {
  const auto s = Builder()
                     .shipper("p1", 0, 0)
                     .shipper("p2", 4, 0)
                     .customer("c1", "p1", 1, 0)
                     .customer("c2", "p2", 3.5, 0)
                     .customer("c3", "p2", 5, 0)
                     .drone("d1", "p1", "0.2")
                     .cost("1", "0.5", "16", "16")
                     .build();
  CharacteristicCache cache(s, PlanMode::stochastic);
  auto plan = make_plan(cache, CoalitionStructure::from_blocks({Coalition::all(2)}));
  SimConfig cfg;
  cfg.runs = 2000;
  cfg.seed = 9;
  cfg.misbehavior = {parse_decimal("0.3"), parse_decimal("0.3")};
  auto a = simulate_plan(s, plan, cfg);
  cfg.jobs = 3;
  auto b = simulate_plan(s, plan, cfg);
  CHECK(a.shipper_mean == b.shipper_mean);
  CHECK(a.total_mean == b.total_mean);
  CHECK(a.theta == b.theta);
  cfg.seed = 10;
  auto c = simulate_plan(s, plan, cfg);
  CHECK(a.total_mean != c.total_mean);

  // Per-shipper attribution reconciles with the coalition total.
  CHECK(a.shipper_mean[0] + a.shipper_mean[1] == doctest::Approx(a.total_mean));
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t q = 0; q < 2; ++q) CHECK(a.theta_ok[p][q] <= a.theta[p][q]);
  }
}

TEST_CASE("event log reconciles with the run total") {
  const auto s = three_drops("0.3");
  CharacteristicCache cache(s, PlanMode::deterministic);
  auto plan = make_plan(cache, CoalitionStructure::singletons(1));
  SimConfig cfg;
  cfg.runs = 1;
  cfg.seed = 5;
  cfg.keep_events = true;
  auto rep = simulate_plan(s, plan, cfg);
  double total = to_double(s.drones()[0].initial_cost);
  for (const auto& e : rep.events) total += e.cost;
  CHECK(total == doctest::Approx(rep.total_mean));
}

TEST_CASE("plan and structure must agree") {
  const auto s = three_drops("0");
  CharacteristicCache cache(s, PlanMode::deterministic);
  auto plan = make_plan(cache, CoalitionStructure::singletons(1));
  plan.solutions.clear();
  CHECK_THROWS_AS(simulate_plan(s, plan, SimConfig{}), std::invalid_argument);
}
