#include <random>

#include "../common/scenario_kit.hpp"
#include "doctest.h"
#include "droneplan/assignment.hpp"

using namespace droneplan;
using testkit::Builder;

namespace {

Rational R(const char* text) { return parse_decimal(text); }

// Independent oracle: walk the breakdown tree leaf by leaf.
Rational tree_penalty(unsigned n, const Rational& p, const Rational& c) {
  Rational total;
  Rational reach = 1;  // probability the drone reaches attempt j intact
  for (unsigned j = 1; j <= n; ++j) {
    const Rational leaf = reach * p;  // breaks before delivery j
    total += leaf * c * Rational(static_cast<long>(n - j + 1));
    reach *= 1 - p;
  }
  return total;  // the all-delivered leaf pays nothing
}

DeliveryScenario one_customer(double x, std::string breakdown = "0") {
  return Builder()
      .shipper("p1", 0, 0)
      .customer("c1", "p1", x, 0)
      .drone("d1", "p1", std::move(breakdown))
      .build();
}

}  // namespace

TEST_CASE("expected penalty closed form") {
  CHECK(expected_penalty(0, R("0.1"), R("16")) == 0);
  CHECK(expected_penalty(1, R("0.1"), R("16")) == R("1.6"));
  CHECK(expected_penalty(2, R("0.5"), R("16")) == 20);
  CHECK(expected_penalty(7, R("0"), R("16")) == 0);
  CHECK(expected_penalty(4, R("1"), R("16")) == 64);
  for (unsigned n = 0; n <= 9; ++n) {
    for (const char* p : {"0", "0.05", "0.1", "0.25", "0.5", "1"}) {
      CHECK(expected_penalty(n, R(p), R("16")) == tree_penalty(n, R(p), R("16")));
    }
  }
  // Three sequential deliveries at 10% breakdown: 1.6*3 + 1.44*2 + 1.296*1.
  CHECK(expected_penalty(3, R("0.1"), R("16")) == R("8.976"));
}

TEST_CASE("penalty auxiliaries sum to the expected penalty") {
  for (unsigned n = 0; n <= 6; ++n) {
    auto aux = penalty_auxiliaries(n, 6, R("0.2"), R("16"));
    Rational sum;
    int prefix = 0;
    for (std::size_t k = 0; k < 6; ++k) {
      sum += aux.share[k];
      prefix += aux.prefix[k];
    }
    CHECK(sum == expected_penalty(n, R("0.2"), R("16")));
    CHECK(prefix == static_cast<int>(n));
  }
}

TEST_CASE("program variable counts") {
  auto s = one_customer(1);
  auto lp = build_program(s, Coalition::single(0), PlanMode::stochastic);
  for (const char* f : {"W", "Y", "Z", "T", "M", "B", "N"}) {
    CHECK(lp.count(f) == 1);
  }
  auto two = Builder()
                 .shipper("p1", 0, 0)
                 .shipper("p2", 3, 0)
                 .customer("c1", "p1", 1, 0)
                 .customer("c2", "p2", 2, 0)
                 .drone("d1", "p1")
                 .drone("d2", "p2")
                 .build();
  auto grand = build_program(two, Coalition::all(2), PlanMode::deterministic);
  CHECK(grand.count("Y") == 8);
  CHECK(grand.count("A") == 0);
  CHECK(grand.count("X") == 0);
  CHECK(grand.count("V") == 0);
  CHECK_THROWS_WITH(build_program(two, Coalition{}, PlanMode::deterministic),
                    "coalition must be nonempty");
}

TEST_CASE("solve small instances") {
  SUBCASE("no customers") {
    auto s = Builder().shipper("p1", 0, 0).drone("d1", "p1").build();
    auto sol = solve_assignment(s, Coalition::single(0), PlanMode::stochastic);
    CHECK(sol.objective == 0);
    CHECK_FALSE(sol.use_drone[0]);
  }
  SUBCASE("out of trip range") {
    auto s = one_customer(11);  // 22 km round trip, 10 km limit
    for (auto mode : {PlanMode::deterministic, PlanMode::stochastic}) {
      auto sol = solve_assignment(s, Coalition::single(0), mode);
      CHECK(sol.outsourced(0));
      CHECK(sol.objective == 16);
      auto oracle = brute_force_assignment(s, Coalition::single(0), mode);
      CHECK(oracle.outsourced(0));
    }
  }
  SUBCASE("close customer served by drone") {
    auto s = one_customer(1);
    auto sol = solve_assignment(s, Coalition::single(0), PlanMode::deterministic);
    CHECK_FALSE(sol.outsourced(0));
    CHECK(sol.objective == 2);
  }
  SUBCASE("unreliable drone loses to outsourcing") {
    auto s = one_customer(1, "0.9");
    auto sol = solve_assignment(s, Coalition::single(0), PlanMode::stochastic);
    CHECK(2 + R("0.9") * 16 > 16);
    CHECK(sol.outsourced(0));
    CHECK(sol.objective == 16);
    CHECK(brute_force_assignment(s, Coalition::single(0), PlanMode::stochastic).objective == 16);
  }
}

TEST_CASE("evaluate objective") {
  auto s = Builder()
               .shipper("p1", 0, 0)
               .shipper("p2", 4, 0)
               .customer("c1", "p1", 1, 0)
               .customer("c2", "p1", 5.5, 0)
               .customer("c3", "p1", 20, 0)
               .drone("d2", "p2")
               .cost("1", "30", "100", "16")
               .build();
  const auto grand = Coalition::all(2);
  auto data = make_coalition_data(s, grand);

  SUBCASE("all outsourced") {
    auto sol = brute_force_assignment(s, grand, PlanMode::deterministic);
    sol.served_by.assign(3, std::nullopt);
    sol.served_count.assign(1, 0);
    sol.use_drone.assign(1, false);
    sol.transfer.assign(3, std::nullopt);
    sol.transfers_active.assign(2, false);
    sol.drone_depot.assign(1, data.home_slot[0]);
    auto b = evaluate_objective(s, grand, sol, PlanMode::deterministic);
    CHECK(b.initial == 0);
    CHECK(b.routing == 0);
    CHECK(b.transfer == 0);
    CHECK(b.outsource == 300);
    CHECK(b.expected_penalty == 0);
  }
  SUBCASE("one transfer charges both sides") {
    // c2 is beyond reach of p1 but 1.5 km from p2.
    auto sol = solve_assignment(s, grand, PlanMode::deterministic);
    REQUIRE(sol.transferred_count() >= 1);
    auto b = evaluate_objective(s, grand, sol, PlanMode::deterministic);
    CHECK(b.transfer == 60);
    CHECK(b.total() == sol.objective);
    auto theta = transfer_counts(sol, 2);
    CHECK(theta[0][1] == static_cast<int>(sol.transferred_count()));
    CHECK(theta[1][0] == 0);
  }
  SUBCASE("violations are named") {
    auto sol = solve_assignment(s, grand, PlanMode::deterministic);
    sol.served_by[2] = 0;  // 20 km away
    sol.served_count[0] += 1;
    CHECK_THROWS_WITH_AS(evaluate_objective(s, grand, sol, PlanMode::deterministic),
                         doctest::Contains("constraint violated"), std::domain_error);
  }
}

TEST_CASE("solver matches the brute-force oracle on random instances") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 150; ++k) {
    auto s = testkit::random_scenario(rng, {3, 6, 3});
    const auto grand = Coalition::all(s.shippers().size());
    for (auto mode : {PlanMode::deterministic, PlanMode::stochastic}) {
      auto sol = solve_assignment(s, grand, mode);
      auto oracle = brute_force_assignment(s, grand, mode);
      INFO("instance " << k << " mode " << std::string(to_string(mode)));
      REQUIRE(sol.objective == oracle.objective);
      auto b = evaluate_objective(s, grand, sol, mode);
      CHECK(b.total() == sol.objective);
      auto lp = build_program(s, grand, mode);
      auto values = program_values(lp, s, sol);
      CHECK(lp.check(values).empty());
      CHECK(lp.objective_value(values) == sol.objective);
    }
  }
}

TEST_CASE("solver is repeatable") {
  std::mt19937_64 rng(11);
  auto s = testkit::random_scenario(rng, {3, 8, 3});
  const auto grand = Coalition::all(s.shippers().size());
  auto a = solve_assignment(s, grand, PlanMode::stochastic);
  auto b = solve_assignment(s, grand, PlanMode::stochastic);
  CHECK(a.served_by == b.served_by);
  CHECK(a.drone_depot == b.drone_depot);
  CHECK(a.objective == b.objective);
}

TEST_CASE("oracle size limit") {
  Builder b;
  b.shipper("p1", 0, 0).drone("d1", "p1");
  for (int i = 1; i <= 9; ++i) b.customer("c" + std::to_string(i), "p1", 1, 0);
  CHECK_THROWS_WITH(brute_force_assignment(b.build(), Coalition::single(0), PlanMode::deterministic),
                    "oracle size exceeded");
}
