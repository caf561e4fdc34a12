#include <random>

#include "../common/scenario_kit.hpp"
#include "doctest.h"
#include "droneplan/coalition.hpp"

using namespace droneplan;
using testkit::Builder;

namespace {

Rational R(const char* text) { return parse_decimal(text); }

TransferMatrix zeros(std::size_t n) { return TransferMatrix(n, std::vector<int>(n, 0)); }

// p1 owns the only drone; p2's customers sit next to p1's depot, so pooling
// lets the drone serve them after a transfer.
Builder pooling(const char* transfer) {
  return Builder()
      .shipper("p1", 0, 0)
      .shipper("p2", 8, 0)
      .customer("c1", "p1", 1, 0)
      .customer("c2", "p2", 0, 1)
      .customer("c3", "p2", 0, 1.5)
      .drone("d1", "p1")
      .cost("1", transfer, "16", "16");
}

TransitionModel two_state(const char* a, const char* b, const char* c, const char* d) {
  TransitionModel m;
  m.shipper_ids = {"p1", "p2"};
  m.states = enumerate_structures(2);
  m.rows = {{{0, R(a)}, {1, R(b)}}, {{0, R(c)}, {1, R(d)}}};
  return m;
}

}  // namespace

TEST_CASE("belief matrix bounds") {
  BeliefMatrix b(3, R("0.9"));
  CHECK(b(0, 2) == R("0.9"));
  b.set(0, 2, R("0.5"));
  CHECK(b(0, 2) == R("0.5"));
  CHECK(b(2, 0) == R("0.9"));
  CHECK_THROWS(b.set(1, 1, 1));
  CHECK_THROWS(b.set(1, 0, R("1.5")));
}

TEST_CASE("expected payoff examples") {
  const Rational v = 100;
  SUBCASE("two members") {
    BeliefMatrix b(2, R("0.9"));
    auto theta = zeros(2);
    theta[0][1] = 10;
    CHECK(expected_payoff(0, Coalition::all(2), v, b, theta, 16) == v + R("1.6"));
    CHECK(expected_payoff_factorized(0, Coalition::all(2), v, b, theta, 16) == v + R("1.6"));
  }
  SUBCASE("three members") {
    BeliefMatrix b(3, R("0.9"));
    auto theta = zeros(3);
    theta[0][1] = theta[0][2] = 5;
    CHECK(expected_payoff(0, Coalition::all(3), v, b, theta, 16) == v + R("1.6"));
  }
  SUBCASE("full trust or alone") {
    BeliefMatrix b(3, 1);
    auto theta = zeros(3);
    theta[0][1] = 7;
    CHECK(expected_payoff(0, Coalition::all(3), v, b, theta, 16) == v);
    CHECK(expected_payoff(0, Coalition::single(0), v, BeliefMatrix(3, R("0.2")), theta, 16) == v);
  }
  SUBCASE("enumeration equals factorization") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 200; ++k) {
      const std::size_t n = 1 + rng() % 5;
      BeliefMatrix b(n);
      auto theta = zeros(n);
      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
          if (p == q) continue;
          b.set(p, q, ratio(static_cast<long>(rng() % 101), 100));
          theta[p][q] = static_cast<int>(rng() % 12);
        }
      }
      const auto p = rng() % n;
      CHECK(expected_payoff(p, Coalition::all(n), v, b, theta, 16) ==
            expected_payoff_factorized(p, Coalition::all(n), v, b, theta, 16));
    }
  }
}

TEST_CASE("preference value") {
  SUBCASE("cooperation lowers both costs") {
    const auto s = pooling("0.5").build();
    CharacteristicCache cache(s, PlanMode::stochastic);
    PayoffModel payoffs(cache, BeliefMatrix(2, 1));
    const auto grand = Coalition::all(2);
    const auto phi = CoalitionStructure::from_blocks({grand});
    for (std::size_t p = 0; p < 2; ++p) {
      CHECK(payoffs.payoff(p, grand) < payoffs.payoff(p, Coalition::single(p)));
      CHECK(preference_value(p, grand, phi, payoffs) == payoffs.payoff(p, grand));
    }
    const auto alone = CoalitionStructure::singletons(2);
    CHECK(preference_value(0, Coalition::single(0), alone, payoffs) ==
          payoffs.payoff(0, Coalition::single(0)));
  }
  SUBCASE("distrust makes the coalition unacceptable") {
    const auto s = pooling("0.5").build();
    CharacteristicCache cache(s, PlanMode::stochastic);
    BeliefMatrix b(2, 1);
    b.set(1, 0, 0);  // p2 expects p1 to drop everything
    PayoffModel payoffs(cache, b);
    const auto grand = Coalition::all(2);
    CHECK(payoffs.payoff(1, grand) > payoffs.payoff(1, Coalition::single(1)));
    const auto phi = CoalitionStructure::from_blocks({grand});
    CHECK_FALSE(preference_value(0, grand, phi, payoffs).has_value());
    CHECK(format_preference(std::nullopt) == "INVALID");
  }
}

TEST_CASE("merge and split") {
  SUBCASE("single shipper") {
    const auto s = Builder().shipper("p1", 0, 0).customer("c1", "p1", 1, 0).drone("d1", "p1").build();
    CharacteristicCache cache(s, PlanMode::stochastic);
    PayoffModel payoffs(cache, BeliefMatrix(1));
    auto r = merge_split(payoffs);
    CHECK(r.trace.empty());
    CHECK(r.structure == CoalitionStructure::singletons(1));
  }
  SUBCASE("beneficial pooling forms the grand coalition") {
    const auto s = pooling("0.5").build();
    CharacteristicCache cache(s, PlanMode::stochastic);
    PayoffModel payoffs(cache, BeliefMatrix(2, 1));
    auto r = merge_split(payoffs);
    CHECK(r.structure == CoalitionStructure::from_blocks({Coalition::all(2)}));
    REQUIRE(r.trace.size() == 1);
    CHECK(improving_deviations(payoffs, r.structure, &r.visited).empty());
  }
  SUBCASE("prohibitive transfers keep shippers apart") {
    const auto s = pooling("500").build();
    CharacteristicCache cache(s, PlanMode::stochastic);
    PayoffModel payoffs(cache, BeliefMatrix(2, 1));
    auto r = merge_split(payoffs);
    CHECK(r.structure == CoalitionStructure::singletons(2));
    CHECK(r.trace.empty());
    CHECK(improving_deviations(payoffs, r.structure).empty());
  }
}

TEST_CASE("transition matrix") {
  Builder b;
  for (int p = 1; p <= 3; ++p) {
    const auto id = "p" + std::to_string(p);
    b.shipper(id, 3.0 * p, 0).customer("c" + std::to_string(p), id, 3.0 * p + 1, 0).drone("d" + std::to_string(p), id);
  }
  const auto s = b.build();
  CharacteristicCache cache(s, PlanMode::stochastic);
  PayoffModel payoffs(cache, BeliefMatrix(3, R("0.9")));
  auto model = transition_matrix(payoffs, R("0.5"), R("0.1"));
  REQUIRE(model.states.size() == 5);
  for (std::size_t m = 0; m < 5; ++m) {
    Rational sum;
    for (const auto& [col, v] : model.rows[m]) {
      CHECK(v >= 0);
      sum += v;
    }
    CHECK(sum == 1);
  }
  // Singletons -> one pair merge: one mover of three shippers.
  const auto alone = CoalitionStructure::singletons(3);
  const auto pair = CoalitionStructure::from_blocks({Coalition{0b011}, Coalition{0b100}});
  const auto grand = CoalitionStructure::from_blocks({Coalition::all(3)});
  auto at = [&](const CoalitionStructure& x) {
    return static_cast<std::size_t>(std::find(model.states.begin(), model.states.end(), x) - model.states.begin());
  };
  const auto e = model.entry(at(alone), at(pair));
  CHECK((e == R("0.1") * R("0.125") || e == R("0.9") * R("0.125")));
  CHECK(model.entry(at(alone), at(grand)) == 0);

  CHECK_THROWS(transition_matrix(payoffs, R("1"), R("0.1")));
  CHECK_THROWS(transition_matrix(payoffs, R("0.5"), R("1.1")));
}

TEST_CASE("transition mass can exceed one") {
  // Off-diagonal mass peaks above 1 only from six shippers on, near alpha = 1/6.
  Builder b;
  for (int p = 1; p <= 6; ++p) b.shipper("p" + std::to_string(p), p, 0);
  const auto s = b.build();
  CharacteristicCache cache(s, PlanMode::stochastic);
  PayoffModel payoffs(cache, BeliefMatrix(6));
  CHECK_THROWS_WITH(transition_matrix(payoffs, R("0.17"), R("0.1")), "transition mass exceeds 1");
  CHECK_NOTHROW(transition_matrix(payoffs, R("0.5"), R("0.1")));
}

TEST_CASE("stationary distribution") {
  auto even = stationary_distribution(two_state("0.5", "0.5", "0.5", "0.5"));
  CHECK(even.pi[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(even.pi[1] == doctest::Approx(0.5).epsilon(1e-12));

  auto skew = stationary_distribution(two_state("0.9", "0.1", "0.5", "0.5"));
  CHECK(skew.pi[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(skew.pi[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(skew.residual <= 1e-12);

  auto swapped = stationary_distribution(two_state("0.5", "0.5", "0.1", "0.9"));
  CHECK(swapped.pi[1] == doctest::Approx(5.0 / 6.0).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(stationary_distribution(two_state("1", "0", "0", "1")),
                       doctest::Contains("closed classes"), SolverError);
}
