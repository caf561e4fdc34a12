#include <algorithm>
#include <numeric>
#include <random>

#include "../common/scenario_kit.hpp"
#include "doctest.h"
#include "droneplan/costshare.hpp"

using namespace droneplan;
using testkit::Builder;

namespace {

// Oracle: average marginal contribution over every join order.
std::vector<Rational> permutation_shapley(std::size_t n,
                                          const std::function<Rational(std::uint64_t)>& cost) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<Rational> sum(n);
  long count = 0;
  do {
    std::uint64_t joined = 0;
    Rational before = 0;
    for (auto i : order) {
      joined |= std::uint64_t{1} << i;
      const Rational after = cost(joined);
      sum[i] += after - before;
      before = after;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& v : sum) v /= count;
  return sum;
}

DeliveryScenario two_shippers() {
  return Builder()
      .shipper("p1", 0, 0)
      .shipper("p2", 2, 0)
      .customer("c1", "p1", 1, 0)
      .customer("c2", "p2", 3, 0)
      .customer("c3", "p2", 2, 1)
      .drone("d1", "p1", "0.05")
      .cost("1", "2", "16", "16")
      .build();
}

}  // namespace

TEST_CASE("shapley two-player example") {
  auto cost = [](std::uint64_t m) -> Rational {
    switch (m) {
      case 1: return 10;
      case 2: return 20;
      default: return 24;
    }
  };
  auto phi = shapley_values(2, cost);
  CHECK(phi[0] == 7);
  CHECK(phi[1] == 17);
  CHECK(phi == permutation_shapley(2, cost));
}

TEST_CASE("shapley subset formula equals permutation average") {
  std::mt19937_64 rng(3);
  for (std::size_t n = 1; n <= 5; ++n) {
    std::vector<Rational> table(std::size_t{1} << n);
    for (auto& v : table) v = ratio(static_cast<long>(rng() % 10000), 100);
    auto cost = [&](std::uint64_t m) { return table[m]; };
    CHECK(shapley_values(n, cost) == permutation_shapley(n, cost));
  }
  CHECK_THROWS_WITH_AS(shapley_values(9, [](std::uint64_t) { return Rational(1); }),
                       doctest::Contains("Shapley size limit"), SolverError);
}

TEST_CASE("subsets in bitmask order") {
  auto s = subsets(Coalition{0b1011});
  std::vector<std::uint64_t> masks;
  for (auto c : s) masks.push_back(c.mask);
  CHECK(masks == std::vector<std::uint64_t>{1, 2, 3, 8, 9, 10, 11});
}

TEST_CASE("characteristic cache") {
  const auto s = two_shippers();
  CharacteristicCache cache(s, PlanMode::stochastic);
  const auto single = characteristic_cost(cache, s, Coalition::single(0));
  CHECK(single == solve_assignment(s, Coalition::single(0), PlanMode::stochastic).objective);
  CHECK(characteristic_cost(cache, s, Coalition::single(0)) == single);
  CHECK(cache.solve_count() == 1);

  const auto grand = characteristic_cost(cache, s, Coalition::all(2));
  CHECK(grand == brute_force_assignment(s, Coalition::all(2), PlanMode::stochastic).objective);

  CHECK_THROWS_WITH(characteristic_cost(cache, s, Coalition{}), "coalition must be nonempty");
  auto other = Builder().shipper("p1", 0, 0).build();
  CHECK_THROWS_WITH(characteristic_cost(cache, other, Coalition::single(0)),
                    "scenario fingerprint mismatch");
}

TEST_CASE("parallel precompute matches sequential solves") {
  const auto s = two_shippers();
  CharacteristicCache a(s, PlanMode::stochastic), b(s, PlanMode::stochastic);
  a.precompute(subsets(Coalition::all(2)), 3);
  for (auto c : subsets(Coalition::all(2))) {
    CHECK(a.solution(c)->objective == b.solution(c)->objective);
  }
  CHECK(a.solve_count() == 3);
}

TEST_CASE("shapley over solved coalitions is efficient") {
  const auto s = two_shippers();
  CharacteristicCache cache(s, PlanMode::stochastic);
  auto alloc = shapley(cache, s, Coalition::all(2));
  Rational sum;
  for (const auto& [p, v] : alloc.shares) sum += v;
  CHECK(sum == characteristic_cost(cache, s, Coalition::all(2)));

  auto one = shapley(cache, s, Coalition::single(1));
  CHECK(one.shares.at(1) == characteristic_cost(cache, s, Coalition::single(1)));
}
