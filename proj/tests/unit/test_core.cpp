#include <cmath>
#include <random>

#include "../common/scenario_kit.hpp"
#include "doctest.h"
#include "droneplan/rational.hpp"
#include "droneplan/structure.hpp"

using namespace droneplan;
using testkit::Builder;

namespace {

bool has_issue(const ValidationReport& report, const std::string& path, const std::string& message) {
  for (const auto& i : report) {
    if (i.path == path && i.message == message) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("distance") {
  CHECK(distance({1, 2}, {1, 2}) == 0.0);
  CHECK(distance({0, 0}, {3, 4}) == 5.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int k = 0; k < 200; ++k) {
    Location a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)};
    CHECK(distance(a, b) == distance(b, a));
    CHECK(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12);
    CHECK(distance(a, b) >= 0.0);
  }
}

TEST_CASE("leg cost rounds to cents") {
  CostParams k{parse_decimal("1.5"), 0, 0, 0, 1};
  CHECK(leg_cost(k, {0, 0}, {3, 4}) == parse_decimal("7.5"));
  CHECK(leg_cost(k, {0, 0}, {1, 1}) == parse_decimal("2.12"));  // 2.1213...
}

TEST_CASE("validation") {
  SUBCASE("valid scenario") { CHECK(validate_scenario(testkit::trust_toy()).empty()); }
  SUBCASE("non-positive weight") {
    auto s = Builder().shipper("p1", 0, 0).customer("c3", "p1", 1, 0, 0.0).build();
    CHECK(has_issue(validate_scenario(s), "customers[c3].weight", "weight must be positive"));
  }
  SUBCASE("dangling owner") {
    auto s = Builder().shipper("p1", 0, 0).customer("c1", "p9", 1, 0).build();
    auto report = validate_scenario(s);
    REQUIRE_FALSE(report.empty());
    bool found = false;
    for (const auto& i : report) found |= i.message.find("unresolved reference to shipper 'p9'") != std::string::npos;
    CHECK(found);
  }
  SUBCASE("fingerprint tracks content") {
    auto a = testkit::trust_toy("27");
    auto b = testkit::trust_toy("27");
    auto c = testkit::trust_toy("28");
    CHECK(fingerprint(a) == fingerprint(b));
    CHECK(fingerprint(a) != fingerprint(c));
  }
}

TEST_CASE("lossless rational text") {
  CHECK(to_text(ratio(1, 40)) == "0.025");
  CHECK(to_text(ratio(16, 1)) == "16");
  CHECK(to_text(ratio(-3, 8)) == "-0.375");
  CHECK(to_text(ratio(1, 3)) == "1/3");
  CHECK(parse_text("1/3") == ratio(1, 3));
  CHECK(parse_text("2/4") == ratio(1, 2));
  CHECK(parse_text("0.025") == ratio(1, 40));
  CHECK_THROWS_AS(parse_text("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_text("x"), std::invalid_argument);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 300; ++k) {
    const auto v = ratio(std::uniform_int_distribution<int>(-1000, 1000)(rng),
                         std::uniform_int_distribution<int>(1, 400)(rng));
    CHECK(parse_text(to_text(v)) == v);
  }
}

TEST_CASE("bell numbers and enumeration") {
  const std::uint64_t bell[] = {1, 1, 2, 5, 15, 52, 203};
  for (std::size_t n = 1; n <= 6; ++n) {
    CHECK(bell_number(n) == bell[n]);
    const auto all = enumerate_structures(n);
    CHECK(all.size() == bell[n]);
    for (std::size_t i = 0; i < all.size(); ++i) {
      CHECK(is_partition(all[i], n));
      if (i > 0) CHECK(structure_less(all[i - 1], all[i]));
    }
  }
  const auto four = enumerate_structures(4);
  CHECK(four.front() == CoalitionStructure::singletons(4));
  CHECK(four.back().blocks.size() == 1);
  const std::vector<std::string> ids{"p1", "p2", "p3", "p4"};
  const char* listing[] = {"p1|p2|p3|p4", "p1,p2|p3|p4", "p1,p3|p2|p4", "p1,p4|p2|p3", "p2,p3|p1|p4",
                           "p2,p4|p1|p3", "p3,p4|p1|p2", "p1,p2|p3,p4", "p1,p3|p2,p4", "p1,p4|p2,p3",
                           "p1,p2,p3|p4", "p1,p2,p4|p3", "p1,p3,p4|p2", "p2,p3,p4|p1", "p1,p2,p3,p4"};
  for (std::size_t k = 0; k < 15; ++k) CHECK(format_structure(four[k], ids) == listing[k]);
}

TEST_CASE("neighbors") {
  const std::vector<std::string> ids{"p1", "p2", "p3"};
  auto s = parse_structure("p1,p2|p3", ids);
  auto ns = neighbors(s, 3);
  // p1|p2|p3 (either of the pair leaves), p2|p1,p3, p1|p2,p3 and p1,p2,p3.
  std::vector<std::string> text;
  for (const auto& x : ns) text.push_back(format_structure(x, ids));
  CHECK(ns.size() == 4);
  CHECK(std::find(text.begin(), text.end(), "p1|p2|p3") != text.end());
  CHECK(std::find(text.begin(), text.end(), "p1,p2,p3") != text.end());
  for (const auto& x : ns) {
    CHECK_FALSE(x == s);
    CHECK_FALSE(movers(s, x, 3).empty());
  }
  CHECK(neighbors(CoalitionStructure::singletons(1), 1).empty());
}

TEST_CASE("structure grammar") {
  const std::vector<std::string> ids{"p1", "p2", "p3", "p4"};
  auto s = parse_structure("p3,p4|p1,p2", ids);
  CHECK(format_structure(s, ids) == "p1,p2|p3,p4");
  CHECK(format_structure(parse_structure("p4|p2,p1|p3", ids), ids) == "p1,p2|p3|p4");
  CHECK_THROWS_AS(parse_structure("p1,p2|p2,p3,p4", ids), std::invalid_argument);
  CHECK_THROWS_AS(parse_structure("p1,p2|p5", ids), std::invalid_argument);
  CHECK_THROWS_AS(parse_structure("p1,p2||p3,p4", ids), std::invalid_argument);
  CHECK_FALSE(is_partition(parse_structure("p1,p2", ids), 4));
}
