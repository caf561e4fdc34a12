#include "../common/scenario_kit.hpp"
#include "doctest.h"
#include "droneplan/dynamic.hpp"

using namespace droneplan;

namespace {

Rational R(const char* text) { return parse_decimal(text); }

}  // namespace

TEST_CASE("outcome probabilities") {
  CHECK(outcome_probabilities(10, 10) == std::pair<Rational, Rational>(1, 0));
  CHECK(outcome_probabilities(11, 8) == std::pair<Rational, Rational>(ratio(8, 11), ratio(3, 11)));
  CHECK(outcome_probabilities(5, 0) == std::pair<Rational, Rational>(0, 1));
  CHECK_THROWS_WITH(outcome_probabilities(0, 0), "no observation");
  CHECK_THROWS(outcome_probabilities(3, 4));
}

TEST_CASE("raw belief") {
  CHECK(raw_belief(10, 10, R("0.05")) == 1);
  CHECK(raw_belief(11, 8, R("0.05")) == Rational(8) / (11 * R("0.95")));
  CHECK(to_double(raw_belief(11, 8, R("0.05"))) == doctest::Approx(0.7656).epsilon(1e-4));
  CHECK(raw_belief(10, 0, R("0.05")) == 0);
  // Boundary: 19/20 = 1 - eps takes the capped branch, which agrees with the ratio branch.
  CHECK(raw_belief(20, 19, R("0.05")) == 1);
  CHECK(Rational(19) / (20 * R("0.95")) == 1);
}

TEST_CASE("ema update") {
  CHECK(ema_update(1, R("0.7656"), R("0.5"), R("0.5")) == R("0.8828"));
  CHECK(ema_update(R("0.3"), R("0.3"), R("0.2"), R("0.8")) == R("0.3"));
  CHECK(ema_update(R("0.9"), R("0.5"), 1, 0) == R("0.9"));
  CHECK_THROWS(ema_update(1, 1, R("0.5"), R("0.6")));
}

TEST_CASE("truthful partners keep full trust") {
  const auto s = testkit::trust_toy();
  DynamicConfig cfg;
  cfg.error_prob = 0;
  cfg.max_iters = 4;
  cfg.settle = 10;
  auto r = run_dynamic(s, cfg);
  REQUIRE(r.iterations.size() == 4);
  for (const auto& it : r.iterations) {
    CHECK(it.updated == BeliefMatrix(4));
    CHECK(it.structure == r.iterations.front().structure);
  }
  CHECK_FALSE(r.iterations.front().observations.empty());
}

TEST_CASE("a partner that never delivers loses trust geometrically") {
  const auto s = testkit::trust_toy("20");
  DynamicConfig cfg;
  cfg.misbehavior = {0, 0, 1, 0};
  cfg.w1 = R("0.7");
  cfg.w2 = R("0.3");
  cfg.max_iters = 8;
  auto r = run_dynamic(s, cfg);
  bool seen = false;
  for (const auto& it : r.iterations) {
    for (std::size_t p = 0; p < 4; ++p) {
      for (std::size_t q = 0; q < 4; ++q) {
        if (p == q) continue;
        bool observed = false;
        for (const auto& o : it.observations) observed = observed || (o.p == p && o.q == q);
        if (!observed) {
          CHECK(it.updated(p, q) == it.beliefs(p, q));
        } else if (q == 2) {
          seen = true;
          CHECK(it.updated(p, q) == R("0.7") * it.beliefs(p, q));
        }
      }
    }
  }
  CHECK(seen);
}
