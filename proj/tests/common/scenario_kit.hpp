#pragma once

// Small scenario builder and random instance generator shared by the unit and
// acceptance tests.

#include <random>
#include <string>
#include <vector>

#include "droneplan/model.hpp"
#include "droneplan/rational.hpp"

namespace testkit {

using droneplan::parse_decimal;

struct Builder {
  std::vector<droneplan::Shipper> shippers;
  std::vector<droneplan::Customer> customers;
  std::vector<droneplan::Drone> drones;
  droneplan::CostParams costs{parse_decimal("1"), parse_decimal("30"), parse_decimal("16"),
                              parse_decimal("16"), 1'000'000};

  Builder& shipper(std::string id, double x, double y) {
    shippers.push_back({std::move(id), {x, y}, {}, {}});
    return *this;
  }
  Builder& customer(std::string id, std::string owner, double x, double y, double weight = 1.0,
                    double service = 0.25) {
    customers.push_back({std::move(id), {x, y}, weight, service, std::move(owner), {}, {}});
    return *this;
  }
  Builder& drone(std::string id, std::string home, std::string breakdown = "0",
                 std::string initial = "0", double capacity = 5, double trip = 10,
                 double daily = 150, double shift = 8, double speed = 30) {
    drones.push_back({std::move(id), std::move(home), capacity, trip, daily, shift, speed,
                      parse_decimal(breakdown), parse_decimal(initial)});
    return *this;
  }
  Builder& cost(std::string routing, std::string transfer, std::string outsource,
                std::string penalty) {
    costs.routing_rate = parse_decimal(routing);
    costs.transfer_cost = parse_decimal(transfer);
    costs.outsource_cost = parse_decimal(outsource);
    costs.penalty_cost = parse_decimal(penalty);
    return *this;
  }
  droneplan::DeliveryScenario build() const {
    return droneplan::DeliveryScenario(shippers, customers, drones, costs);
  }
};

struct Shape {
  int max_shippers = 2;
  int max_customers = 6;
  int max_drones = 2;
};

/// Random small instance. Ranges are chosen so that every constraint family
/// binds on some draws: far customers, heavy packages, short days and shifts.
inline droneplan::DeliveryScenario random_scenario(std::mt19937_64& rng, Shape shape) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto real = [&](double lo, double hi) {
    // Two decimals keep coordinates readable in failure output.
    return std::round(std::uniform_real_distribution<double>(lo, hi)(rng) * 100.0) / 100.0;
  };
  static const char* probs[] = {"0", "0.05", "0.1", "0.2", "0.5", "0.9"};
  static const char* initials[] = {"0", "1", "2.5", "5", "10"};
  static const char* rates[] = {"0.5", "1", "2"};
  static const char* transfers[] = {"0", "1.5", "4", "30"};
  static const char* penalties[] = {"8", "16", "25"};

  Builder b;
  const int ns = pick(1, shape.max_shippers);
  const int nc = pick(0, shape.max_customers);
  const int nd = pick(0, shape.max_drones);
  for (int s = 1; s <= ns; ++s) b.shipper("p" + std::to_string(s), real(0, 6), real(0, 6));
  for (int i = 1; i <= nc; ++i) {
    b.customer("c" + std::to_string(i), "p" + std::to_string(pick(1, ns)), real(0, 8), real(0, 8),
               real(0.5, 6), real(0.05, 0.5));
  }
  for (int d = 1; d <= nd; ++d) {
    b.drone("d" + std::to_string(d), "p" + std::to_string(pick(1, ns)), probs[pick(0, 5)],
            initials[pick(0, 4)], real(3, 6), real(6, 14), real(8, 40), real(0.5, 3), real(20, 40));
  }
  b.cost(rates[pick(0, 2)], transfers[pick(0, 3)], "16", penalties[pick(0, 2)]);
  return b.build();
}

/// Four shippers. p1 and p2 own no drone; their customers sit next to the
/// depots of p3 and p4 respectively, so pooling saves a little outsourcing at
/// the price of handing packages to p3 or p4. Drones never break down.
inline droneplan::DeliveryScenario trust_toy(const char* transfer = "27") {
  Builder b;
  b.shipper("p1", 50, 0).shipper("p2", 150, 0).shipper("p3", 0, 0).shipper("p4", 100, 0);
  const double dy[] = {1, -1, 0.5, -0.5};
  for (int k = 0; k < 4; ++k) {
    b.customer("a" + std::to_string(k + 1), "p1", dy[k] * 0.2, dy[k]);
    b.customer("b" + std::to_string(k + 1), "p2", 100 + dy[k] * 0.2, dy[k]);
  }
  b.customer("c1", "p3", 1, 0).customer("d1", "p4", 101, 0);
  b.drone("u3", "p3").drone("u4", "p4");
  b.cost("1", transfer, "16", "16");
  return b.build();
}

}  // namespace testkit
