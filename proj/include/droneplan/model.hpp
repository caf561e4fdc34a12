#pragma once

// Domain types shared by every stage of the planner: shippers with their
// depots, customers (one package each), drones and the cost parameters.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "droneplan/rational.hpp"

namespace droneplan {

struct Location {
  double x = 0.0;  // km
  double y = 0.0;  // km
};

bool operator==(const Location& a, const Location& b);

struct Customer {
  std::string id;
  Location location;
  double weight = 0.0;        // kg
  double service_time = 0.0;  // hours spent searching and dropping
  std::string owner;          // shipper id
  // Solomon time window, carried through but unused by the model.
  std::optional<double> ready_time;
  std::optional<double> due_date;
};

struct Drone {
  std::string id;
  std::string home_shipper;
  double capacity = 0.0;     // kg per trip
  double trip_range = 0.0;   // km per round trip
  double daily_range = 0.0;  // km per day
  double shift_hours = 0.0;  // h per day
  double speed = 0.0;        // km/h
  Rational breakdown_prob;   // per delivery attempt
  Rational initial_cost;     // currency
};

struct Shipper {
  std::string id;
  Location depot;
  std::vector<std::string> drones;
  std::vector<std::string> customers;
};

struct CostParams {
  Rational routing_rate;    // currency per km
  Rational transfer_cost;   // per shipper that sends or receives transfers
  Rational outsource_cost;  // per outsourced package
  Rational penalty_cost;    // per undelivered package
  std::int64_t big_m = 0;   // validated bound; the program uses tight constants
};

/// Immutable problem instance. Construction sorts every sequence by id (ids are
/// opaque strings ordered lexicographically) and fills empty shipper
/// drone/customer lists from the ownership fields. Invariants are checked by
/// validate_scenario, not here, so malformed input can still be reported.
class DeliveryScenario {
 public:
  DeliveryScenario() = default;
  DeliveryScenario(std::vector<Shipper> shippers, std::vector<Customer> customers,
                   std::vector<Drone> drones, CostParams costs);

  const std::vector<Shipper>& shippers() const { return shippers_; }
  const std::vector<Customer>& customers() const { return customers_; }
  const std::vector<Drone>& drones() const { return drones_; }
  const CostParams& costs() const { return costs_; }

  std::optional<std::size_t> find_shipper(std::string_view id) const;
  std::optional<std::size_t> find_customer(std::string_view id) const;
  std::optional<std::size_t> find_drone(std::string_view id) const;

  /// Index of the owning shipper; throws std::out_of_range on dangling ids.
  std::size_t owner_index(std::size_t customer) const;
  std::size_t home_index(std::size_t drone) const;

  std::vector<std::string> shipper_ids() const;

 private:
  std::vector<Shipper> shippers_;
  std::vector<Customer> customers_;
  std::vector<Drone> drones_;
  CostParams costs_;
};

/// Euclidean planar distance in km.
double distance(const Location& a, const Location& b);

/// Routing cost of one leg between a depot and a customer, rounded to cents.
Rational leg_cost(const CostParams& costs, const Location& depot, const Location& customer);

// Resource quantities are quantized once per trip so every route through the
// model sums identical integers.
constexpr std::int64_t kMicro = 1'000'000;
std::int64_t to_micro(double value);

struct ValidationIssue {
  std::string path;     // e.g. "customers[c3].weight"
  std::string message;  // e.g. "weight must be positive"
};

using ValidationReport = std::vector<ValidationIssue>;

ValidationReport validate_scenario(const DeliveryScenario& scenario);

/// FNV-1a hash over every field, with doubles rendered at full precision.
std::uint64_t fingerprint(const DeliveryScenario& scenario);

}  // namespace droneplan
