#include "droneplan/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace droneplan {

bool operator==(const Location& a, const Location& b) { return a.x == b.x && a.y == b.y; }

namespace {

template <typename T>
void sort_by_id(std::vector<T>& items) {
  std::stable_sort(items.begin(), items.end(),
                   [](const T& a, const T& b) { return a.id < b.id; });
}

template <typename T>
std::optional<std::size_t> find_by_id(const std::vector<T>& items, std::string_view id) {
  auto it = std::lower_bound(items.begin(), items.end(), id,
                             [](const T& item, std::string_view key) { return item.id < key; });
  if (it == items.end() || it->id != id) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - items.begin());
}

bool finite(const Location& l) { return std::isfinite(l.x) && std::isfinite(l.y); }

}  // namespace

DeliveryScenario::DeliveryScenario(std::vector<Shipper> shippers, std::vector<Customer> customers,
                                   std::vector<Drone> drones, CostParams costs)
    : shippers_(std::move(shippers)),
      customers_(std::move(customers)),
      drones_(std::move(drones)),
      costs_(std::move(costs)) {
  sort_by_id(shippers_);
  sort_by_id(customers_);
  sort_by_id(drones_);
  for (auto& shipper : shippers_) {
    if (shipper.drones.empty()) {
      for (const auto& d : drones_) {
        if (d.home_shipper == shipper.id) {
          shipper.drones.push_back(d.id);
        }
      }
    }
    if (shipper.customers.empty()) {
      for (const auto& c : customers_) {
        if (c.owner == shipper.id) {
          shipper.customers.push_back(c.id);
        }
      }
    }
    std::sort(shipper.drones.begin(), shipper.drones.end());
    std::sort(shipper.customers.begin(), shipper.customers.end());
  }
}

std::optional<std::size_t> DeliveryScenario::find_shipper(std::string_view id) const {
  return find_by_id(shippers_, id);
}

std::optional<std::size_t> DeliveryScenario::find_customer(std::string_view id) const {
  return find_by_id(customers_, id);
}

std::optional<std::size_t> DeliveryScenario::find_drone(std::string_view id) const {
  return find_by_id(drones_, id);
}

std::size_t DeliveryScenario::owner_index(std::size_t customer) const {
  auto idx = find_shipper(customers_.at(customer).owner);
  if (!idx) {
    throw std::out_of_range("customer " + customers_[customer].id + " has unknown owner");
  }
  return *idx;
}

std::size_t DeliveryScenario::home_index(std::size_t drone) const {
  auto idx = find_shipper(drones_.at(drone).home_shipper);
  if (!idx) {
    throw std::out_of_range("drone " + drones_[drone].id + " has unknown home shipper");
  }
  return *idx;
}

std::vector<std::string> DeliveryScenario::shipper_ids() const {
  std::vector<std::string> ids;
  ids.reserve(shippers_.size());
  for (const auto& s : shippers_) {
    ids.push_back(s.id);
  }
  return ids;
}

double distance(const Location& a, const Location& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Rational leg_cost(const CostParams& costs, const Location& depot, const Location& customer) {
  Rational exact = costs.routing_rate * from_double(distance(depot, customer));
  // Round half away from zero to whole cents; costs are non-negative.
  Rational scaled = exact * 100 + Rational(1, 2);
  mpz_class whole;
  mpz_fdiv_q(whole.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
  Rational out(whole, 100);
  out.canonicalize();
  return out;
}

std::int64_t to_micro(double value) {
  return static_cast<std::int64_t>(std::llround(value * static_cast<double>(kMicro)));
}

ValidationReport validate_scenario(const DeliveryScenario& s) {
  ValidationReport report;
  auto add = [&](std::string path, std::string message) {
    report.push_back({std::move(path), std::move(message)});
  };

  auto check_unique = [&](const auto& items, const char* kind) {
    for (std::size_t i = 1; i < items.size(); ++i) {
      if (items[i].id == items[i - 1].id) {
        add(std::string(kind) + "[" + items[i].id + "]", "duplicate id");
      }
    }
    for (const auto& item : items) {
      if (item.id.empty()) {
        add(kind, "empty id");
      }
    }
  };
  check_unique(s.shippers(), "shippers");
  check_unique(s.customers(), "customers");
  check_unique(s.drones(), "drones");

  for (const auto& sh : s.shippers()) {
    const std::string path = "shippers[" + sh.id + "]";
    if (!finite(sh.depot)) {
      add(path + ".depot", "depot coordinates must be finite");
    }
    for (const auto& cid : sh.customers) {
      auto ci = s.find_customer(cid);
      if (!ci) {
        add(path + ".customers", "unresolved reference to customer " + cid);
      } else if (s.customers()[*ci].owner != sh.id) {
        add(path + ".customers", "customer " + cid + " is owned by " + s.customers()[*ci].owner);
      }
    }
    for (const auto& did : sh.drones) {
      auto di = s.find_drone(did);
      if (!di) {
        add(path + ".drones", "unresolved reference to drone " + did);
      } else if (s.drones()[*di].home_shipper != sh.id) {
        add(path + ".drones", "drone " + did + " belongs to " + s.drones()[*di].home_shipper);
      }
    }
  }

  std::map<std::string, int> customer_listings;
  std::map<std::string, int> drone_listings;
  for (const auto& sh : s.shippers()) {
    for (const auto& cid : sh.customers) {
      ++customer_listings[cid];
    }
    for (const auto& did : sh.drones) {
      ++drone_listings[did];
    }
  }

  for (const auto& c : s.customers()) {
    const std::string path = "customers[" + c.id + "]";
    if (!finite(c.location)) {
      add(path + ".location", "coordinates must be finite");
    }
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      add(path + ".weight", "weight must be positive");
    }
    if (!(c.service_time >= 0.0) || !std::isfinite(c.service_time)) {
      add(path + ".service_time", "service time must be non-negative");
    }
    if (!s.find_shipper(c.owner)) {
      add(path + ".owner", "unresolved reference to shipper '" + c.owner + "'");
    } else if (customer_listings[c.id] != 1) {
      add(path + ".owner", "customer must be listed by exactly one shipper");
    }
  }

  for (const auto& d : s.drones()) {
    const std::string path = "drones[" + d.id + "]";
    auto positive = [&](double v, const char* field) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        add(path + "." + field, std::string(field) + " must be positive");
      }
    };
    positive(d.capacity, "capacity");
    positive(d.trip_range, "trip_range");
    positive(d.daily_range, "daily_range");
    positive(d.shift_hours, "shift_hours");
    positive(d.speed, "speed");
    if (d.breakdown_prob < 0 || d.breakdown_prob > 1) {
      add(path + ".breakdown_prob", "breakdown probability must lie in [0,1]");
    }
    if (d.initial_cost < 0) {
      add(path + ".initial_cost", "initial cost must be non-negative");
    }
    if (!s.find_shipper(d.home_shipper)) {
      add(path + ".home_shipper", "unresolved reference to shipper '" + d.home_shipper + "'");
    } else if (drone_listings[d.id] != 1) {
      add(path + ".home_shipper", "drone must be listed by exactly one shipper");
    }
  }

  const auto& k = s.costs();
  if (k.routing_rate < 0) add("costs.routing_rate", "must be non-negative");
  if (k.transfer_cost < 0) add("costs.transfer_cost", "must be non-negative");
  if (k.outsource_cost < 0) add("costs.outsource_cost", "must be non-negative");
  if (k.penalty_cost < 0) add("costs.penalty_cost", "must be non-negative");
  const auto bound = static_cast<std::int64_t>(s.customers().size() * s.drones().size() *
                                               s.shippers().size());
  if (k.big_m < bound || k.big_m < 1) {
    add("costs.big_m", "big_m must be at least |C|*|D|*|P| = " + std::to_string(bound));
  }
  return report;
}

std::uint64_t fingerprint(const DeliveryScenario& s) {
  std::uint64_t h = 14695981039346656037ULL;
  auto add = [&h](std::string_view text) {
    for (unsigned char c : text) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;  // field separator
    h *= 1099511628211ULL;
  };
  auto num = [&add](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    add(buf);
  };
  auto opt = [&](const std::optional<double>& v) { v ? num(*v) : add("-"); };
  for (const auto& p : s.shippers()) {
    add(p.id);
    num(p.depot.x);
    num(p.depot.y);
    for (const auto& d : p.drones) add(d);
    add("|");
    for (const auto& c : p.customers) add(c);
  }
  for (const auto& c : s.customers()) {
    add(c.id);
    num(c.location.x);
    num(c.location.y);
    num(c.weight);
    num(c.service_time);
    add(c.owner);
    opt(c.ready_time);
    opt(c.due_date);
  }
  for (const auto& d : s.drones()) {
    add(d.id);
    add(d.home_shipper);
    for (double v : {d.capacity, d.trip_range, d.daily_range, d.shift_hours, d.speed}) num(v);
    add(format_exact(d.breakdown_prob));
    add(format_exact(d.initial_cost));
  }
  const auto& k = s.costs();
  for (const auto* r : {&k.routing_rate, &k.transfer_cost, &k.outsource_cost, &k.penalty_cost}) {
    add(format_exact(*r));
  }
  add(std::to_string(k.big_m));
  return h;
}

}  // namespace droneplan
