#include "droneplan/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace droneplan {

ParseError::ParseError(std::size_t line, const std::string& message)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

namespace {

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

bool blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

double number(const std::string& word, std::size_t line, const std::string& what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec != std::errc{} || ptr != word.data() + word.size() || !std::isfinite(value)) {
    throw ParseError(line, what + ": invalid number '" + word + "'");
  }
  return value;
}

std::string upper(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return text;
}

}  // namespace

SolomonInstance parse_solomon(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= text.size();) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  std::size_t at = 0;  // index into lines; line number is at + 1
  auto next_nonblank = [&](const char* expected) {
    while (at < lines.size() && blank(lines[at])) ++at;
    if (at >= lines.size()) {
      throw ParseError(std::max<std::size_t>(lines.size(), 1), std::string("missing ") + expected);
    }
    return lines[at++];
  };

  SolomonInstance inst;
  if (lines.empty() || blank(lines[0])) throw ParseError(1, "missing instance name");
  inst.name = split_words(lines[0]).front();
  at = 1;

  auto expect_keyword = [&](const char* keyword) {
    const auto line = next_nonblank(keyword);
    const auto words = split_words(line);
    if (upper(words.front()) != keyword) {
      throw ParseError(at, std::string("expected ") + keyword + " section, found '" + std::string(line) + "'");
    }
  };

  expect_keyword("VEHICLE");
  next_nonblank("vehicle header");
  {
    const auto words = split_words(next_nonblank("vehicle counts"));
    if (words.size() != 2) throw ParseError(at, "vehicle line needs NUMBER and CAPACITY");
    const double count = number(words[0], at, "vehicle number");
    if (count < 0 || count != std::floor(count)) throw ParseError(at, "vehicle number must be a non-negative integer");
    inst.vehicles = static_cast<int>(count);
    inst.capacity = number(words[1], at, "vehicle capacity");
  }
  expect_keyword("CUSTOMER");
  next_nonblank("customer header");

  std::set<int> seen;
  for (; at < lines.size(); ++at) {
    if (blank(lines[at])) continue;
    const auto line_no = at + 1;
    const auto words = split_words(lines[at]);
    if (words.size() != 7) {
      throw ParseError(line_no, "customer row needs 7 fields, found " + std::to_string(words.size()));
    }
    const std::string row = "customer row '" + words[0] + "'";
    SolomonRow r;
    const double id = number(words[0], line_no, row + " CUST NO.");
    if (id < 0 || id != std::floor(id)) throw ParseError(line_no, row + ": id must be a non-negative integer");
    r.id = static_cast<int>(id);
    r.x = number(words[1], line_no, row + " XCOORD.");
    r.y = number(words[2], line_no, row + " YCOORD.");
    r.demand = number(words[3], line_no, row + " DEMAND");
    r.ready_time = number(words[4], line_no, row + " READY TIME");
    r.due_date = number(words[5], line_no, row + " DUE DATE");
    r.service_time = number(words[6], line_no, row + " SERVICE TIME");
    if (r.x < 0 || r.y < 0 || r.demand < 0) {
      throw ParseError(line_no, row + ": coordinates and demand must be non-negative");
    }
    if (!seen.insert(r.id).second) throw ParseError(line_no, row + ": duplicate id");
    inst.rows.push_back(r);
  }
  if (inst.rows.empty()) throw ParseError(lines.size(), "no customer rows");
  return inst;
}

ScenarioDocument synthesize_scenario(const SolomonInstance& inst, const SynthesisConfig& cfg) {
  constexpr std::size_t kShippers = 4;
  if (inst.rows.empty()) throw std::invalid_argument("instance has no rows");
  if (cfg.customer_count > inst.rows.size() - 1) {
    throw std::invalid_argument("customer_count " + std::to_string(cfg.customer_count) +
                                " exceeds the " + std::to_string(inst.rows.size() - 1) +
                                " rows after the depot row");
  }
  std::vector<const SolomonRow*> selected;
  for (std::size_t k = 1; k <= cfg.customer_count; ++k) selected.push_back(&inst.rows[k]);
  auto is_selected = [&](int id) {
    return std::any_of(selected.begin(), selected.end(), [&](const SolomonRow* r) { return r->id == id; });
  };
  auto row_by_id = [&](int id) -> const SolomonRow& {
    for (const auto& r : inst.rows) {
      if (r.id == id) return r;
    }
    throw std::invalid_argument("unknown depot row " + std::to_string(id));
  };

  std::vector<const SolomonRow*> depots;
  if (!cfg.depot_rows.empty()) {
    if (cfg.depot_rows.size() != kShippers) throw std::invalid_argument("exactly four depot rows are required");
    std::set<int> distinct(cfg.depot_rows.begin(), cfg.depot_rows.end());
    if (distinct.size() != kShippers) throw std::invalid_argument("depot rows must be distinct");
    for (int id : cfg.depot_rows) {
      if (is_selected(id)) {
        throw std::invalid_argument("depot row " + std::to_string(id) + " is also a selected customer");
      }
      depots.push_back(&row_by_id(id));
    }
  } else {
    // Quadrants around the customer centroid (the whole instance if no customers).
    const auto& cloud = selected.empty() ? std::vector<const SolomonRow*>{} : selected;
    double cx = 0, cy = 0;
    std::vector<const SolomonRow*> pts = cloud;
    if (pts.empty()) {
      for (const auto& r : inst.rows) pts.push_back(&r);
    }
    for (auto* r : pts) {
      cx += r->x;
      cy += r->y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
    // Order: lower-left, lower-right, upper-left, upper-right.
    std::vector<const SolomonRow*> used;
    for (std::size_t qd = 0; qd < kShippers; ++qd) {
      const bool right = qd % 2 == 1, top = qd >= 2;
      double sx = 0, sy = 0;
      int count = 0;
      for (auto* r : pts) {
        if ((r->x >= cx) == right && (r->y >= cy) == top) {
          sx += r->x;
          sy += r->y;
          ++count;
        }
      }
      const double tx = count ? sx / count : cx;
      const double ty = count ? sy / count : cy;
      const SolomonRow* best = nullptr;
      double best_d = 0;
      for (const auto& r : inst.rows) {
        if (is_selected(r.id) || std::find(used.begin(), used.end(), &r) != used.end()) continue;
        const double d = std::hypot(r.x - tx, r.y - ty);
        if (!best || d < best_d || (d == best_d && r.id < best->id)) {
          best = &r;
          best_d = d;
        }
      }
      if (!best) throw std::invalid_argument("not enough unselected rows to place four depots");
      used.push_back(best);
    }
    depots = used;
  }

  std::vector<Shipper> shippers;
  std::vector<Drone> drones;
  for (std::size_t p = 0; p < kShippers; ++p) {
    const auto id = "p" + std::to_string(p + 1);
    shippers.push_back({id, {depots[p]->x * cfg.coordinate_scale, depots[p]->y * cfg.coordinate_scale}, {}, {}});
    drones.push_back({"d" + std::to_string(p + 1), id, cfg.capacity, cfg.trip_range, cfg.daily_range,
                      cfg.shift_hours, cfg.speed, cfg.breakdown_prob, cfg.initial_cost});
  }
  std::vector<Customer> customers;
  const int width = std::max<int>(3, static_cast<int>(std::to_string(cfg.customer_count).size()));
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const auto& r = *selected[k];
    std::string num = std::to_string(k + 1);
    num.insert(0, static_cast<std::size_t>(width) - num.size(), '0');
    customers.push_back({"c" + num,
                         {r.x * cfg.coordinate_scale, r.y * cfg.coordinate_scale},
                         std::min(cfg.max_weight, r.demand * cfg.kg_per_demand),
                         cfg.service_hours,
                         "p" + std::to_string(k % kShippers + 1),
                         r.ready_time,
                         r.due_date});
  }
  const auto big_m = static_cast<std::int64_t>(std::max<std::size_t>(1, customers.size()) * kShippers * kShippers + 1);
  ScenarioDocument doc{DeliveryScenario(std::move(shippers), std::move(customers), std::move(drones),
                                        {cfg.routing_rate, cfg.transfer_cost, cfg.outsource_cost,
                                         cfg.penalty_cost, big_m}),
                       BeliefMatrix(kShippers, cfg.belief),
                       {}};
  doc.meta["source"] = inst.name;
  std::string rows;
  for (auto* d : depots) rows += (rows.empty() ? "" : ",") + std::to_string(d->id);
  doc.meta["depot_rows"] = rows;
  doc.meta["coordinate_scale"] = std::to_string(cfg.coordinate_scale);
  return doc;
}

Json scenario_to_json(const ScenarioDocument& doc) {
  const auto& s = doc.scenario;
  Json out;
  out["v"] = 1;
  Json meta = Json::object();
  for (const auto& [k, v] : doc.meta) meta[k] = v;
  out["meta"] = meta;
  Json shippers = Json::array();
  for (const auto& p : s.shippers()) {
    shippers.push_back({{"id", p.id},
                        {"depot", {{"x", p.depot.x}, {"y", p.depot.y}}},
                        {"drones", p.drones},
                        {"customers", p.customers}});
  }
  out["shippers"] = shippers;
  Json customers = Json::array();
  for (const auto& c : s.customers()) {
    Json j{{"id", c.id},
           {"x", c.location.x},
           {"y", c.location.y},
           {"weight", c.weight},
           {"service_time", c.service_time},
           {"owner", c.owner}};
    if (c.ready_time) j["ready_time"] = *c.ready_time;
    if (c.due_date) j["due_date"] = *c.due_date;
    customers.push_back(j);
  }
  out["customers"] = customers;
  Json drones = Json::array();
  for (const auto& d : s.drones()) {
    drones.push_back({{"id", d.id},
                      {"home", d.home_shipper},
                      {"capacity", d.capacity},
                      {"trip_range", d.trip_range},
                      {"daily_range", d.daily_range},
                      {"shift_hours", d.shift_hours},
                      {"speed", d.speed},
                      {"breakdown_prob", to_text(d.breakdown_prob)},
                      {"initial_cost", to_text(d.initial_cost)}});
  }
  out["drones"] = drones;
  const auto& k = s.costs();
  out["costs"] = {{"routing_rate", to_text(k.routing_rate)},
                  {"transfer_cost", to_text(k.transfer_cost)},
                  {"outsource_cost", to_text(k.outsource_cost)},
                  {"penalty_cost", to_text(k.penalty_cost)},
                  {"big_m", k.big_m}};
  // The most common value becomes the default; other pairs are listed.
  const auto ids = s.shipper_ids();
  const auto n = doc.beliefs.size();
  std::map<Rational, int> freq;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p != q) ++freq[doc.beliefs(p, q)];
    }
  }
  Rational fallback = 1;
  int best = -1;
  for (const auto& [v, c] : freq) {
    if (c > best) {
      best = c;
      fallback = v;
    }
  }
  Json pairs = Json::array();
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p != q && doc.beliefs(p, q) != fallback) {
        pairs.push_back({{"from", ids[p]}, {"to", ids[q]}, {"lambda", to_text(doc.beliefs(p, q))}});
      }
    }
  }
  out["beliefs"] = {{"default", to_text(fallback)}, {"pairs", pairs}};
  return out;
}

namespace {

const Json& field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(0, where + ": missing key '" + key + "'");
  return obj.at(key);
}

double real(const Json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_number()) throw ParseError(0, where + "." + key + ": expected a number");
  return v.get<double>();
}

std::string text(const Json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_string()) throw ParseError(0, where + "." + key + ": expected a string");
  return v.get<std::string>();
}

Rational exact(const Json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  try {
    if (v.is_string()) return parse_text(v.get<std::string>());
    if (v.is_number_integer()) return Rational(mpz_class(std::to_string(v.get<std::int64_t>())));
    if (v.is_number()) return from_shortest_double(v.get<double>());
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, where + "." + key + ": " + e.what());
  }
  throw ParseError(0, where + "." + key + ": expected a decimal string");
}

std::vector<std::string> id_list(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) return {};
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ParseError(0, where + "." + key + ": expected an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ParseError(0, where + "." + key + ": expected string ids");
    out.push_back(e.get<std::string>());
  }
  return out;
}

const Json& array_field(const Json& obj, const char* key) {
  const auto& v = field(obj, key, "scenario");
  if (!v.is_array()) throw ParseError(0, std::string("scenario.") + key + ": expected an array");
  return v;
}

}  // namespace

ScenarioDocument scenario_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError(0, "scenario: expected a JSON object");
  if (!j.contains("v") || j.at("v") != 1) throw ParseError(0, "scenario: unsupported schema version (expected v: 1)");
  std::vector<Shipper> shippers;
  for (const auto& e : array_field(j, "shippers")) {
    const std::string where = "shippers[" + (e.is_object() && e.contains("id") ? e["id"].dump() : "?") + "]";
    const auto& depot = field(e, "depot", where);
    shippers.push_back({text(e, "id", where),
                        {real(depot, "x", where + ".depot"), real(depot, "y", where + ".depot")},
                        id_list(e, "drones", where),
                        id_list(e, "customers", where)});
  }
  std::vector<Customer> customers;
  for (const auto& e : array_field(j, "customers")) {
    const std::string where = "customers[" + (e.is_object() && e.contains("id") ? e["id"].dump() : "?") + "]";
    Customer c{text(e, "id", where),
               {real(e, "x", where), real(e, "y", where)},
               real(e, "weight", where),
               real(e, "service_time", where),
               text(e, "owner", where),
               std::nullopt,
               std::nullopt};
    if (e.contains("ready_time")) c.ready_time = real(e, "ready_time", where);
    if (e.contains("due_date")) c.due_date = real(e, "due_date", where);
    customers.push_back(std::move(c));
  }
  std::vector<Drone> drones;
  for (const auto& e : array_field(j, "drones")) {
    const std::string where = "drones[" + (e.is_object() && e.contains("id") ? e["id"].dump() : "?") + "]";
    drones.push_back({text(e, "id", where), text(e, "home", where), real(e, "capacity", where),
                      real(e, "trip_range", where), real(e, "daily_range", where),
                      real(e, "shift_hours", where), real(e, "speed", where),
                      exact(e, "breakdown_prob", where), exact(e, "initial_cost", where)});
  }
  const auto& k = field(j, "costs", "scenario");
  CostParams costs{exact(k, "routing_rate", "costs"), exact(k, "transfer_cost", "costs"),
                   exact(k, "outsource_cost", "costs"), exact(k, "penalty_cost", "costs"), 0};
  const auto& bm = field(k, "big_m", "costs");
  if (!bm.is_number_integer()) throw ParseError(0, "costs.big_m: expected an integer");
  costs.big_m = bm.get<std::int64_t>();

  ScenarioDocument doc;
  doc.scenario = DeliveryScenario(std::move(shippers), std::move(customers), std::move(drones), costs);
  const auto ids = doc.scenario.shipper_ids();
  Rational fallback = 1;
  const Json* pairs = nullptr;
  if (j.contains("beliefs")) {
    const auto& b = j.at("beliefs");
    if (b.contains("default")) fallback = exact(b, "default", "beliefs");
    if (b.contains("pairs")) pairs = &b.at("pairs");
  }
  if (fallback < 0 || fallback > 1) throw ParseError(0, "beliefs.default: must lie in [0, 1]");
  doc.beliefs = BeliefMatrix(ids.size(), fallback);
  if (pairs) {
    for (const auto& e : *pairs) {
      const auto from = doc.scenario.find_shipper(text(e, "from", "beliefs.pairs"));
      const auto to = doc.scenario.find_shipper(text(e, "to", "beliefs.pairs"));
      if (!from || !to) throw ParseError(0, "beliefs.pairs: unknown shipper " + e.dump());
      try {
        doc.beliefs.set(*from, *to, exact(e, "lambda", "beliefs.pairs"));
      } catch (const std::invalid_argument& err) {
        throw ParseError(0, "beliefs.pairs: " + std::string(err.what()));
      }
    }
  }
  if (j.contains("meta") && j.at("meta").is_object()) {
    for (const auto& [key, value] : j.at("meta").items()) {
      doc.meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
  }
  return doc;
}

std::string write_scenario(const ScenarioDocument& doc) { return scenario_to_json(doc).dump(2) + "\n"; }

ScenarioDocument read_scenario(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(0, std::string("scenario JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

Json solution_to_json(const DeliveryScenario& s, const AssignmentSolution& sol) {
  auto shipper = [&](std::size_t slot) { return s.shippers()[sol.depots[slot]].id; };
  auto customer = [&](std::size_t slot) { return s.customers()[sol.customers[slot]].id; };
  auto drone = [&](std::size_t slot) { return s.drones()[sol.drones[slot]].id; };
  const auto b = evaluate_objective(s, sol.coalition, sol, sol.mode);

  Json out;
  out["v"] = 1;
  out["mode"] = to_string(sol.mode);
  Json members = Json::array();
  for (std::size_t p = 0; p < sol.depots.size(); ++p) members.push_back(shipper(p));
  out["coalition"] = members;
  out["objective"] = format_decimal(sol.objective);
  out["objective_exact"] = to_text(sol.objective);
  out["breakdown"] = {{"initial", format_decimal(b.initial)},
                      {"routing", format_decimal(b.routing)},
                      {"transfer", format_decimal(b.transfer)},
                      {"outsource", format_decimal(b.outsource)},
                      {"expected_penalty", format_decimal(b.expected_penalty)}};
  Json use = Json::object(), depot_of = Json::object(), count = Json::object();
  for (std::size_t d = 0; d < sol.drones.size(); ++d) {
    use[drone(d)] = sol.use_drone[d] ? 1 : 0;
    depot_of[drone(d)] = shipper(sol.drone_depot[d]);
    count[drone(d)] = sol.served_count[d];
  }
  out["use_drone"] = use;
  Json assign = Json::array(), transfer = Json::array(), outsourced = Json::object();
  for (std::size_t i = 0; i < sol.customers.size(); ++i) {
    outsourced[customer(i)] = sol.outsourced(i) ? 1 : 0;
    if (sol.served_by[i]) {
      const auto d = *sol.served_by[i];
      assign.push_back({{"customer", customer(i)}, {"drone", drone(d)}, {"depot", shipper(sol.drone_depot[d])}});
    }
    if (sol.transfer[i]) {
      transfer.push_back({{"customer", customer(i)},
                          {"from", shipper(sol.transfer[i]->first)},
                          {"to", shipper(sol.transfer[i]->second)}});
    }
  }
  out["assign"] = assign;
  out["outsourced"] = outsourced;
  Json active = Json::object();
  for (std::size_t p = 0; p < sol.depots.size(); ++p) active[shipper(p)] = sol.transfers_active[p] ? 1 : 0;
  out["transfers_active"] = active;
  out["transfer"] = transfer;
  out["depot_of_drone"] = depot_of;
  out["served_count"] = count;
  if (sol.mode == PlanMode::stochastic) {
    Json aux = Json::object();
    for (std::size_t d = 0; d < sol.drones.size(); ++d) {
      Json x = Json::array(), v = Json::array(), a = Json::array();
      for (std::size_t k = 0; k < sol.prefix[d].size(); ++k) {
        x.push_back(sol.prefix[d][k]);
        v.push_back(to_text(sol.penalty_value[d][k]));
        a.push_back(to_text(sol.penalty_share[d][k]));
      }
      aux[drone(d)] = {{"X", x}, {"V", v}, {"A", a}};
    }
    out["penalty_aux"] = aux;
  }
  return out;
}

}  // namespace droneplan
