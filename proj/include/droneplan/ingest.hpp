#pragma once

// Input and output formats: Solomon benchmark text, the native scenario JSON
// and assignment solutions as JSON.

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "droneplan/assignment.hpp"
#include "droneplan/coalition.hpp"
#include "droneplan/model.hpp"

namespace droneplan {

using Json = nlohmann::ordered_json;

/// Malformed input text; `line` is 1-based (0 when not tied to a line).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct SolomonRow {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double demand = 0.0;
  double ready_time = 0.0;
  double due_date = 0.0;
  double service_time = 0.0;
};

struct SolomonInstance {
  std::string name;
  int vehicles = 0;
  double capacity = 0.0;
  std::vector<SolomonRow> rows;  // file order; row 0 is the original depot
};

SolomonInstance parse_solomon(std::string_view text);

struct SynthesisConfig {
  std::vector<int> depot_rows;       // four row ids; empty picks rows near the quadrant centroids
  std::size_t customer_count = 60;   // first rows after row 0, in file order
  double coordinate_scale = 0.1;     // Solomon units -> km
  double kg_per_demand = 0.1;
  double max_weight = 5.0;           // kg
  double service_hours = 0.25;
  // Drone parameters, one drone per shipper.
  double capacity = 5.0;
  double trip_range = 10.0;
  double daily_range = 150.0;
  double shift_hours = 8.0;
  double speed = 30.0;
  Rational breakdown_prob = Rational(1, 40);
  Rational initial_cost = 100;
  // Costs and the uniform prior belief.
  Rational routing_rate = 1;
  Rational transfer_cost = 30;
  Rational outsource_cost = 16;
  Rational penalty_cost = 16;
  Rational belief = Rational(9, 10);
};

/// Scenario plus everything the JSON format carries besides it.
struct ScenarioDocument {
  DeliveryScenario scenario;
  BeliefMatrix beliefs;
  std::map<std::string, std::string> meta;
};

/// Four shippers p1..p4, customer k (1-based, file order) owned by
/// p((k - 1) mod 4 + 1). Throws std::invalid_argument when a depot row is one
/// of the selected customers or the request does not fit the instance.
ScenarioDocument synthesize_scenario(const SolomonInstance& instance, const SynthesisConfig& config);

Json scenario_to_json(const ScenarioDocument& doc);
/// Throws ParseError (line 0) describing the offending key.
ScenarioDocument scenario_from_json(const Json& json);

std::string write_scenario(const ScenarioDocument& doc);
ScenarioDocument read_scenario(std::string_view text);

/// Variable maps keyed by string ids, objective and breakdown as decimals.
Json solution_to_json(const DeliveryScenario& scenario, const AssignmentSolution& solution);

}  // namespace droneplan
