#pragma once

// A symbolic mixed-integer linear program with exact rational coefficients.
// It is the inspectable form of the package-assignment model: variables carry
// their family name and index labels, constraints carry the role they encode.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "droneplan/rational.hpp"

namespace droneplan {

enum class VarKind { binary, integer, continuous };

struct Variable {
  std::string family;               // "W", "Y", "Z", "T", "M", "B", "N", "X", "A", "V"
  std::vector<std::string> labels;  // index ids, e.g. {"c1", "d1", "p1"}
  VarKind kind = VarKind::binary;
  std::optional<Rational> lower;    // nullopt: unbounded
  std::optional<Rational> upper;

  std::string name() const;         // "Y[c1,d1,p1]"
};

enum class Sense { less_equal, equal, greater_equal };

struct Term {
  std::size_t var = 0;
  Rational coef;
};

struct Constraint {
  std::string role;  // e.g. "allocation", "single_depot"
  std::string label; // index ids joined, for messages
  std::vector<Term> terms;
  Sense sense = Sense::less_equal;
  Rational rhs;
};

struct Violation {
  std::string role;
  std::string label;
  std::string detail;
};

class LinearProgram {
 public:
  std::size_t add_variable(Variable v);
  void add_constraint(Constraint c);
  void add_objective(std::size_t var, const Rational& coef);

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<Term>& objective() const { return objective_; }

  std::size_t count(const std::string& family) const;
  std::optional<std::size_t> find(const std::string& name) const;

  Rational objective_value(const std::vector<Rational>& values) const;

  /// Every bound, integrality and constraint violation of `values`.
  std::vector<Violation> check(const std::vector<Rational>& values) const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::vector<Term> objective_;
  std::map<std::string, std::size_t> by_name_;
};

}  // namespace droneplan
