#include "droneplan/program.hpp"

#include <stdexcept>

namespace droneplan {

std::string Variable::name() const {
  std::string out = family + "[";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out += ',';
    out += labels[i];
  }
  return out + "]";
}

std::size_t LinearProgram::add_variable(Variable v) {
  const auto index = variables_.size();
  auto [it, inserted] = by_name_.emplace(v.name(), index);
  if (!inserted) {
    throw std::logic_error("duplicate variable " + it->first);
  }
  variables_.push_back(std::move(v));
  return index;
}

void LinearProgram::add_constraint(Constraint c) { constraints_.push_back(std::move(c)); }

void LinearProgram::add_objective(std::size_t var, const Rational& coef) {
  if (coef != 0) {
    objective_.push_back({var, coef});
  }
}

std::size_t LinearProgram::count(const std::string& family) const {
  std::size_t n = 0;
  for (const auto& v : variables_) {
    n += v.family == family ? 1 : 0;
  }
  return n;
}

std::optional<std::size_t> LinearProgram::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) {
    return std::nullopt;
  }
  return it->second;
}

Rational LinearProgram::objective_value(const std::vector<Rational>& values) const {
  Rational total;
  for (const auto& t : objective_) {
    total += t.coef * values.at(t.var);
  }
  return total;
}

std::vector<Violation> LinearProgram::check(const std::vector<Rational>& values) const {
  std::vector<Violation> out;
  if (values.size() != variables_.size()) {
    out.push_back({"shape", "", "expected " + std::to_string(variables_.size()) + " values"});
    return out;
  }
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    const auto& v = variables_[i];
    const auto& x = values[i];
    if (v.lower && x < *v.lower) {
      out.push_back({"bounds", v.name(), "below lower bound"});
    }
    if (v.upper && x > *v.upper) {
      out.push_back({"bounds", v.name(), "above upper bound"});
    }
    if (v.kind != VarKind::continuous && x.get_den() != 1) {
      out.push_back({"integrality", v.name(), "fractional value " + x.get_str()});
    }
  }
  for (const auto& c : constraints_) {
    Rational lhs;
    for (const auto& t : c.terms) {
      lhs += t.coef * values[t.var];
    }
    bool ok = true;
    switch (c.sense) {
      case Sense::less_equal: ok = lhs <= c.rhs; break;
      case Sense::equal: ok = lhs == c.rhs; break;
      case Sense::greater_equal: ok = lhs >= c.rhs; break;
    }
    if (!ok) {
      out.push_back({c.role, c.label, "lhs " + lhs.get_str() + " vs rhs " + c.rhs.get_str()});
    }
  }
  return out;
}

}  // namespace droneplan
