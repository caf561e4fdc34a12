#pragma once

// Characteristic function over coalitions and the Shapley split of a
// coalition's optimal cost.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "droneplan/assignment.hpp"
#include "droneplan/model.hpp"
#include "droneplan/rational.hpp"
#include "droneplan/structure.hpp"

namespace droneplan {

/// Memo of coalition -> optimal assignment under one plan mode. Lookups are
/// thread-safe; a miss is solved outside the lock, so two threads missing the
/// same coalition may both solve it (the results are identical).
class CharacteristicCache {
 public:
  CharacteristicCache(DeliveryScenario scenario, PlanMode mode, SolveOptions options = {});

  const DeliveryScenario& scenario() const { return scenario_; }
  PlanMode mode() const { return mode_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  std::shared_ptr<const AssignmentSolution> solution(Coalition coalition);
  std::size_t solve_count() const;

  /// Solves every listed coalition, using up to `jobs` threads.
  void precompute(const std::vector<Coalition>& coalitions, unsigned jobs);

 private:
  DeliveryScenario scenario_;
  PlanMode mode_;
  SolveOptions options_;
  std::uint64_t fingerprint_;
  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, std::shared_ptr<const AssignmentSolution>> entries_;
  std::size_t solves_ = 0;
};

/// Optimal cost of `coalition`. Throws std::invalid_argument when the coalition
/// is empty or `scenario` is not the one the cache was built for.
Rational characteristic_cost(CharacteristicCache& cache, const DeliveryScenario& scenario,
                             Coalition coalition);

/// Every nonempty subset of `c`, ordered by bitmask.
std::vector<Coalition> subsets(Coalition c);

struct CostAllocation {
  Coalition coalition;
  std::map<std::size_t, Rational> shares;  // scenario shipper index -> share
};

constexpr std::size_t kShapleyLimit = 8;

/// Shapley values of an n-player cost game. `cost` takes a bitmask over the
/// players 0..n-1; the empty set is taken to cost 0 and never queried.
/// Throws SolverError("Shapley size limit ...") when n exceeds `limit`.
std::vector<Rational> shapley_values(std::size_t n,
                                     const std::function<Rational(std::uint64_t)>& cost,
                                     std::size_t limit = kShapleyLimit);

CostAllocation shapley(CharacteristicCache& cache, const DeliveryScenario& scenario,
                       Coalition coalition, std::size_t limit = kShapleyLimit);

/// Shapley split of an arbitrary coalition function (used for cost components
/// other than the optimal objective).
CostAllocation shapley_of(Coalition coalition, const std::function<Rational(Coalition)>& cost,
                          std::size_t limit = kShapleyLimit);

}  // namespace droneplan
