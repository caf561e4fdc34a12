#pragma once

// Static Bayesian coalition formation: expected payoffs under beliefs about
// partner misbehavior, the preference function, merge-and-split, and the
// Markov chain over coalition structures.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "droneplan/costshare.hpp"
#include "droneplan/rational.hpp"
#include "droneplan/structure.hpp"

namespace droneplan {

/// lambda(p, q): shipper p's probability that q delivers the packages p hands
/// over. Indexed by scenario shipper index; the diagonal is not stored.
class BeliefMatrix {
 public:
  BeliefMatrix() = default;
  explicit BeliefMatrix(std::size_t n, const Rational& initial = 1);

  std::size_t size() const { return n_; }
  const Rational& operator()(std::size_t p, std::size_t q) const;
  /// Throws std::invalid_argument for p == q or values outside [0, 1].
  void set(std::size_t p, std::size_t q, const Rational& value);

  friend bool operator==(const BeliefMatrix&, const BeliefMatrix&) = default;

 private:
  std::size_t index(std::size_t p, std::size_t q) const;
  std::size_t n_ = 0;
  std::vector<Rational> values_;
};

/// theta[p][q]: packages shipper p transfers to shipper q.
using TransferMatrix = std::vector<std::vector<int>>;

/// mu_p by explicit enumeration of the partner type combinations.
Rational expected_payoff(std::size_t p, Coalition coalition, const Rational& share,
                         const BeliefMatrix& beliefs, const TransferMatrix& theta,
                         const Rational& c_pen);

/// Same value through independence: share + sum_q (1 - l_pq)^2 theta_pq c_pen.
Rational expected_payoff_factorized(std::size_t p, Coalition coalition, const Rational& share,
                                    const BeliefMatrix& beliefs, const TransferMatrix& theta,
                                    const Rational& c_pen);

/// Payoffs of every coalition under fixed beliefs, memoized. A coalition's
/// payoff does not depend on how the other shippers are grouped.
class PayoffModel {
 public:
  PayoffModel(CharacteristicCache& cache, BeliefMatrix beliefs, unsigned jobs = 1);

  CharacteristicCache& cache() { return cache_; }
  const BeliefMatrix& beliefs() const { return beliefs_; }
  std::size_t shipper_count() const { return n_; }
  std::vector<std::string> shipper_ids() const { return cache_.scenario().shipper_ids(); }

  const CostAllocation& allocation(Coalition c);
  const TransferMatrix& theta(Coalition c);
  Rational payoff(std::size_t p, Coalition c);

  /// Solves every subset of the listed coalitions up front (parallel when jobs > 1).
  void prepare(const std::vector<Coalition>& coalitions);

 private:
  CharacteristicCache& cache_;
  BeliefMatrix beliefs_;
  unsigned jobs_;
  std::size_t n_;
  std::map<std::uint64_t, CostAllocation> allocations_;
  std::map<std::uint64_t, TransferMatrix> thetas_;
};

/// nu_p: the payoff when every member pays no more than it would alone,
/// nullopt (never preferred) otherwise. Singletons are always acceptable.
using Preference = std::optional<Rational>;

Preference preference_value(std::size_t p, Coalition coalition,
                            const CoalitionStructure& structure, PayoffModel& payoffs);

/// True when `after` is acceptable and strictly cheaper than `before`; an
/// unacceptable `before` counts as infinitely expensive.
bool strictly_better(const Preference& after, const Preference& before);

std::string format_preference(const Preference& value, int digits = 2);

struct SwitchStep {
  std::size_t iteration = 0;
  CoalitionStructure from;
  CoalitionStructure to;
  std::size_t mover = 0;
  Preference before;
  Preference after;
};

struct MergeSplitResult {
  CoalitionStructure structure;
  std::vector<SwitchStep> trace;
  std::vector<std::vector<Coalition>> visited;  // per shipper, in visit order
  bool capped = false;                          // stopped at the switch cap
};

struct MergeSplitOptions {
  std::size_t max_switches = 0;  // 0: n * Bell(n)
};

/// Starts from `initial` (all singletons when omitted) and applies the first
/// improving single-shipper move, scanning neighbors in reporting order and
/// movers in index order, until none remains. A shipper may not re-enter a
/// multi-member coalition it has already been part of.
MergeSplitResult merge_split(PayoffModel& payoffs,
                             std::optional<CoalitionStructure> initial = std::nullopt,
                             MergeSplitOptions options = {});

struct Deviation {
  CoalitionStructure to;
  std::size_t mover = 0;
  Preference before;
  Preference after;
};

/// Every single-shipper move from `structure` that strictly improves the
/// mover's preference value. With `visited`, moves into a multi-member
/// coalition the mover has already visited are skipped.
std::vector<Deviation> improving_deviations(
    PayoffModel& payoffs, const CoalitionStructure& structure,
    const std::vector<std::vector<Coalition>>* visited = nullptr);

/// Sparse row-stochastic matrix over all coalition structures.
struct TransitionModel {
  std::vector<std::string> shipper_ids;
  std::vector<CoalitionStructure> states;
  std::vector<std::vector<std::pair<std::size_t, Rational>>> rows;  // column-sorted
  Rational alpha;
  Rational epsilon;

  Rational entry(std::size_t from, std::size_t to) const;
};

/// Entries: epsilon * beta when every moving shipper strictly prefers the
/// target, (1 - epsilon) * beta for other neighbors, 0 for non-neighbors, and
/// the residual on the diagonal. beta = alpha^|B| (1 - alpha)^(n - |B|) with B
/// the set of shippers whose single move produces the target.
/// Throws std::invalid_argument for alpha outside (0,1) or epsilon outside
/// [0,1], std::domain_error("transition mass exceeds 1") for a negative residual.
TransitionModel transition_matrix(PayoffModel& payoffs, const Rational& alpha,
                                  const Rational& epsilon);

struct StationaryVector {
  std::vector<CoalitionStructure> states;
  std::vector<double> pi;
  double residual = 0.0;  // max-norm of pi^T Q - pi^T
};

/// Dense solve with a normalization row; power iteration beyond 500 states.
/// Throws SolverError naming the closed classes when the chain has more than
/// one, since the stationary vector is then not unique.
StationaryVector stationary_distribution(const TransitionModel& model);

}  // namespace droneplan
