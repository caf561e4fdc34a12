#include "droneplan/coalition.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace droneplan {

BeliefMatrix::BeliefMatrix(std::size_t n, const Rational& initial)
    : n_(n), values_(n * n, initial) {
  if (initial < 0 || initial > 1) throw std::invalid_argument("belief must lie in [0, 1]");
}

std::size_t BeliefMatrix::index(std::size_t p, std::size_t q) const {
  if (p >= n_ || q >= n_) throw std::out_of_range("belief index out of range");
  if (p == q) throw std::invalid_argument("no self belief");
  return p * n_ + q;
}

const Rational& BeliefMatrix::operator()(std::size_t p, std::size_t q) const {
  return values_[index(p, q)];
}

void BeliefMatrix::set(std::size_t p, std::size_t q, const Rational& value) {
  if (value < 0 || value > 1) throw std::invalid_argument("belief must lie in [0, 1]");
  values_[index(p, q)] = value;
}

Rational expected_payoff(std::size_t p, Coalition coalition, const Rational& share,
                         const BeliefMatrix& beliefs, const TransferMatrix& theta,
                         const Rational& c_pen) {
  const auto partners = coalition.without(p).members();
  const std::size_t combos = std::size_t{1} << partners.size();
  Rational total = share;
  // Bit k of `bad` set: partner k is of the bad type in this combination.
  for (std::size_t bad = 0; bad < combos; ++bad) {
    Rational omega = 1;
    for (std::size_t k = 0; k < partners.size(); ++k) {
      const auto& l = beliefs(p, partners[k]);
      omega *= ((bad >> k) & 1U) ? 1 - l : l;
    }
    for (std::size_t k = 0; k < partners.size(); ++k) {
      if (!((bad >> k) & 1U)) continue;
      const auto q = partners[k];
      total += omega * theta[p][q] * c_pen * (1 - beliefs(p, q));
    }
  }
  return total;
}

Rational expected_payoff_factorized(std::size_t p, Coalition coalition, const Rational& share,
                                    const BeliefMatrix& beliefs, const TransferMatrix& theta,
                                    const Rational& c_pen) {
  Rational total = share;
  for (auto q : coalition.without(p).members()) {
    const Rational miss = 1 - beliefs(p, q);
    total += miss * miss * theta[p][q] * c_pen;
  }
  return total;
}

PayoffModel::PayoffModel(CharacteristicCache& cache, BeliefMatrix beliefs, unsigned jobs)
    : cache_(cache),
      beliefs_(std::move(beliefs)),
      jobs_(jobs),
      n_(cache.scenario().shippers().size()) {
  if (beliefs_.size() != n_) throw std::invalid_argument("belief matrix size mismatch");
}

void PayoffModel::prepare(const std::vector<Coalition>& coalitions) {
  std::vector<Coalition> all;
  for (auto c : coalitions) {
    for (auto s : subsets(c)) all.push_back(s);
  }
  std::sort(all.begin(), all.end(), [](Coalition a, Coalition b) { return a.mask < b.mask; });
  all.erase(std::unique(all.begin(), all.end()), all.end());
  cache_.precompute(all, jobs_);
}

const CostAllocation& PayoffModel::allocation(Coalition c) {
  auto it = allocations_.find(c.mask);
  if (it == allocations_.end()) {
    prepare({c});
    it = allocations_.emplace(c.mask, shapley(cache_, cache_.scenario(), c)).first;
  }
  return it->second;
}

const TransferMatrix& PayoffModel::theta(Coalition c) {
  auto it = thetas_.find(c.mask);
  if (it == thetas_.end()) {
    it = thetas_.emplace(c.mask, transfer_counts(*cache_.solution(c), n_)).first;
  }
  return it->second;
}

Rational PayoffModel::payoff(std::size_t p, Coalition c) {
  if (!c.contains(p)) throw std::invalid_argument("shipper is not a member of the coalition");
  return expected_payoff_factorized(p, c, allocation(c).shares.at(p), beliefs_, theta(c),
                                    cache_.scenario().costs().penalty_cost);
}

Preference preference_value(std::size_t p, Coalition coalition,
                            const CoalitionStructure& structure, PayoffModel& payoffs) {
  if (!coalition.contains(p) ||
      std::find(structure.blocks.begin(), structure.blocks.end(), coalition) ==
          structure.blocks.end()) {
    throw std::invalid_argument("coalition is not a block of the structure containing the shipper");
  }
  if (coalition.size() > 1) {
    for (auto q : coalition.members()) {
      if (payoffs.payoff(q, coalition) > payoffs.payoff(q, Coalition::single(q))) {
        return std::nullopt;
      }
    }
  }
  return payoffs.payoff(p, coalition);
}

bool strictly_better(const Preference& after, const Preference& before) {
  return after && (!before || *after < *before);
}

std::string format_preference(const Preference& value, int digits) {
  return value ? format_decimal(*value, digits) : "INVALID";
}

namespace {

bool has_visited(const std::vector<Coalition>& list, Coalition c) {
  return std::find(list.begin(), list.end(), c) != list.end();
}

// Every block of every neighbor, so their Shapley inputs can be solved together.
std::vector<Coalition> neighbor_blocks(const std::vector<CoalitionStructure>& around) {
  std::vector<Coalition> out;
  for (const auto& s : around) out.insert(out.end(), s.blocks.begin(), s.blocks.end());
  return out;
}

}  // namespace

MergeSplitResult merge_split(PayoffModel& payoffs, std::optional<CoalitionStructure> initial,
                             MergeSplitOptions options) {
  const auto n = payoffs.shipper_count();
  MergeSplitResult result;
  result.structure = initial ? *initial : CoalitionStructure::singletons(n);
  if (!is_partition(result.structure, n)) throw std::invalid_argument("initial structure is not a partition");
  result.visited.resize(n);
  for (std::size_t p = 0; p < n; ++p) result.visited[p].push_back(result.structure.block_of(p));
  const auto cap = options.max_switches ? options.max_switches : n * bell_number(n);

  for (bool changed = true; changed;) {
    changed = false;
    const auto around = neighbors(result.structure, n);
    payoffs.prepare(neighbor_blocks(around));
    for (const auto& next : around) {
      for (auto p : movers(result.structure, next, n)) {
        const auto to = next.block_of(p);
        Preference after;
        if (!(to.size() > 1 && has_visited(result.visited[p], to))) {
          after = preference_value(p, to, next, payoffs);
        }
        const auto before = preference_value(p, result.structure.block_of(p), result.structure, payoffs);
        if (!strictly_better(after, before)) continue;
        result.trace.push_back({result.trace.size() + 1, result.structure, next, p, before, after});
        result.visited[p].push_back(to);
        result.structure = next;
        changed = true;
        break;
      }
      if (changed) break;
    }
    if (changed && result.trace.size() >= cap) {
      result.capped = true;
      break;
    }
  }
  return result;
}

std::vector<Deviation> improving_deviations(PayoffModel& payoffs,
                                            const CoalitionStructure& structure,
                                            const std::vector<std::vector<Coalition>>* visited) {
  const auto n = payoffs.shipper_count();
  std::vector<Deviation> out;
  for (const auto& next : neighbors(structure, n)) {
    for (auto p : movers(structure, next, n)) {
      const auto to = next.block_of(p);
      if (visited && to.size() > 1 && has_visited((*visited)[p], to)) continue;
      auto after = preference_value(p, to, next, payoffs);
      auto before = preference_value(p, structure.block_of(p), structure, payoffs);
      if (strictly_better(after, before)) out.push_back({next, p, before, after});
    }
  }
  return out;
}

Rational TransitionModel::entry(std::size_t from, std::size_t to) const {
  for (const auto& [col, value] : rows.at(from)) {
    if (col == to) return value;
  }
  return 0;
}

TransitionModel transition_matrix(PayoffModel& payoffs, const Rational& alpha,
                                  const Rational& epsilon) {
  if (alpha <= 0 || alpha >= 1) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (epsilon < 0 || epsilon > 1) throw std::invalid_argument("epsilon must lie in [0, 1]");
  const auto n = payoffs.shipper_count();
  TransitionModel model;
  model.shipper_ids = payoffs.shipper_ids();
  model.states = enumerate_structures(n);
  model.alpha = alpha;
  model.epsilon = epsilon;
  model.rows.resize(model.states.size());

  payoffs.prepare(subsets(Coalition::all(n)));
  auto index_of = [&](const CoalitionStructure& s) {
    auto it = std::lower_bound(model.states.begin(), model.states.end(), s, structure_less);
    return static_cast<std::size_t>(it - model.states.begin());
  };

  for (std::size_t m = 0; m < model.states.size(); ++m) {
    const auto& from = model.states[m];
    Rational off;
    auto& row = model.rows[m];
    for (const auto& to : neighbors(from, n)) {
      const auto involved = movers(from, to, n);
      bool all_prefer = true;
      for (auto b : involved) {
        const auto after = preference_value(b, to.block_of(b), to, payoffs);
        const auto before = preference_value(b, from.block_of(b), from, payoffs);
        all_prefer = all_prefer && strictly_better(after, before);
      }
      const auto k = static_cast<unsigned>(involved.size());
      const Rational beta = pow_int(alpha, k) * pow_int(1 - alpha, static_cast<unsigned>(n) - k);
      const Rational value = (all_prefer ? epsilon : 1 - epsilon) * beta;
      off += value;
      row.emplace_back(index_of(to), value);
    }
    const Rational stay = 1 - off;
    if (stay < 0) throw std::domain_error("transition mass exceeds 1");
    row.emplace_back(m, stay);
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return model;
}

namespace {

constexpr std::size_t kDenseLimit = 500;

// Strongly connected components with no edge leaving them.
std::vector<std::vector<std::size_t>> closed_classes(const TransitionModel& model) {
  const auto size = model.states.size();
  std::vector<int> index(size, -1), low(size, 0), comp(size, -1);
  std::vector<bool> on_stack(size, false);
  std::vector<std::size_t> stack;
  int counter = 0, comps = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (const auto& [w, value] : model.rows[v]) {
      if (value <= 0) continue;
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      for (;;) {
        const auto w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = comps;
        if (w == v) break;
      }
      ++comps;
    }
  };
  for (std::size_t v = 0; v < size; ++v) {
    if (index[v] < 0) visit(v);
  }
  std::vector<bool> leaks(static_cast<std::size_t>(comps), false);
  for (std::size_t v = 0; v < size; ++v) {
    for (const auto& [w, value] : model.rows[v]) {
      if (value > 0 && comp[w] != comp[v]) leaks[static_cast<std::size_t>(comp[v])] = true;
    }
  }
  std::vector<std::vector<std::size_t>> out;
  std::vector<int> slot(static_cast<std::size_t>(comps), -1);
  for (std::size_t v = 0; v < size; ++v) {
    const auto c = static_cast<std::size_t>(comp[v]);
    if (leaks[c]) continue;
    if (slot[c] < 0) {
      slot[c] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[static_cast<std::size_t>(slot[c])].push_back(v);
  }
  return out;
}

}  // namespace

StationaryVector stationary_distribution(const TransitionModel& model) {
  const auto size = model.states.size();
  if (size == 0) throw std::invalid_argument("empty transition model");
  const auto classes = closed_classes(model);
  if (classes.size() > 1) {
    std::string msg = "non-unique stationary distribution; closed classes:";
    for (const auto& cls : classes) {
      msg += " {";
      for (std::size_t k = 0; k < cls.size(); ++k) {
        if (k) msg += "; ";
        msg += format_structure(model.states[cls[k]], model.shipper_ids);
      }
      msg += "}";
    }
    throw SolverError(msg);
  }

  std::vector<std::vector<std::pair<std::size_t, double>>> q(size);
  for (std::size_t m = 0; m < size; ++m) {
    for (const auto& [col, value] : model.rows[m]) q[m].emplace_back(col, to_double(value));
  }

  Eigen::VectorXd pi(static_cast<Eigen::Index>(size));
  if (size <= kDenseLimit) {
    // Balance equations (Q^T - I) pi = 0 with the last one replaced by sum(pi) = 1.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
    for (std::size_t m = 0; m < size; ++m) {
      for (const auto& [col, value] : q[m]) a(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(m)) += value;
      a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) -= 1.0;
    }
    a.row(static_cast<Eigen::Index>(size - 1)).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
    rhs(static_cast<Eigen::Index>(size - 1)) = 1.0;
    pi = a.fullPivLu().solve(rhs);
  } else {
    // Lazy chain (Q + I) / 2 has the same stationary vector and is aperiodic.
    pi.setConstant(1.0 / static_cast<double>(size));
    for (int iter = 0; iter < 1'000'000; ++iter) {
      Eigen::VectorXd next = 0.5 * pi;
      for (std::size_t m = 0; m < size; ++m) {
        for (const auto& [col, value] : q[m]) next(static_cast<Eigen::Index>(col)) += 0.5 * pi(static_cast<Eigen::Index>(m)) * value;
      }
      const double delta = (next - pi).cwiseAbs().maxCoeff();
      pi = next;
      if (delta < 1e-15) break;
    }
  }
  for (auto& v : pi) v = std::max(v, 0.0);
  pi /= pi.sum();

  StationaryVector out;
  out.states = model.states;
  out.pi.assign(pi.begin(), pi.end());
  Eigen::VectorXd moved = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
  for (std::size_t m = 0; m < size; ++m) {
    for (const auto& [col, value] : q[m]) moved(static_cast<Eigen::Index>(col)) += pi(static_cast<Eigen::Index>(m)) * value;
  }
  out.residual = (moved - pi).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace droneplan
