#include "droneplan/costshare.hpp"

#include <atomic>
#include <stdexcept>
#include <thread>

namespace droneplan {

CharacteristicCache::CharacteristicCache(DeliveryScenario scenario, PlanMode mode,
                                         SolveOptions options)
    : scenario_(std::move(scenario)),
      mode_(mode),
      options_(options),
      fingerprint_(droneplan::fingerprint(scenario_)) {}

std::shared_ptr<const AssignmentSolution> CharacteristicCache::solution(Coalition coalition) {
  if (coalition.empty()) throw std::invalid_argument("coalition must be nonempty");
  {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(coalition.mask);
    if (it != entries_.end()) return it->second;
  }
  auto solved = std::make_shared<const AssignmentSolution>(
      solve_assignment(scenario_, coalition, mode_, options_));
  std::lock_guard lock(mutex_);
  ++solves_;
  entries_[coalition.mask] = solved;
  return solved;
}

std::size_t CharacteristicCache::solve_count() const {
  std::lock_guard lock(mutex_);
  return solves_;
}

void CharacteristicCache::precompute(const std::vector<Coalition>& coalitions, unsigned jobs) {
  jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(coalitions.size())));
  if (jobs <= 1) {
    for (auto c : coalitions) solution(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (auto k = next++; k < coalitions.size(); k = next++) {
        try {
          solution(coalitions[k]);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

Rational characteristic_cost(CharacteristicCache& cache, const DeliveryScenario& scenario,
                             Coalition coalition) {
  if (fingerprint(scenario) != cache.fingerprint()) {
    throw std::invalid_argument("scenario fingerprint mismatch");
  }
  return cache.solution(coalition)->objective;
}

std::vector<Coalition> subsets(Coalition c) {
  std::vector<Coalition> out;
  // (sub - mask) & mask steps to the next larger submask.
  for (std::uint64_t sub = 0;;) {
    sub = (sub - c.mask) & c.mask;
    if (sub == 0) break;
    out.push_back(Coalition{sub});
  }
  return out;
}

std::vector<Rational> shapley_values(std::size_t n,
                                     const std::function<Rational(std::uint64_t)>& cost,
                                     std::size_t limit) {
  if (n > limit || n > 62) {
    throw SolverError("Shapley size limit: " + std::to_string(n) + " players exceed " +
                      std::to_string(limit));
  }
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  std::vector<Rational> value(full + 1);
  for (std::uint64_t m = 1; m <= full; ++m) value[m] = cost(m);

  // weight[k] = k! (n-k-1)! / n!
  std::vector<mpz_class> fact(n + 1, 1);
  for (std::size_t k = 1; k <= n; ++k) fact[k] = fact[k - 1] * static_cast<unsigned long>(k);
  std::vector<Rational> weight(n);
  for (std::size_t k = 0; k < n; ++k) {
    weight[k] = Rational(fact[k] * fact[n - k - 1], fact[n]);
    weight[k].canonicalize();
  }

  std::vector<Rational> phi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    for (std::uint64_t q = 0; q <= full; ++q) {
      if (q & bit) continue;
      const auto k = static_cast<std::size_t>(__builtin_popcountll(q));
      phi[i] += weight[k] * (value[q | bit] - value[q]);
    }
  }
  return phi;
}

CostAllocation shapley_of(Coalition coalition, const std::function<Rational(Coalition)>& cost,
                          std::size_t limit) {
  if (coalition.empty()) throw std::invalid_argument("coalition must be nonempty");
  const auto members = coalition.members();
  auto local = [&](std::uint64_t m) {
    Coalition c;
    for (std::size_t k = 0; k < members.size(); ++k) {
      if ((m >> k) & 1U) c = c.with(members[k]);
    }
    return cost(c);
  };
  const auto phi = shapley_values(members.size(), local, limit);
  CostAllocation out{coalition, {}};
  for (std::size_t k = 0; k < members.size(); ++k) out.shares[members[k]] = phi[k];
  return out;
}

CostAllocation shapley(CharacteristicCache& cache, const DeliveryScenario& scenario,
                       Coalition coalition, std::size_t limit) {
  if (coalition.size() > limit) {
    throw SolverError("Shapley size limit: " + std::to_string(coalition.size()) +
                      " players exceed " + std::to_string(limit));
  }
  return shapley_of(
      coalition, [&](Coalition c) { return characteristic_cost(cache, scenario, c); }, limit);
}

}  // namespace droneplan
