#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "mgrid/simulator.hpp"

namespace mgrid {

/// Runs fn(0..count-1) on a small thread pool; results keep index order.
template <typename Fn>
auto parallel_map(std::size_t count, Fn fn, unsigned threads = 0) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<R> out(count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += threads) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

/// Seed of replication k derived from a base seed.
std::uint64_t replication_seed(std::uint64_t base, std::size_t k);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct RegretExperimentConfig {
  std::vector<std::uint64_t> horizons{100, 1000, 10000};
  std::size_t replications = 20;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 0;
};

struct RegretPoint {
  std::uint64_t horizon = 0;
  double mean = 0.0;
  double stddev = 0.0;  // NaN with a single replication
  double threshold = 0.0;  // 2 D G* sqrt(T/alpha) + eps with eps = 2 D G* sqrt(T/alpha)
  double tail_frequency = 0.0;
  double azuma_bound = 0.0;  // exp(-alpha eps^2 / (16 T D^2 G*^2))
  std::vector<double> samples;
};

struct RegretReport {
  double d_radius = 0.0;
  double g_star = 0.0;
  double alpha = 1.0;
  double f_star = 0.0;
  std::vector<RegretPoint> points;
  double slope = 0.0;
  bool variance_defined = true;
};

/// Stationary regret experiment: online mirror descent on the static
/// scenario's noisy objective, regret measured against the true objective
/// and its constrained minimizer. Throws AssumptionError when the scenario
/// is not static.
RegretReport run_regret_experiment(const Scenario& scenario, const RegretExperimentConfig& config);

nlohmann::json regret_json(const RegretReport& report);

/// Minimizer of the first slot's true objective over its feasible set.
PgdResult solve_true_slot(const Scenario& scenario, std::size_t slot, double tolerance = 1e-10);

}  // namespace mgrid
