#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgrid/mirror_descent.hpp"
#include "mgrid/scenario.hpp"

namespace mgrid {

enum class Scheme { Stochastic, Exact, Oracle };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

struct SlotRecord {
  std::size_t t = 0;  // 0-based slot index
  Eigen::VectorXd p_gen_true;
  Eigen::VectorXd p_gen_obs;  // after clamping at zero
  int gen_clamped = 0;        // entries clamped in this slot
  Eigen::VectorXd c_out_true;
  Eigen::VectorXd c_out_obs;
  Eigen::VectorXd c_in_true;
  Eigen::VectorXd c_in_obs;
  Eigen::VectorXd p_ac;          // controllable (AC) load applied
  Eigen::VectorXd p_cons_total;  // base + AC load
  double p0 = 0.0;
  double loss = 0.0;
  Eigen::VectorXd c_in_next;     // indoor temperature after the slot
  double objective = 0.0;        // f with true parameters at the applied load
  double violation = 0.0;        // max constraint violation of the applied load
};

struct RunResult {
  Scheme scheme = Scheme::Stochastic;
  std::uint64_t seed = 0;
  std::vector<SlotRecord> slots;
  double d_radius = 0.0;  // stochastic scheme only
  double g_star = 0.0;
};

struct RunOptions {
  double exact_tolerance = 1e-8;
  int exact_max_iterations = 100000;
  int bound_samples = 256;
};

/// Closed-loop run of one control scheme. Stochastic: one mirror-descent
/// step per slot on noisy data. Exact: per-slot minimization on noisy data.
/// Oracle: per-slot minimization on true data. The constraint set is built
/// from true generation; thermal states advance with true physics unless
/// the scenario is static.
RunResult run_scheme(const Scenario& scenario, Scheme scheme,
                     std::optional<std::uint64_t> seed = std::nullopt, const RunOptions& options = {});

struct RunSummary {
  std::vector<double> loss, p0, objective, mean_abs_dev;
  double mean_loss = 0.0;
  double mean_p0 = 0.0;
  double mean_objective = 0.0;
  double mean_abs_temp_dev = 0.0;  // mean over slots and buildings of |c_in_next - c_set|
  double trailing_variance = 0.0;  // sample variance of objective over the last `window` slots
  std::size_t window = 0;
  double max_conservation_residual = 0.0;
  double max_violation = 0.0;
  bool all_feasible = true;
  int gen_clamped = 0;
};

RunSummary metrics(const RunResult& run, const Scenario& scenario, std::size_t window = 100);

/// Per-slot CSV (17 significant digits) and summary JSON writers.
void write_run_csv(const RunResult& run, const Scenario& scenario, std::ostream& out);
nlohmann::json summary_json(const RunResult& run, const RunSummary& summary);

}  // namespace mgrid
