#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mgrid/feasible_set.hpp"

namespace mgrid {

using Vector = Eigen::VectorXd;

/// Mirror map. `grad_psi_dual` is the inverse of `grad_psi`. When
/// `bregman_project` is empty the geometry must be Euclidean and the
/// feasible set's Euclidean projection is used.
struct BregmanGeometry {
  std::function<double(const Vector&)> psi;
  std::function<Vector(const Vector&)> grad_psi;
  std::function<Vector(const Vector&)> grad_psi_dual;
  std::function<Vector(const FeasibleSet&, const Vector&)> bregman_project;
  double alpha = 1.0;
  bool euclidean = false;

  /// psi(x) = 1/2 ||x||^2, alpha = 1.
  static BregmanGeometry euclidean_geometry();

  Vector project(const FeasibleSet& set, const Vector& w) const;
};

double bregman_divergence(const BregmanGeometry& geom, const Vector& x, const Vector& y);

/// w = grad_psi_dual(grad_psi(a) - eta * grad)
Vector md_step(const BregmanGeometry& geom, const Vector& a, const Vector& grad, double eta);

/// eta_t = D sqrt(alpha) / (G_star sqrt(t)), t >= 1.
double step_size(std::uint64_t t, double d_radius, double g_star, double alpha);

struct MdConfig {
  double d_radius = 1.0;
  double g_star = 1.0;
  Vector initial_point;
  // Optional override of the default schedule; receives t >= 1.
  std::function<double(std::uint64_t)> eta_schedule;

  double eta(std::uint64_t t, double alpha) const;
};

struct Bounds {
  double d_radius = 0.0;
  double g_star = 0.0;
};

/// D from the box diagonal (max Bregman divergence between box corners for
/// the Euclidean geometry), G_star = 1.1 * max ||grad|| over box corners and
/// `samples` random feasible points. Boxes of dimension above 12 use a seeded
/// random subset of 4096 corners plus the two extreme corners.
Bounds estimate_bounds(const FeasibleSet& set, const std::function<Vector(const Vector&)>& grad,
                       int samples, std::uint64_t seed = 0x5eedULL);

struct IterateTrace {
  std::vector<Vector> iterates;       // a_t, t = 1..T
  std::vector<Vector> pre_projection; // w_{t+1}
  std::vector<Vector> gradients;      // stochastic gradient at a_t
  std::vector<double> realized;       // realized (noisy) objective at a_t, if reported
  std::vector<double> expected;       // true objective at a_t, if known
  std::vector<double> step_sizes;
};

struct OracleSample {
  Vector gradient;
  std::optional<double> realized;
  std::optional<double> expected;
};

/// gradient_oracle(t, a_t) returns an unbiased stochastic gradient at a_t.
using GradientOracle = std::function<OracleSample(std::uint64_t, const Vector&)>;

/// Online mirror descent with projection. Holds the current iterate; each
/// call to `advance` consumes one stochastic gradient at it.
class OnlineMirrorDescent {
 public:
  OnlineMirrorDescent(BregmanGeometry geom, MdConfig config, const FeasibleSet& set);

  const Vector& iterate() const { return iterate_; }
  std::uint64_t t() const { return t_; }

  struct Step {
    Vector pre_projection;
    double eta;
  };
  /// a_{t+1} = project(md_step(a_t, grad, eta_t)) onto `set`; increments t.
  /// The set may change between calls (time-varying constraints).
  Step advance(const Vector& grad, const FeasibleSet& set);

 private:
  BregmanGeometry geom_;
  MdConfig config_;
  Vector iterate_;
  std::uint64_t t_ = 1;
};

IterateTrace run_online(const BregmanGeometry& geom, const MdConfig& config,
                        const FeasibleSet& set, const GradientOracle& oracle, std::uint64_t horizon);

struct RegretCurve {
  double total = 0.0;
  std::vector<double> cumulative;  // R_t for t = 1..T
};

/// R_T = sum_t [f(a_t) - f(a_star)].
RegretCurve regret(const IterateTrace& trace, const std::function<double(const Vector&)>& f_true,
                   const Vector& a_star);
RegretCurve regret(const std::vector<double>& f_values, double f_star);

struct PgdOptions {
  double tolerance = 1e-10;
  int max_iterations = 100000;
};

struct PgdResult {
  Vector minimizer;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Deterministic projected gradient descent with backtracking, used for the
/// per-slot exact/oracle solves and for regret reference points. `lipschitz`
/// seeds the step length (1/L); backtracking shrinks it when needed.
PgdResult projected_gradient_descent(const std::function<double(const Vector&)>& f,
                                     const std::function<Vector(const Vector&)>& grad,
                                     const FeasibleSet& set, Vector start, double lipschitz,
                                     PgdOptions options = {});

}  // namespace mgrid
