#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "mgrid/grid_model.hpp"

namespace mgrid {

/// Per-building thermal and comfort parameters. Time units must agree
/// between alpha1, alpha2 and dt (the bundled scenarios use seconds).
struct BuildingParams {
  double alpha1 = 0.0;  // heat exchange rate with outdoors, 1/time
  double alpha2 = 1.0;  // cooling gain, degrees per (power * time)
  double beta = 1.0;    // comfort weight, currency per degree^2
  double c_set = 65.0;  // set point
  double dt = 1.0;      // slot length

  void validate() const;
};

struct ThermalState {
  Eigen::VectorXd c_in;
  Eigen::VectorXd c_out;
};

struct ObjectiveParams {
  double lambda_price = 1.0;
  std::vector<BuildingParams> buildings;  // one per load bus, in block order
  std::shared_ptr<const SensitivityBlocks> blocks;
  double u_nominal = 1.0;
  Eigen::VectorXd p_gen;
  // Inflexible consumption on each load bus, added to the controllable load
  // for loss and intake accounting. Empty means zero.
  Eigen::VectorXd base_load;
};

/// c_in' = c_in + alpha1 (c_out - c_in) dt - alpha2 p_c dt, elementwise.
Eigen::VectorXd thermal_step(const ThermalState& state, const Eigen::VectorXd& p_cons,
                             const std::vector<BuildingParams>& buildings);

/// U_v = -beta (c_in'(v) - c_set(v))^2 with c_in' from thermal_step.
Eigen::VectorXd satisfaction(const ThermalState& state, const Eigen::VectorXd& p_cons,
                             const std::vector<BuildingParams>& buildings);

/// Line loss and PCC intake for a controllable load vector (base load added).
double slot_loss(const ObjectiveParams& params, const Eigen::VectorXd& p_cons);
double slot_intake(const ObjectiveParams& params, const Eigen::VectorXd& p_cons);

/// USECB net profit: sum of satisfaction over consumption buses minus
/// lambda times grid intake. Evaluated directly from its definition.
double usecb_profit(const ThermalState& state, const Eigen::VectorXd& p_cons,
                    const ObjectiveParams& params);

/// Cost-side objective in the controllable load. f(p) = 1/2 p^T H p + c^T p
/// with f(0) = 0, so that profit + lambda * f is the same for every p.
double objective_f(const ThermalState& state, const Eigen::VectorXd& p_cons,
                   const ObjectiveParams& params);
Eigen::VectorXd grad_f(const ThermalState& state, const Eigen::VectorXd& p_cons,
                       const ObjectiveParams& params);

struct QuadraticObjective {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;

  double value(const Eigen::VectorXd& p) const { return 0.5 * p.dot(hessian * p) + linear.dot(p); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const { return hessian * p + linear; }
};

/// Caches the data-independent part of the objective (its Hessian) for one
/// network/building configuration. Per-slot data only shifts the linear term.
class UsecbModel {
 public:
  UsecbModel(std::vector<BuildingParams> buildings,
             std::shared_ptr<const SensitivityBlocks> blocks, double u_nominal,
             double lambda_price, Eigen::VectorXd base_load);

  explicit UsecbModel(const ObjectiveParams& params);

  std::size_t dimension() const { return buildings_.size(); }
  const Eigen::MatrixXd& hessian() const { return hessian_; }
  double min_eigenvalue() const { return min_eig_; }
  double max_eigenvalue() const { return max_eig_; }
  const std::vector<BuildingParams>& buildings() const { return buildings_; }
  double lambda_price() const { return lambda_; }
  const Eigen::VectorXd& base_load() const { return base_load_; }

  QuadraticObjective objective(const ThermalState& state, const Eigen::VectorXd& p_gen) const;

 private:
  std::vector<BuildingParams> buildings_;
  std::shared_ptr<const SensitivityBlocks> blocks_;
  double u_nominal_;
  double lambda_;
  Eigen::VectorXd base_load_;
  Eigen::MatrixXd hessian_;
  double min_eig_ = 0.0;
  double max_eig_ = 0.0;
};

}  // namespace mgrid
