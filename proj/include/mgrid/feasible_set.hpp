#pragma once

#include <limits>

#include <Eigen/Dense>

#include "mgrid/grid_model.hpp"

namespace mgrid {

enum class BandScope { AllBuses, LoadBuses };

struct FeasibleBounds {
  Eigen::VectorXd p_min;
  Eigen::VectorXd p_max;
  double v_min = 0.0;
  double v_max = std::numeric_limits<double>::infinity();
  BandScope scope = BandScope::AllBuses;
  Eigen::VectorXd base_load;  // inflexible load per consumption bus; empty = 0
};

struct ProjectionOptions {
  double tolerance = 1e-10;
  int max_sweeps = 10000;
};

/// Box [p_min, p_max] intersected with halfspaces a_i^T x <= b_i.
/// The voltage band contributes rows with v = offset + volt_map * p_c.
class FeasibleSet {
 public:
  FeasibleSet(Eigen::VectorXd lower, Eigen::VectorXd upper,
              Eigen::MatrixXd normals = {}, Eigen::VectorXd rhs = {},
              ProjectionOptions options = {});

  Eigen::Index dimension() const { return lower_.size(); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  const Eigen::MatrixXd& normals() const { return normals_; }
  const Eigen::VectorXd& rhs() const { return rhs_; }
  Eigen::Index halfspace_count() const { return normals_.rows(); }

  /// Affine voltage map retained for reporting (empty for plain boxes).
  const Eigen::MatrixXd& volt_map() const { return volt_map_; }
  const Eigen::VectorXd& volt_offset() const { return volt_offset_; }
  void set_voltage_map(Eigen::MatrixXd map, Eigen::VectorXd offset);

  /// Largest constraint violation at x (0 when feasible).
  double max_violation(const Eigen::VectorXd& x) const;

  bool contains(const Eigen::VectorXd& x, double slack = 1e-9) const;

  /// Euclidean projection onto the set via Dykstra's alternating projections.
  /// Throws ProjectionError if the sweep cap is reached.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;

  Eigen::VectorXd midpoint() const { return 0.5 * (lower_ + upper_); }

  /// Projects the box midpoint and throws ModelError with the residual
  /// violation if the set is empty.
  void certify_nonempty() const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  Eigen::MatrixXd normals_;
  Eigen::VectorXd rhs_;
  Eigen::VectorXd normal_sq_;
  ProjectionOptions options_;
  Eigen::MatrixXd volt_map_;
  Eigen::VectorXd volt_offset_;
};

/// Instantiates the voltage band as affine inequalities in p_c with p_g fixed:
/// |u| = U_N + (X[:,gen] p_g - X[:,load] (base + p_c)) / U_N.
/// Certifies nonemptiness before returning.
FeasibleSet build_feasible(const SensitivityBlocks& blocks, const Eigen::VectorXd& p_gen,
                           double u_nominal, const FeasibleBounds& bounds,
                           ProjectionOptions options = {});

}  // namespace mgrid
