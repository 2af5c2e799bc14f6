#include "mgrid/thermal.hpp"

#include <cmath>
#include <sstream>

#include "mgrid/errors.hpp"

namespace mgrid {

namespace {

void check_shapes(const ThermalState& state, const Eigen::VectorXd& p,
                  const std::vector<BuildingParams>& buildings) {
  const auto n = static_cast<Eigen::Index>(buildings.size());
  if (state.c_in.size() != n || state.c_out.size() != n || p.size() != n)
    throw ModelError("thermal: state, load and building counts differ");
}

Eigen::VectorXd effective_base(const Eigen::VectorXd& base, Eigen::Index n) {
  return base.size() == 0 ? Eigen::VectorXd::Zero(n) : base;
}

// Predicted deviation from set point with the AC off.
Eigen::VectorXd drift_residual(const ThermalState& state,
                               const std::vector<BuildingParams>& buildings) {
  Eigen::VectorXd a(state.c_in.size());
  for (Eigen::Index v = 0; v < a.size(); ++v) {
    const auto& b = buildings[v];
    a(v) = state.c_in(v) + b.alpha1 * (state.c_out(v) - state.c_in(v)) * b.dt - b.c_set;
  }
  return a;
}

}  // namespace

void BuildingParams::validate() const {
  if (!(alpha1 >= 0.0) || !(alpha2 > 0.0) || !(beta > 0.0) || !(dt > 0.0) ||
      !std::isfinite(alpha1) || !std::isfinite(alpha2) || !std::isfinite(beta) ||
      !std::isfinite(c_set) || !std::isfinite(dt)) {
    std::ostringstream msg;
    msg << "invalid building parameters (alpha1=" << alpha1 << ", alpha2=" << alpha2
        << ", beta=" << beta << ", dt=" << dt << ")";
    throw ConfigError(msg.str());
  }
}

Eigen::VectorXd thermal_step(const ThermalState& state, const Eigen::VectorXd& p_cons,
                             const std::vector<BuildingParams>& buildings) {
  check_shapes(state, p_cons, buildings);
  Eigen::VectorXd next(p_cons.size());
  for (Eigen::Index v = 0; v < next.size(); ++v) {
    const auto& b = buildings[v];
    next(v) = state.c_in(v) + b.alpha1 * (state.c_out(v) - state.c_in(v)) * b.dt -
              b.alpha2 * p_cons(v) * b.dt;
  }
  return next;
}

Eigen::VectorXd satisfaction(const ThermalState& state, const Eigen::VectorXd& p_cons,
                             const std::vector<BuildingParams>& buildings) {
  const Eigen::VectorXd next = thermal_step(state, p_cons, buildings);
  Eigen::VectorXd u(next.size());
  for (Eigen::Index v = 0; v < u.size(); ++v) {
    const double dev = next(v) - buildings[v].c_set;
    u(v) = -buildings[v].beta * dev * dev;
  }
  return u;
}

double slot_loss(const ObjectiveParams& params, const Eigen::VectorXd& p_cons) {
  const Eigen::VectorXd total = effective_base(params.base_load, p_cons.size()) + p_cons;
  return power_loss(*params.blocks, params.p_gen, total, params.u_nominal);
}

double slot_intake(const ObjectiveParams& params, const Eigen::VectorXd& p_cons) {
  const Eigen::VectorXd total = effective_base(params.base_load, p_cons.size()) + p_cons;
  return grid_intake(params.p_gen, total,
                     power_loss(*params.blocks, params.p_gen, total, params.u_nominal));
}

double usecb_profit(const ThermalState& state, const Eigen::VectorXd& p_cons,
                    const ObjectiveParams& params) {
  return satisfaction(state, p_cons, params.buildings).sum() -
         params.lambda_price * slot_intake(params, p_cons);
}

double objective_f(const ThermalState& state, const Eigen::VectorXd& p_cons,
                   const ObjectiveParams& params) {
  return UsecbModel(params).objective(state, params.p_gen).value(p_cons);
}

Eigen::VectorXd grad_f(const ThermalState& state, const Eigen::VectorXd& p_cons,
                       const ObjectiveParams& params) {
  return UsecbModel(params).objective(state, params.p_gen).gradient(p_cons);
}

UsecbModel::UsecbModel(std::vector<BuildingParams> buildings,
                       std::shared_ptr<const SensitivityBlocks> blocks, double u_nominal,
                       double lambda_price, Eigen::VectorXd base_load)
    : buildings_(std::move(buildings)),
      blocks_(std::move(blocks)),
      u_nominal_(u_nominal),
      lambda_(lambda_price),
      base_load_(std::move(base_load)) {
  if (!blocks_) throw ConfigError("objective needs sensitivity blocks");
  const auto n = static_cast<Eigen::Index>(buildings_.size());
  if (blocks_->q.rows() != n)
    throw ConfigError("building count does not match consumption buses");
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) throw ConfigError("price must be positive");
  if (!(u_nominal_ > 0.0)) throw ConfigError("nominal voltage must be positive");
  for (const auto& b : buildings_) b.validate();
  base_load_ = effective_base(base_load_, n);
  if (base_load_.size() != n) throw ConfigError("base load length mismatch");

  // H = (2 beta Lambda2^2 dt^2 + 2 lambda Q / U_N^2) / lambda
  const double un2 = u_nominal_ * u_nominal_;
  hessian_ = (2.0 / un2) * blocks_->q;
  for (Eigen::Index v = 0; v < n; ++v) {
    const auto& b = buildings_[v];
    hessian_(v, v) += 2.0 * b.beta * b.alpha2 * b.alpha2 * b.dt * b.dt / lambda_;
  }
  hessian_ = 0.5 * (hessian_ + hessian_.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian_, Eigen::EigenvaluesOnly);
  min_eig_ = eig.eigenvalues().minCoeff();
  max_eig_ = eig.eigenvalues().maxCoeff();
  if (!(min_eig_ > 0.0)) {
    std::ostringstream msg;
    msg << "objective Hessian is not positive definite (min eigenvalue " << min_eig_ << ")";
    throw ConfigError(msg.str());
  }
}

UsecbModel::UsecbModel(const ObjectiveParams& params)
    : UsecbModel(params.buildings, params.blocks, params.u_nominal, params.lambda_price,
                 params.base_load) {}

QuadraticObjective UsecbModel::objective(const ThermalState& state,
                                         const Eigen::VectorXd& p_gen) const {
  const auto n = static_cast<Eigen::Index>(buildings_.size());
  if (state.c_in.size() != n || state.c_out.size() != n)
    throw ModelError("objective: thermal state length mismatch");
  if (p_gen.size() != blocks_->m.rows()) throw ModelError("objective: generation length mismatch");

  const Eigen::VectorXd a = drift_residual(state, buildings_);
  const double un2 = u_nominal_ * u_nominal_;
  Eigen::VectorXd c = Eigen::VectorXd::Ones(n);
  c += (2.0 / un2) * (blocks_->q * base_load_);
  if (p_gen.size() > 0) c -= (2.0 / un2) * (blocks_->nblk.transpose() * p_gen);
  for (Eigen::Index v = 0; v < n; ++v) {
    const auto& b = buildings_[v];
    c(v) -= 2.0 * b.beta * b.alpha2 * b.dt * a(v) / lambda_;
  }
  return QuadraticObjective{hessian_, std::move(c)};
}

}  // namespace mgrid
