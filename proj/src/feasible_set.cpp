#include "mgrid/feasible_set.hpp"

#include <cmath>
#include <algorithm>
#include <optional>
#include <vector>
#include <sstream>

#include <Eigen/QR>

#include "mgrid/errors.hpp"

namespace mgrid {

namespace {

// Solves the projection exactly by an active-set iteration seeded with the
// constraints the Dykstra corrections mark as binding. A point is returned
// only when it satisfies the KKT conditions of the full problem.
std::optional<Eigen::VectorXd> kkt_polish(const FeasibleSet& set, const Eigen::VectorXd& x0,
                                          const Eigen::VectorXd& box_corr,
                                          const Eigen::VectorXd& half_corr, double tol) {
  const auto n = set.dimension();
  const auto m = set.halfspace_count();
  // side: 0 free, +1 held at upper bound, -1 held at lower bound
  std::vector<int> side(n, 0);
  std::vector<bool> on(m, false);
  for (Eigen::Index j = 0; j < n; ++j) side[j] = box_corr(j) > 0.0 ? 1 : (box_corr(j) < 0.0 ? -1 : 0);
  for (Eigen::Index i = 0; i < m; ++i) on[i] = half_corr(i) > 0.0;

  for (int iter = 0; iter < 4 * (n + m) + 8; ++iter) {
    std::vector<Eigen::Index> free, active;
    Eigen::VectorXd z = x0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (side[j] > 0) z(j) = set.upper()(j);
      else if (side[j] < 0) z(j) = set.lower()(j);
      else free.push_back(j);
    }
    for (Eigen::Index i = 0; i < m; ++i)
      if (on[i]) active.push_back(i);

    const auto na = static_cast<Eigen::Index>(active.size());
    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(na);
    if (na > 0) {
      Eigen::MatrixXd a(na, nf);
      Eigen::VectorXd b(na);
      Eigen::VectorXd xf(nf);
      for (Eigen::Index k = 0; k < nf; ++k) xf(k) = x0(free[k]);
      for (Eigen::Index r = 0; r < na; ++r) {
        const auto row = set.normals().row(active[r]);
        double rhs = set.rhs()(active[r]);
        for (Eigen::Index j = 0; j < n; ++j)
          if (side[j] != 0) rhs -= row(j) * z(j);
        b(r) = rhs;
        for (Eigen::Index k = 0; k < nf; ++k) a(r, k) = row(free[k]);
      }
      mu = (a * a.transpose()).completeOrthogonalDecomposition().solve(a * xf - b);
      const Eigen::VectorXd zf = xf - a.transpose() * mu;
      for (Eigen::Index k = 0; k < nf; ++k) z(free[k]) = zf(k);
    }

    // Dual feasibility: halfspace multipliers, then box multipliers.
    Eigen::VectorXd r = z - x0;
    for (Eigen::Index k = 0; k < na; ++k) r += mu(k) * set.normals().row(active[k]).transpose();
    double worst_dual = tol;
    Eigen::Index drop_half = -1, drop_box = -1;
    for (Eigen::Index k = 0; k < na; ++k)
      if (-mu(k) > worst_dual) worst_dual = -mu(k), drop_half = active[k], drop_box = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double wrong = side[j] > 0 ? r(j) : (side[j] < 0 ? -r(j) : 0.0);
      if (wrong > worst_dual) worst_dual = wrong, drop_box = j, drop_half = -1;
    }
    if (drop_half >= 0) {
      on[drop_half] = false;
      continue;
    }
    if (drop_box >= 0) {
      side[drop_box] = 0;
      continue;
    }

    // Primal feasibility: add the most violated constraint.
    double worst = tol;
    Eigen::Index add_half = -1, add_box = -1;
    int add_side = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (side[j] != 0) continue;
      if (z(j) - set.upper()(j) > worst) worst = z(j) - set.upper()(j), add_box = j, add_side = 1, add_half = -1;
      if (set.lower()(j) - z(j) > worst) worst = set.lower()(j) - z(j), add_box = j, add_side = -1, add_half = -1;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      if (on[i]) continue;
      const double v = set.normals().row(i).dot(z) - set.rhs()(i);
      if (v > worst) worst = v, add_half = i, add_box = -1;
    }
    if (add_half >= 0) {
      on[add_half] = true;
      continue;
    }
    if (add_box >= 0) {
      side[add_box] = add_side;
      continue;
    }
    // Working-set rows that a rank-deficient solve could not satisfy.
    if (set.max_violation(z) > tol) return std::nullopt;
    return z;
  }
  return std::nullopt;
}

}  // namespace

FeasibleSet::FeasibleSet(Eigen::VectorXd lower, Eigen::VectorXd upper, Eigen::MatrixXd normals,
                         Eigen::VectorXd rhs, ProjectionOptions options)
    : lower_(std::move(lower)),
      upper_(std::move(upper)),
      normals_(std::move(normals)),
      rhs_(std::move(rhs)),
      options_(options) {
  if (lower_.size() != upper_.size() || lower_.size() == 0)
    throw ConfigError("feasible set: box bounds must be nonempty and equally sized");
  if ((lower_.array() > upper_.array()).any()) throw ConfigError("feasible set: p_min > p_max");
  if (normals_.size() == 0) normals_.resize(0, lower_.size());
  if (normals_.cols() != lower_.size() || normals_.rows() != rhs_.size())
    throw ConfigError("feasible set: halfspace shape mismatch");
  normal_sq_ = normals_.rowwise().squaredNorm();
  for (Eigen::Index i = 0; i < normals_.rows(); ++i) {
    if (normal_sq_(i) == 0.0 && rhs_(i) < 0.0) {
      std::ostringstream msg;
      msg << "feasible set is empty: constant constraint " << i << " violated by " << -rhs_(i);
      throw ModelError(msg.str());
    }
  }
}

void FeasibleSet::set_voltage_map(Eigen::MatrixXd map, Eigen::VectorXd offset) {
  volt_map_ = std::move(map);
  volt_offset_ = std::move(offset);
}

double FeasibleSet::max_violation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  worst = std::max(worst, (lower_ - x).maxCoeff());
  worst = std::max(worst, (x - upper_).maxCoeff());
  if (normals_.rows() > 0) worst = std::max(worst, (normals_ * x - rhs_).maxCoeff());
  return worst;
}

bool FeasibleSet::contains(const Eigen::VectorXd& x, double slack) const {
  if (x.size() != dimension()) return false;
  return max_violation(x) <= slack;
}

Eigen::VectorXd FeasibleSet::project(const Eigen::VectorXd& x0) const {
  if (x0.size() != dimension()) throw ModelError("project: dimension mismatch");
  const Eigen::Index m = normals_.rows();
  Eigen::VectorXd x = x0.cwiseMax(lower_).cwiseMin(upper_);
  if (m == 0) return x;
  if (max_violation(x) <= 0.0) return x;

  // Dykstra: one correction vector per convex piece (box + each halfspace).
  // Halfspace corrections are multiples of their normal, so a scalar suffices.
  Eigen::VectorXd box_corr = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd half_corr = Eigen::VectorXd::Zero(m);
  x = x0;
  Eigen::VectorXd prev(x.size()), prev_box(x.size()), prev_half(m);
  double change = 0.0;
  for (int sweep = 0; sweep < options_.max_sweeps; ++sweep) {
    prev = x;
    prev_box = box_corr;
    prev_half = half_corr;
    Eigen::VectorXd y = x + box_corr;
    x = y.cwiseMax(lower_).cwiseMin(upper_);
    box_corr = y - x;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (normal_sq_(i) == 0.0) continue;
      // y = x + half_corr(i) * a_i; project y onto {a^T z <= b}.
      const double ay = normals_.row(i).dot(x) + half_corr(i) * normal_sq_(i);
      const double excess = ay - rhs_(i);
      const double shift = excess > 0.0 ? excess / normal_sq_(i) : 0.0;
      // new x = y - shift * a_i; new correction = shift
      x.noalias() += (half_corr(i) - shift) * normals_.row(i).transpose();
      half_corr(i) = shift;
    }
    // x alone can stall for a sweep while the corrections still move, so
    // both must settle.
    change = std::max({(x - prev).lpNorm<Eigen::Infinity>(),
                       (box_corr - prev_box).lpNorm<Eigen::Infinity>(),
                       ((half_corr - prev_half).cwiseProduct(normal_sq_.cwiseSqrt())).lpNorm<Eigen::Infinity>()});
    if (change <= options_.tolerance && max_violation(x) <= options_.tolerance) return x;
    if ((sweep + 1) % 100 == 0 || sweep + 1 == options_.max_sweeps) {
      if (auto z = kkt_polish(*this, x0, box_corr, half_corr, options_.tolerance)) return *z;
    }
  }
  std::ostringstream msg;
  msg << "projection did not converge in " << options_.max_sweeps
      << " sweeps (last change " << change << ", violation " << max_violation(x) << ")";
  throw ProjectionError(msg.str(), std::max(change, max_violation(x)));
}

void FeasibleSet::certify_nonempty() const {
  try {
    const Eigen::VectorXd p = project(midpoint());
    if (!contains(p)) {
      std::ostringstream msg;
      msg << "feasible set is empty: projected box midpoint violates constraints by "
          << max_violation(p);
      throw ModelError(msg.str());
    }
  } catch (const ProjectionError& e) {
    std::ostringstream msg;
    msg << "feasible set is empty: projection of box midpoint failed with residual "
        << e.residual();
    throw ModelError(msg.str());
  }
}

FeasibleSet build_feasible(const SensitivityBlocks& blocks, const Eigen::VectorXd& p_gen,
                           double u_nominal, const FeasibleBounds& bounds,
                           ProjectionOptions options) {
  const auto nc = static_cast<Eigen::Index>(blocks.load_buses.size());
  const auto ng = static_cast<Eigen::Index>(blocks.gen_buses.size());
  if (bounds.p_min.size() != nc || bounds.p_max.size() != nc)
    throw ConfigError("power bounds must have one entry per consumption bus");
  if (p_gen.size() != ng) throw ConfigError("generation vector length mismatch");
  const Eigen::VectorXd base =
      bounds.base_load.size() == 0 ? Eigen::VectorXd::Zero(nc) : bounds.base_load;

  // Rows of the grounded sensitivity restricted to the constrained buses.
  std::vector<std::size_t> rows;
  if (bounds.scope == BandScope::AllBuses) {
    for (std::size_t k = 1; k <= static_cast<std::size_t>(blocks.x.rows()); ++k) rows.push_back(k);
  } else {
    rows = blocks.load_buses;
  }
  const auto nr = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd map(nr, nc);
  Eigen::VectorXd offset(nr);
  for (Eigen::Index r = 0; r < nr; ++r) {
    const auto bus = rows[r] - 1;
    double gen_part = 0.0;
    for (Eigen::Index j = 0; j < ng; ++j) gen_part += blocks.x(bus, blocks.gen_buses[j] - 1) * p_gen(j);
    double base_part = 0.0;
    for (Eigen::Index j = 0; j < nc; ++j) {
      const double xv = blocks.x(bus, blocks.load_buses[j] - 1);
      map(r, j) = -xv / u_nominal;
      base_part += xv * base(j);
    }
    offset(r) = u_nominal + (gen_part - base_part) / u_nominal;
  }

  std::vector<Eigen::Index> upper_rows, lower_rows;
  if (std::isfinite(bounds.v_max))
    for (Eigen::Index r = 0; r < nr; ++r) upper_rows.push_back(r);
  if (std::isfinite(bounds.v_min) && bounds.v_min > 0.0)
    for (Eigen::Index r = 0; r < nr; ++r) lower_rows.push_back(r);

  const auto m = static_cast<Eigen::Index>(upper_rows.size() + lower_rows.size());
  Eigen::MatrixXd normals(m, nc);
  Eigen::VectorXd rhs(m);
  Eigen::Index k = 0;
  for (auto r : upper_rows) {  // offset + map p <= v_max
    normals.row(k) = map.row(r);
    rhs(k++) = bounds.v_max - offset(r);
  }
  for (auto r : lower_rows) {  // -(offset + map p) <= -v_min
    normals.row(k) = -map.row(r);
    rhs(k++) = offset(r) - bounds.v_min;
  }
  FeasibleSet set(bounds.p_min, bounds.p_max, std::move(normals), std::move(rhs), options);
  set.set_voltage_map(std::move(map), std::move(offset));
  set.certify_nonempty();
  return set;
}

}  // namespace mgrid
