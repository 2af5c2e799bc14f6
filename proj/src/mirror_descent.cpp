#include "mgrid/mirror_descent.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mgrid/errors.hpp"

namespace mgrid {

BregmanGeometry BregmanGeometry::euclidean_geometry() {
  BregmanGeometry g;
  g.psi = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  g.grad_psi = [](const Vector& x) { return x; };
  g.grad_psi_dual = [](const Vector& y) { return y; };
  g.alpha = 1.0;
  g.euclidean = true;
  return g;
}

Vector BregmanGeometry::project(const FeasibleSet& set, const Vector& w) const {
  if (bregman_project) return bregman_project(set, w);
  if (!euclidean) throw ConfigError("non-Euclidean geometry requires a Bregman projection");
  return set.project(w);
}

double bregman_divergence(const BregmanGeometry& geom, const Vector& x, const Vector& y) {
  return geom.psi(x) - geom.psi(y) - geom.grad_psi(y).dot(x - y);
}

Vector md_step(const BregmanGeometry& geom, const Vector& a, const Vector& grad, double eta) {
  if (geom.euclidean) return a - eta * grad;
  return geom.grad_psi_dual(geom.grad_psi(a) - eta * grad);
}

double step_size(std::uint64_t t, double d_radius, double g_star, double alpha) {
  if (t == 0) throw ConfigError("step size is defined for t >= 1");
  if (!(d_radius > 0.0) || !(g_star > 0.0) || !(alpha > 0.0))
    throw ConfigError("step size needs positive D, G_star and alpha");
  return d_radius * std::sqrt(alpha) / (g_star * std::sqrt(static_cast<double>(t)));
}

double MdConfig::eta(std::uint64_t t, double alpha) const {
  if (eta_schedule) return eta_schedule(t);
  return step_size(t, d_radius, g_star, alpha);
}

Bounds estimate_bounds(const FeasibleSet& set, const std::function<Vector(const Vector&)>& grad,
                       int samples, std::uint64_t seed) {
  const auto n = set.dimension();
  const Vector span = set.upper() - set.lower();
  Bounds b;
  // max over box corners of 1/2 ||a - b||^2 is half the squared diagonal.
  b.d_radius = std::sqrt(0.5 * span.squaredNorm());

  std::mt19937_64 rng(seed);
  double gmax = 0.0;
  auto visit = [&](const Vector& p) { gmax = std::max(gmax, grad(p).norm()); };

  if (n <= 12) {
    const std::uint64_t count = std::uint64_t{1} << n;
    Vector corner(n);
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      for (Eigen::Index i = 0; i < n; ++i)
        corner(i) = (mask >> i) & 1U ? set.upper()(i) : set.lower()(i);
      visit(corner);
    }
  } else {
    visit(set.lower());
    visit(set.upper());
    std::bernoulli_distribution coin(0.5);
    Vector corner(n);
    for (int k = 0; k < 4096; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) corner(i) = coin(rng) ? set.upper()(i) : set.lower()(i);
      visit(corner);
    }
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector p(n);
  for (int k = 0; k < samples; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) p(i) = set.lower()(i) + unit(rng) * span(i);
    visit(set.project(p));
  }
  b.g_star = 1.1 * gmax;
  if (b.d_radius == 0.0 || b.g_star == 0.0) {
    // Degenerate box or identically zero gradient; keep the schedule finite.
    b.d_radius = std::max(b.d_radius, 1e-12);
    b.g_star = std::max(b.g_star, 1e-12);
  }
  return b;
}

OnlineMirrorDescent::OnlineMirrorDescent(BregmanGeometry geom, MdConfig config,
                                         const FeasibleSet& set)
    : geom_(std::move(geom)), config_(std::move(config)) {
  if (config_.initial_point.size() == 0) {
    iterate_ = geom_.project(set, set.midpoint());
  } else {
    if (config_.initial_point.size() != set.dimension())
      throw ConfigError("initial point dimension mismatch");
    iterate_ = geom_.project(set, config_.initial_point);
  }
}

OnlineMirrorDescent::Step OnlineMirrorDescent::advance(const Vector& grad, const FeasibleSet& set) {
  const double eta = config_.eta(t_, geom_.alpha);
  Vector w = md_step(geom_, iterate_, grad, eta);
  iterate_ = geom_.project(set, w);
  ++t_;
  return Step{std::move(w), eta};
}

IterateTrace run_online(const BregmanGeometry& geom, const MdConfig& config,
                        const FeasibleSet& set, const GradientOracle& oracle, std::uint64_t horizon) {
  IterateTrace trace;
  trace.iterates.reserve(horizon);
  OnlineMirrorDescent md(geom, config, set);
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    const Vector a = md.iterate();
    OracleSample s = oracle(t, a);
    if (s.realized) trace.realized.push_back(*s.realized);
    if (s.expected) trace.expected.push_back(*s.expected);
    auto step = md.advance(s.gradient, set);
    trace.iterates.push_back(a);
    trace.pre_projection.push_back(std::move(step.pre_projection));
    trace.gradients.push_back(std::move(s.gradient));
    trace.step_sizes.push_back(step.eta);
  }
  return trace;
}

RegretCurve regret(const std::vector<double>& f_values, double f_star) {
  RegretCurve out;
  out.cumulative.reserve(f_values.size());
  for (double v : f_values) {
    out.total += v - f_star;
    out.cumulative.push_back(out.total);
  }
  return out;
}

RegretCurve regret(const IterateTrace& trace, const std::function<double(const Vector&)>& f_true,
                   const Vector& a_star) {
  std::vector<double> values;
  values.reserve(trace.iterates.size());
  for (const auto& a : trace.iterates) values.push_back(f_true(a));
  return regret(values, f_true(a_star));
}

PgdResult projected_gradient_descent(const std::function<double(const Vector&)>& f,
                                     const std::function<Vector(const Vector&)>& grad,
                                     const FeasibleSet& set, Vector start, double lipschitz,
                                     PgdOptions options) {
  PgdResult res;
  Vector x = set.project(start);
  double fx = f(x);
  double step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
  for (int k = 0; k < options.max_iterations; ++k) {
    const Vector g = grad(x);
    Vector next;
    double fnext = 0.0;
    // Backtracking on the sufficient-decrease condition of the gradient map.
    for (int tries = 0; tries < 60; ++tries) {
      next = set.project(x - step * g);
      fnext = f(next);
      const Vector d = next - x;
      if (fnext <= fx + g.dot(d) + 0.5 / step * d.squaredNorm() + 1e-15 * std::abs(fx)) break;
      step *= 0.5;
    }
    const double move = (next - x).lpNorm<Eigen::Infinity>();
    x = std::move(next);
    fx = fnext;
    res.iterations = k + 1;
    if (move <= options.tolerance * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
      res.converged = true;
      break;
    }
  }
  res.minimizer = std::move(x);
  res.value = fx;
  return res;
}

}  // namespace mgrid
