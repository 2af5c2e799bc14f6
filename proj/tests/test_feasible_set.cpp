#include <doctest.h>

#include <random>

#include "mgrid/errors.hpp"
#include "mgrid/feasible_set.hpp"
#include "support.hpp"

using namespace mgrid;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd x(v.size());
  Eigen::Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

double half_sq(const VectorXd& a, const VectorXd& b) { return 0.5 * (a - b).squaredNorm(); }

// Random box with random halfspaces that all pass strictly through an
// interior point, so the set is never empty.
FeasibleSet random_set(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 2 + static_cast<int>(rng() % 5);
  const int m = static_cast<int>(rng() % 4);
  VectorXd lo(n), hi(n), inner(n);
  for (int i = 0; i < n; ++i) {
    lo(i) = u(rng);
    hi(i) = lo(i) + 0.1 + std::abs(u(rng));
    inner(i) = lo(i) + 0.5 * (hi(i) - lo(i));
  }
  Eigen::MatrixXd a(m, n);
  VectorXd b(m);
  for (int k = 0; k < m; ++k) {
    for (int i = 0; i < n; ++i) a(k, i) = u(rng);
    b(k) = a.row(k).dot(inner) + 0.05 * std::abs(u(rng));
  }
  return FeasibleSet(lo, hi, a, b);
}

VectorXd random_point(std::mt19937_64& rng, const FeasibleSet& s) {
  const VectorXd span = s.upper() - s.lower();
  return testsupport::uniform(rng, s.lower() - span, s.upper() + span);
}

}  // namespace

TEST_CASE("box membership and clamp") {
  const FeasibleSet box(VectorXd::Zero(2), VectorXd::Ones(2));
  CHECK(box.contains(box.midpoint()));
  CHECK_FALSE(box.contains(VectorXd::Constant(2, 2.0)));
  CHECK((box.project(vec({2, -3})) - vec({1, 0})).norm() < 1e-15);
  const VectorXd inside = vec({0.3, 0.9});
  CHECK((box.project(inside) - inside).norm() < 1e-10);
}

TEST_CASE("box with a diagonal cut") {
  const FeasibleSet s(VectorXd::Zero(2), VectorXd::Ones(2), Eigen::MatrixXd::Ones(1, 2), VectorXd::Ones(1));
  CHECK((s.project(vec({1, 1})) - vec({0.5, 0.5})).norm() < 1e-9);
  CHECK(s.max_violation(vec({1, 1})) == doctest::Approx(1.0));
  CHECK(s.max_violation(vec({0.2, 0.2})) == 0.0);
}

TEST_CASE("invalid boxes are rejected") {
  CHECK_THROWS(FeasibleSet(VectorXd::Ones(2), VectorXd::Zero(2)));
  CHECK_THROWS(FeasibleSet(VectorXd::Zero(2), VectorXd::Ones(3)));
}

TEST_CASE("vacuous voltage band reduces to the box") {
  const auto sc = testsupport::ieee37(false, 1);
  FeasibleBounds bounds = sc.bounds;
  bounds.v_min = 0.0;
  bounds.v_max = std::numeric_limits<double>::infinity();
  const auto s = build_feasible(*sc.blocks(), sc.gen_at(0), 1.0, bounds);
  CHECK(s.halfspace_count() == 0);
  CHECK(s.contains(s.midpoint()));
  CHECK((s.lower() - sc.bounds.p_min).norm() == 0.0);
  CHECK((s.upper() - sc.bounds.p_max).norm() == 0.0);
}

TEST_CASE("IEEE-37 band is nonempty in every slot and maps to voltages") {
  const auto sc = testsupport::ieee37(false);
  for (std::size_t t = 0; t < sc.horizon; t += 50) {
    const auto s = build_feasible(*sc.blocks(), sc.gen_at(t), 1.0, sc.bounds);
    const VectorXd p = s.project(s.midpoint());
    CHECK(s.contains(p));
    // The stored affine map reproduces the network voltages for the total load.
    const auto& g = *sc.grid;
    const VectorXd inj = g.injections(sc.gen_at(t), sc.bounds.base_load + p);
    const VectorXd u = voltage_approx(g.blocks().x, inj, 1.0);
    const VectorXd mapped = s.volt_offset() + s.volt_map() * p;
    CHECK((mapped - u.tail(u.size() - 1)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(u.minCoeff() >= 0.95 - 1e-9);
    CHECK(u.maxCoeff() <= 1.05 + 1e-9);
  }
}

TEST_CASE("load-bus scope constrains only consumption buses") {
  const auto sc = testsupport::ieee37(false, 1);
  FeasibleBounds bounds = sc.bounds;
  bounds.scope = BandScope::LoadBuses;
  const auto s = build_feasible(*sc.blocks(), sc.gen_at(0), 1.0, bounds);
  CHECK(s.halfspace_count() == 2 * static_cast<Eigen::Index>(sc.n_load()));
}

TEST_CASE("empty set is reported with its residual") {
  const auto sc = testsupport::ieee37(false, 1);
  FeasibleBounds bounds = sc.bounds;
  bounds.v_min = 1.2;
  bounds.v_max = 1.3;
  try {
    build_feasible(*sc.blocks(), sc.gen_at(0), 1.0, bounds);
    FAIL("expected an error");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("empty") != std::string::npos);
  }
}

TEST_CASE("sweep cap raises a projection error with residual") {
  // The box and the halfspace do not intersect, so no sweep count suffices.
  const FeasibleSet s(VectorXd::Zero(2), VectorXd::Ones(2), Eigen::MatrixXd::Ones(1, 2), VectorXd::Constant(1, -0.5),
                      ProjectionOptions{1e-10, 200});
  try {
    s.project(vec({1.0, 0.2}));
    FAIL("expected an error");
  } catch (const ProjectionError& e) {
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("projection properties on randomized sets") {
  std::mt19937_64 rng(2024);
  double worst_idem = 0, worst_member = 0, worst_expand = 0, worst_pyth = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto s = random_set(rng);
    const VectorXd x = random_point(rng, s);
    const VectorXd y = random_point(rng, s);
    const VectorXd px = s.project(x);
    const VectorXd py = s.project(y);
    worst_idem = std::max(worst_idem, (s.project(px) - px).norm());
    worst_member = std::max(worst_member, s.max_violation(px));
    worst_expand = std::max(worst_expand, (px - py).norm() - (x - y).norm());
    // Generalized Pythagoras for the projection b of x: any a in the set
    // satisfies B(a, x) >= B(a, b) + B(b, x).
    const VectorXd a = s.project(random_point(rng, s));
    worst_pyth = std::max(worst_pyth, half_sq(a, px) + half_sq(px, x) - half_sq(a, x));
  }
  CHECK(worst_idem < 1e-9);
  CHECK(worst_member < 1e-9);
  CHECK(worst_expand < 1e-9);
  CHECK(worst_pyth < 1e-9);
}

TEST_CASE("projection agrees with a grid search in three dimensions") {
  const VectorXd lo = VectorXd::Zero(3), hi = VectorXd::Constant(3, 0.25);
  Eigen::MatrixXd a(1, 3);
  a << 1.0, 2.0, 1.0;
  const FeasibleSet s(lo, hi, a, VectorXd::Constant(1, 0.4));
  for (const VectorXd& x : {vec({0.3, 0.2, 0.1}), vec({0.1, 0.3, -0.1}), vec({0.4, 0.4, 0.4})}) {
    const VectorXd p = s.project(x);
    const double h = 1e-3;
    const int steps = 250;
    double best = 1e300;
    VectorXd arg(3);
    for (int i = 0; i <= steps; ++i)
      for (int j = 0; j <= steps; ++j) {
        const double gi = i * h, gj = j * h;
        const double used = gi + 2.0 * gj;
        if (used > 0.4) break;
        for (int k = 0; k <= steps && used + k * h <= 0.4 + 1e-15; ++k) {
          const double gk = k * h;
          const double d = (x(0) - gi) * (x(0) - gi) + (x(1) - gj) * (x(1) - gj) + (x(2) - gk) * (x(2) - gk);
          if (d < best) best = d, arg = vec({gi, gj, gk});
        }
      }
    CHECK((p - arg).cwiseAbs().maxCoeff() < 2e-3);
  }
}

TEST_CASE("projection onto nearly parallel halfspaces is exact") {
  // A thin wedge makes alternating projections crawl; the result must
  // still satisfy the optimality inequality against every set point.
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 1.0, 1.0, 1.0001;
  const FeasibleSet s(VectorXd::Constant(2, -5.0), VectorXd::Constant(2, 5.0), a, vec({1.0, 1.0}));
  const VectorXd x = vec({4.0, -1.0});
  const VectorXd b = s.project(x);
  CHECK(s.contains(b));
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const VectorXd p = s.project(testsupport::uniform(rng, s.lower(), s.upper()));
    worst = std::max(worst, (p - b).dot(x - b));
  }
  CHECK(worst < 1e-9);
}
