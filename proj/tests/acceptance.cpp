// Acceptance suite: one PASS/FAIL line per criterion, with wall time.
// Exit status is the number of failed criteria.

#include <chrono>
#include <complex>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mgrid/experiments.hpp"
#include "mgrid/feasible_set.hpp"
#include "mgrid/grid_model.hpp"
#include "mgrid/mirror_descent.hpp"
#include "mgrid/network_io.hpp"
#include "mgrid/simulator.hpp"
#include "mgrid/thermal.hpp"

using namespace mgrid;
using Eigen::VectorXd;

namespace {

const std::filesystem::path kData = MGRID_TEST_DATA_DIR;

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > limit_s) {
    o.pass = false;
    o.detail += " (over time limit)";
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %-34s %8.3fs / %gs  %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs, limit_s,
              o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

VectorXd uniform(std::mt19937_64& rng, const VectorXd& lo, const VectorXd& hi) {
  VectorXd x(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) x(i) = std::uniform_real_distribution<double>(lo(i), hi(i))(rng);
  return x;
}

std::vector<double> cli_flows(const std::string& config) {
  const std::string cmd = std::string(MGSIM_BINARY) + " flows --config " + (kData / config).string();
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("cannot run mgsim");
  std::string out;
  char buf[256];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  if (pclose(pipe) != 0) throw std::runtime_error("mgsim flows failed");
  std::istringstream in(out);
  std::string line;
  std::getline(in, line);
  std::vector<double> flows;
  while (std::getline(in, line)) flows.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  return flows;
}

// Exact AC power flow on a two-bus line by fixed-point iteration.
double ac_loss(double r, double x, double p) {
  const std::complex<double> z(r, x), s(p, 0.0);
  std::complex<double> u1 = 1.0;
  for (int k = 0; k < 500; ++k) u1 = 1.0 + z * std::conj(s / u1);
  return std::norm(std::conj(s / u1)) * r;
}

struct SlotData {
  ObjectiveParams params;
  ThermalState state;
  FeasibleSet set;
};

SlotData slot_data(const Scenario& sc, std::size_t t) {
  ObjectiveParams params{sc.lambda_price, sc.buildings, sc.blocks(), sc.grid->u_nominal(), sc.gen_at(t),
                         sc.bounds.base_load};
  return {params, ThermalState{sc.c_in0, sc.c_out_at(t)},
          build_feasible(*sc.blocks(), sc.gen_at(t), sc.grid->u_nominal(), sc.bounds)};
}

double conservation_residual(const RunResult& run, const Scenario& sc) {
  const auto& g = *sc.grid;
  double worst = 0.0;
  for (const auto& r : run.slots) {
    const VectorXd p = g.injections(r.p_gen_true, r.p_cons_total);
    const double loss = power_loss_full(g.x_grounded(), p, VectorXd::Zero(p.size()), g.u_nominal());
    worst = std::max(worst, std::abs(r.p0 - (r.p_cons_total.sum() - r.p_gen_true.sum() + loss)));
  }
  return worst;
}

}  // namespace

int main() {
  criterion(1, "motivating example flows", 1.0, [] {
    const auto a = cli_flows("motivating_a.json");
    const auto b = cli_flows("motivating_b.json");
    const std::vector<double> expect{20, 15, 10, 5};
    double err = a.size() == 4 ? 0.0 : 1e300;
    for (std::size_t k = 0; k < a.size() && k < 4; ++k) err = std::max(err, std::abs(a[k] - expect[k]));
    if (b.size() != 8) err = 1e300;
    for (double f : b) err = std::max(err, std::abs(std::abs(f) - 2.5));
    return Outcome{err <= 1e-9, "max error " + fmt(err)};
  });

  criterion(2, "sensitivity identity", 1.0, [] {
    double worst = 0.0;
    for (const char* file : {"two_bus.csv", "ieee37.csv"}) {
      const auto net = load_network_csv(kData / file);
      const auto y = build_admittance(net.lines, net.n_buses);
      const auto xf = compute_sensitivity(y);
      const auto n1 = y.rows();
      const Eigen::MatrixXcd target = Eigen::MatrixXcd::Identity(n1, n1) -
                                      Eigen::MatrixXcd::Constant(n1, n1, 1.0 / static_cast<double>(n1));
      worst = std::max(worst, (y * xf - target).cwiseAbs().maxCoeff());
      worst = std::max(worst, (xf * Eigen::VectorXcd::Ones(n1)).cwiseAbs().maxCoeff());
    }
    return Outcome{worst < 1e-9, "max residual " + fmt(worst)};
  });

  criterion(3, "loss model vs AC (two-bus)", 1.0, [] {
    const auto net = load_network_csv(kData / "two_bus.csv");
    const GridModel g(net.lines, net.n_buses, 1.0, {}, {1});
    const double r = 0.02, x = 0.04;
    double worst = 0.0;
    for (int k = -20; k <= 20; ++k) {
      if (k == 0) continue;
      const double p = 0.1 * k / 20.0;  // injection at bus 1
      const double lin = power_loss(g.blocks(), VectorXd(0), VectorXd::Constant(1, -p), 1.0);
      worst = std::max(worst, std::abs(lin - ac_loss(r, x, p)) / ac_loss(r, x, p));
    }
    return Outcome{worst < 0.02, "max relative error " + fmt(worst)};
  });

  ScenarioOverrides dyn_ov;
  const auto dynamic = build_ieee37_scenario(kData, dyn_ov);

  criterion(4, "gradient vs finite differences", 10.0, [&] {
    std::mt19937_64 rng(4);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const auto s = slot_data(dynamic, rng() % dynamic.horizon);
      const VectorXd p = s.set.project(uniform(rng, s.set.lower(), s.set.upper()));
      const VectorXd g = grad_f(s.state, p, s.params);
      VectorXd fd(p.size());
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        VectorXd a = p, b = p;
        a(i) += 1e-5;
        b(i) -= 1e-5;
        fd(i) = (objective_f(s.state, a, s.params) - objective_f(s.state, b, s.params)) / 2e-5;
      }
      worst = std::max(worst, (g - fd).norm() / std::max(1.0, fd.norm()));
    }
    return Outcome{worst < 1e-6, "max relative error " + fmt(worst)};
  });

  criterion(5, "profit + price * f constant", 10.0, [&] {
    const auto s = slot_data(dynamic, 450);
    const double ref = usecb_profit(s.state, VectorXd::Zero(s.set.dimension()), s.params);
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const VectorXd p = s.set.project(uniform(rng, s.set.lower(), s.set.upper()));
      worst = std::max(worst, std::abs(usecb_profit(s.state, p, s.params) +
                                       s.params.lambda_price * objective_f(s.state, p, s.params) - ref));
    }
    return Outcome{worst < 1e-9, "max spread " + fmt(worst)};
  });

  criterion(6, "projection suite", 30.0, [] {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double idem = 0, member = 0, expand = 0, pyth = 0;
    auto hs = [](const VectorXd& a, const VectorXd& b) { return 0.5 * (a - b).squaredNorm(); };
    for (int rep = 0; rep < 1000; ++rep) {
      const int n = 2 + static_cast<int>(rng() % 5), m = 1 + static_cast<int>(rng() % 4);
      VectorXd lo(n), hi(n);
      for (int i = 0; i < n; ++i) lo(i) = u(rng), hi(i) = lo(i) + 0.1 + std::abs(u(rng));
      const VectorXd inner = 0.5 * (lo + hi);
      Eigen::MatrixXd a(m, n);
      VectorXd b(m);
      for (int k = 0; k < m; ++k) {
        for (int i = 0; i < n; ++i) a(k, i) = u(rng);
        b(k) = a.row(k).dot(inner) + 0.05 * std::abs(u(rng));
      }
      const FeasibleSet s(lo, hi, a, b);
      const VectorXd span = hi - lo;
      const VectorXd x = uniform(rng, lo - span, hi + span), y = uniform(rng, lo - span, hi + span);
      const VectorXd px = s.project(x), py = s.project(y);
      const VectorXd pa = s.project(uniform(rng, lo - span, hi + span));
      idem = std::max(idem, (s.project(px) - px).norm());
      member = std::max(member, s.max_violation(px));
      expand = std::max(expand, (px - py).norm() - (x - y).norm());
      pyth = std::max(pyth, hs(pa, px) + hs(px, x) - hs(pa, x));
    }
    // Three-dimensional grid-search oracle.
    Eigen::MatrixXd a(1, 3);
    a << 1.0, 2.0, 1.0;
    const FeasibleSet s(VectorXd::Zero(3), VectorXd::Constant(3, 0.25), a, VectorXd::Constant(1, 0.4));
    VectorXd x(3);
    x << 0.3, 0.2, 0.1;
    const VectorXd p = s.project(x);
    double best = 1e300;
    VectorXd arg(3);
    for (int i = 0; i <= 250; ++i)
      for (int j = 0; j <= 250; ++j)
        for (int k = 0; k <= 250; ++k) {
          const double gi = i * 1e-3, gj = j * 1e-3, gk = k * 1e-3;
          if (gi + 2 * gj + gk > 0.4 + 1e-15) break;
          const double d = (x(0) - gi) * (x(0) - gi) + (x(1) - gj) * (x(1) - gj) + (x(2) - gk) * (x(2) - gk);
          if (d < best) best = d, arg << gi, gj, gk;
        }
    const double grid = (p - arg).cwiseAbs().maxCoeff();
    const bool ok = idem <= 1e-9 && member <= 1e-9 && expand <= 1e-9 && pyth <= 1e-9 && grid <= 2e-3;
    return Outcome{ok, "idempotence " + fmt(idem) + ", membership " + fmt(member) + ", expansion " + fmt(expand) +
                           ", three-point " + fmt(pyth) + ", grid " + fmt(grid)};
  });

  criterion(7, "Bregman three-point identity", 1.0, [] {
    const auto geom = BregmanGeometry::euclidean_geometry();
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      VectorXd x(5), y(5), z(5);
      for (int i = 0; i < 5; ++i) x(i) = n01(rng), y(i) = n01(rng), z(i) = n01(rng);
      const double lhs = bregman_divergence(geom, x, y) + bregman_divergence(geom, y, z);
      const double rhs = bregman_divergence(geom, x, z) + (x - y).dot(geom.grad_psi(z) - geom.grad_psi(y));
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    return Outcome{worst < 1e-9, "max residual " + fmt(worst)};
  });

  ScenarioOverrides st_ov;
  st_ov.is_static = true;
  st_ov.horizon = 500;
  const auto stat = build_ieee37_scenario(kData, st_ov);
  std::vector<RunResult> static_runs;

  criterion(8, "static experiment reproduction", 120.0, [&] {
    const auto oracle = run_scheme(stat, Scheme::Oracle);
    static_runs.push_back(oracle);
    const double f_star = oracle.slots.back().objective;
    const std::size_t reps = 50;
    auto pairs = parallel_map(reps, [&](std::size_t k) {
      const auto seed = replication_seed(stat.run_seed, k);
      return std::make_pair(run_scheme(stat, Scheme::Stochastic, seed), run_scheme(stat, Scheme::Exact, seed));
    });
    std::size_t reached = 0, quieter = 0, worst_hit = 0;
    for (const auto& [s, e] : pairs) {
      std::size_t hit = stat.horizon;
      for (std::size_t t = 0; t < s.slots.size(); ++t)
        if (std::abs(s.slots[t].objective - f_star) <= 0.01 * std::abs(f_star)) {
          hit = t + 1;
          break;
        }
      if (hit <= 500) ++reached;
      worst_hit = std::max(worst_hit, hit);
      if (metrics(s, stat, 100).trailing_variance < metrics(e, stat, 100).trailing_variance) ++quieter;
      static_runs.push_back(s);
      static_runs.push_back(e);
    }
    const bool ok = reached == reps && quieter >= 45;
    return Outcome{ok, "within 1% by slot " + std::to_string(worst_hit) + " in " + std::to_string(reached) + "/50, " +
                           "lower variance in " + std::to_string(quieter) + "/50"};
  });

  criterion(9, "regret rate", 300.0, [] {
    ScenarioOverrides ov;
    ov.is_static = true;
    const auto sc = build_ieee37_scenario(kData, ov);
    RegretExperimentConfig cfg;
    cfg.seed = sc.run_seed;
    const auto rep = run_regret_experiment(sc, cfg);
    bool tail_ok = true;
    std::string tails;
    for (const auto& p : rep.points) {
      tail_ok = tail_ok && p.tail_frequency <= p.azuma_bound + 0.05;
      tails += " T=" + std::to_string(p.horizon) + ":R=" + fmt(p.mean) + ",tail=" + fmt(p.tail_frequency);
    }
    const bool slope_ok = rep.slope >= 0.4 && rep.slope <= 0.6;
    return Outcome{slope_ok && tail_ok, "slope " + fmt(rep.slope) + " (need [0.4, 0.6]), Azuma bound " +
                                            fmt(rep.points.front().azuma_bound) + ";" + tails};
  });

  std::vector<RunResult> dynamic_runs;
  criterion(11, "dynamic run sanity", 120.0, [&] {
    for (auto scheme : {Scheme::Stochastic, Scheme::Exact, Scheme::Oracle}) dynamic_runs.push_back(run_scheme(dynamic, scheme));
    bool feasible = true;
    for (const auto& r : dynamic_runs) feasible = feasible && r.slots.size() == 900 && metrics(r, dynamic).all_feasible;
    const double stoch = metrics(dynamic_runs[0], dynamic).mean_abs_temp_dev;
    const double oracle = metrics(dynamic_runs[2], dynamic).mean_abs_temp_dev;
    const double rel = std::abs(stoch - oracle) / oracle;
    return Outcome{feasible && rel <= 0.10, "900 slots, feasible " + std::string(feasible ? "yes" : "no") +
                                                 ", mean |c_in - c_set| stochastic " + fmt(stoch) + " vs oracle " +
                                                 fmt(oracle) + " (" + fmt(100 * rel) + "%, need <= 10%)"};
  });

  criterion(10, "conservation in every slot", 60.0, [&] {
    double worst = 0.0;
    std::size_t slots = 0;
    for (const auto& r : dynamic_runs) worst = std::max(worst, conservation_residual(r, dynamic)), slots += r.slots.size();
    for (const auto& r : static_runs) worst = std::max(worst, conservation_residual(r, stat)), slots += r.slots.size();
    return Outcome{slots > 0 && worst <= 1e-9, std::to_string(slots) + " slots, max residual " + fmt(worst)};
  });

  std::printf("%d criteria failed\n", failures);
  return failures;
}
