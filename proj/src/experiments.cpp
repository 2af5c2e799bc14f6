#include "mgrid/experiments.hpp"

#include <cmath>
#include <limits>

#include "mgrid/errors.hpp"

namespace mgrid {

std::uint64_t replication_seed(std::uint64_t base, std::size_t k) {
  return k == 0 ? base : derive_seed(base, 0x2E9, k);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs two or more points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ModelError("log-log fit needs positive values");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

PgdResult solve_true_slot(const Scenario& sc, std::size_t slot, double tolerance) {
  const UsecbModel model(sc.buildings, sc.blocks(), sc.grid->u_nominal(), sc.lambda_price,
                         sc.bounds.base_load);
  const Eigen::VectorXd gen = sc.gen_at(slot);
  const auto set = build_feasible(sc.grid->blocks(), gen, sc.grid->u_nominal(), sc.bounds);
  const ThermalState state{sc.c_in0, sc.c_out_at(slot)};
  const auto f = model.objective(state, gen);
  return projected_gradient_descent([&](const Vector& p) { return f.value(p); },
                                    [&](const Vector& p) { return f.gradient(p); }, set,
                                    set.midpoint(), model.max_eigenvalue(), PgdOptions{tolerance, 1000000});
}

RegretReport run_regret_experiment(const Scenario& sc, const RegretExperimentConfig& cfg) {
  if (!sc.is_static)
    throw AssumptionError("regret experiment needs a static scenario (stationary objective)");
  if (cfg.horizons.empty() || cfg.replications == 0) throw ConfigError("regret: empty experiment");

  const UsecbModel model(sc.buildings, sc.blocks(), sc.grid->u_nominal(), sc.lambda_price,
                         sc.bounds.base_load);
  const Eigen::VectorXd gen = sc.gen_at(0);
  const auto set = build_feasible(sc.grid->blocks(), gen, sc.grid->u_nominal(), sc.bounds);
  const ThermalState truth{sc.c_in0, sc.c_out_at(0)};
  const auto f_true = model.objective(truth, gen);
  const auto star = projected_gradient_descent([&](const Vector& p) { return f_true.value(p); },
                                               [&](const Vector& p) { return f_true.gradient(p); }, set,
                                               set.midpoint(), model.max_eigenvalue(),
                                               PgdOptions{1e-10, 1000000});
  const auto geom = BregmanGeometry::euclidean_geometry();
  const auto bounds = estimate_bounds(
      set, [&](const Vector& p) { return f_true.gradient(p); }, 256, derive_seed(cfg.seed, 0xB0D));

  std::uint64_t t_max = 0;
  for (auto t : cfg.horizons) {
    if (t == 0) throw ConfigError("regret: horizons must be positive");
    t_max = std::max(t_max, t);
  }

  // The step schedule does not depend on T, so each replication's regret at
  // every horizon is a prefix of one run of length T_max.
  auto curves = parallel_map(
      cfg.replications,
      [&](std::size_t k) {
        const auto seed = replication_seed(cfg.seed, k);
        MdConfig md;
        md.d_radius = bounds.d_radius;
        md.g_star = bounds.g_star;
        OnlineMirrorDescent opt(geom, md, set);
        std::vector<double> values;
        values.reserve(t_max);
        for (std::uint64_t t = 1; t <= t_max; ++t) {
          const Vector& a = opt.iterate();
          values.push_back(f_true.value(a));
          ThermalState obs;
          obs.c_in = observe(truth.c_in, sc.noise.sigma_temp, NoiseMode::Absolute, seed, t, Channel::IndoorTemp);
          obs.c_out = observe(truth.c_out, sc.noise.sigma_temp, NoiseMode::Absolute, seed, t, Channel::OutdoorTemp);
          Vector g_obs = observe(gen, sc.noise.sigma_gen, sc.noise.gen_mode, seed, t, Channel::Generation);
          g_obs = g_obs.cwiseMax(0.0);
          const auto f_obs = model.objective(obs, g_obs);
          opt.advance(f_obs.gradient(a), set);
        }
        return regret(values, star.value).cumulative;
      },
      cfg.threads);

  RegretReport rep;
  rep.d_radius = bounds.d_radius;
  rep.g_star = bounds.g_star;
  rep.alpha = geom.alpha;
  rep.f_star = star.value;
  rep.variance_defined = cfg.replications > 1;
  std::vector<double> xs, ys;
  for (auto horizon : cfg.horizons) {
    RegretPoint pt;
    pt.horizon = horizon;
    const double T = static_cast<double>(horizon);
    const double base = 2.0 * rep.d_radius * rep.g_star * std::sqrt(T / rep.alpha);
    const double eps = base;
    pt.threshold = base + eps;
    pt.azuma_bound = std::exp(-rep.alpha * eps * eps /
                              (16.0 * T * rep.d_radius * rep.d_radius * rep.g_star * rep.g_star));
    std::size_t exceed = 0;
    for (const auto& c : curves) {
      const double r = c[horizon - 1];
      pt.samples.push_back(r);
      pt.mean += r;
      if (r >= pt.threshold) ++exceed;
    }
    const double n = static_cast<double>(curves.size());
    pt.mean /= n;
    if (curves.size() > 1) {
      double v = 0.0;
      for (double r : pt.samples) v += (r - pt.mean) * (r - pt.mean);
      pt.stddev = std::sqrt(v / (n - 1.0));
    } else {
      pt.stddev = std::numeric_limits<double>::quiet_NaN();
    }
    pt.tail_frequency = static_cast<double>(exceed) / n;
    xs.push_back(T);
    ys.push_back(pt.mean);
    rep.points.push_back(std::move(pt));
  }
  rep.slope = xs.size() >= 2 ? loglog_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

nlohmann::json regret_json(const RegretReport& rep) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : rep.points) {
    pts.push_back({{"T", p.horizon},
                   {"mean_regret", p.mean},
                   {"stddev_regret", rep.variance_defined ? nlohmann::json(p.stddev) : nlohmann::json(nullptr)},
                   {"tail_threshold", p.threshold},
                   {"tail_frequency", p.tail_frequency},
                   {"azuma_bound", p.azuma_bound}});
  }
  nlohmann::json out{{"d_radius", rep.d_radius},
                     {"g_star", rep.g_star},
                     {"alpha", rep.alpha},
                     {"f_star", rep.f_star},
                     {"points", pts},
                     {"loglog_slope", std::isfinite(rep.slope) ? nlohmann::json(rep.slope) : nlohmann::json(nullptr)},
                     {"variance_defined", rep.variance_defined}};
  if (!rep.variance_defined) out["note"] = "variance undefined with a single replication";
  return out;
}

}  // namespace mgrid
