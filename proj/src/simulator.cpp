#include "mgrid/simulator.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "mgrid/errors.hpp"

namespace mgrid {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Stochastic: return "stochastic";
    case Scheme::Exact: return "exact";
    case Scheme::Oracle: return "oracle";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "stochastic") return Scheme::Stochastic;
  if (name == "exact") return Scheme::Exact;
  if (name == "oracle") return Scheme::Oracle;
  throw ConfigError("unknown scheme '" + name + "' (expected stochastic|exact|oracle)");
}

namespace {

struct Observation {
  ThermalState state;
  Eigen::VectorXd p_gen;
  int clamped = 0;
};

Observation observe_slot(const Scenario& sc, std::uint64_t seed, std::size_t t,
                         const ThermalState& truth, const Eigen::VectorXd& gen) {
  Observation obs;
  const auto slot = static_cast<std::uint64_t>(t);
  obs.p_gen = observe(gen, sc.noise.sigma_gen, sc.noise.gen_mode, seed, slot, Channel::Generation);
  for (Eigen::Index i = 0; i < obs.p_gen.size(); ++i) {
    if (obs.p_gen(i) < 0.0) {
      obs.p_gen(i) = 0.0;
      ++obs.clamped;
    }
  }
  obs.state.c_in = observe(truth.c_in, sc.noise.sigma_temp, NoiseMode::Absolute, seed, slot, Channel::IndoorTemp);
  obs.state.c_out = observe(truth.c_out, sc.noise.sigma_temp, NoiseMode::Absolute, seed, slot, Channel::OutdoorTemp);
  return obs;
}

}  // namespace

RunResult run_scheme(const Scenario& sc, Scheme scheme, std::optional<std::uint64_t> seed_opt,
                     const RunOptions& options) {
  const std::uint64_t seed = seed_opt.value_or(sc.run_seed);
  const UsecbModel model(sc.buildings, sc.blocks(), sc.grid->u_nominal(), sc.lambda_price,
                         sc.bounds.base_load);
  const double lipschitz = model.max_eigenvalue();

  ObjectiveParams accounting;
  accounting.lambda_price = sc.lambda_price;
  accounting.buildings = sc.buildings;
  accounting.blocks = sc.blocks();
  accounting.u_nominal = sc.grid->u_nominal();
  accounting.base_load = sc.bounds.base_load;

  RunResult res;
  res.scheme = scheme;
  res.seed = seed;
  res.slots.reserve(sc.horizon);

  ThermalState truth{sc.c_in0, sc.c_out_at(0)};
  std::optional<FeasibleSet> set;
  std::optional<OnlineMirrorDescent> md;
  Eigen::VectorXd warm;

  for (std::size_t t = 0; t < sc.horizon; ++t) {
    truth.c_out = sc.c_out_at(t);
    const Eigen::VectorXd gen = sc.gen_at(t);
    if (!set || !sc.is_static) set.emplace(build_feasible(sc.grid->blocks(), gen, sc.grid->u_nominal(), sc.bounds));

    const QuadraticObjective f_true = model.objective(truth, gen);
    Observation obs = scheme == Scheme::Oracle ? Observation{truth, gen, 0}
                                               : observe_slot(sc, seed, t, truth, gen);

    Eigen::VectorXd applied;
    if (scheme == Scheme::Stochastic) {
      if (!md) {
        // Step-size bounds calibrated on the first slot's expected objective.
        const auto bounds = estimate_bounds(
            *set, [&](const Eigen::VectorXd& p) { return f_true.gradient(p); }, options.bound_samples,
            derive_seed(seed, 0xB0D));
        res.d_radius = bounds.d_radius;
        res.g_star = bounds.g_star;
        MdConfig cfg;
        cfg.d_radius = bounds.d_radius;
        cfg.g_star = bounds.g_star;
        md.emplace(BregmanGeometry::euclidean_geometry(), cfg, *set);
      }
      const QuadraticObjective f_obs = model.objective(obs.state, obs.p_gen);
      md->advance(f_obs.gradient(md->iterate()), *set);
      applied = md->iterate();
    } else {
      const QuadraticObjective f_obs = model.objective(obs.state, obs.p_gen);
      if (warm.size() == 0) warm = set->project(set->midpoint());
      auto sol = projected_gradient_descent(
          [&](const Eigen::VectorXd& p) { return f_obs.value(p); },
          [&](const Eigen::VectorXd& p) { return f_obs.gradient(p); }, *set, warm, lipschitz,
          PgdOptions{options.exact_tolerance, options.exact_max_iterations});
      applied = std::move(sol.minimizer);
      warm = applied;
    }

    SlotRecord rec;
    rec.t = t;
    rec.p_gen_true = gen;
    rec.p_gen_obs = obs.p_gen;
    rec.gen_clamped = obs.clamped;
    rec.c_out_true = truth.c_out;
    rec.c_out_obs = obs.state.c_out;
    rec.c_in_true = truth.c_in;
    rec.c_in_obs = obs.state.c_in;
    rec.p_ac = applied;
    rec.p_cons_total = sc.bounds.base_load + applied;
    accounting.p_gen = gen;
    rec.loss = slot_loss(accounting, applied);
    rec.p0 = grid_intake(gen, rec.p_cons_total, rec.loss);
    rec.c_in_next = thermal_step(truth, applied, sc.buildings);
    rec.objective = f_true.value(applied);
    rec.violation = set->max_violation(applied);
    if (!sc.is_static) truth.c_in = rec.c_in_next;
    res.slots.push_back(std::move(rec));
  }
  return res;
}

RunSummary metrics(const RunResult& run, const Scenario& sc, std::size_t window) {
  RunSummary s;
  const auto n = run.slots.size();
  s.window = std::min(window, n);
  for (const auto& r : run.slots) {
    s.loss.push_back(r.loss);
    s.p0.push_back(r.p0);
    s.objective.push_back(r.objective);
    double dev = 0.0;
    for (Eigen::Index v = 0; v < r.c_in_next.size(); ++v)
      dev += std::abs(r.c_in_next(v) - sc.buildings[v].c_set);
    s.mean_abs_dev.push_back(r.c_in_next.size() ? dev / static_cast<double>(r.c_in_next.size()) : 0.0);
    const double residual = r.p0 - (r.p_cons_total.sum() - r.p_gen_true.sum() + r.loss);
    s.max_conservation_residual = std::max(s.max_conservation_residual, std::abs(residual));
    s.max_violation = std::max(s.max_violation, r.violation);
    s.gen_clamped += r.gen_clamped;
  }
  auto mean = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
  };
  s.mean_loss = mean(s.loss);
  s.mean_p0 = mean(s.p0);
  s.mean_objective = mean(s.objective);
  s.mean_abs_temp_dev = mean(s.mean_abs_dev);
  s.all_feasible = s.max_violation <= 1e-9;
  if (s.window >= 2) {
    double m = 0.0;
    for (std::size_t k = n - s.window; k < n; ++k) m += s.objective[k];
    m /= static_cast<double>(s.window);
    double var = 0.0;
    for (std::size_t k = n - s.window; k < n; ++k) var += (s.objective[k] - m) * (s.objective[k] - m);
    s.trailing_variance = var / static_cast<double>(s.window - 1);
  }
  return s;
}

void write_run_csv(const RunResult& run, const Scenario& sc, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "t,time,scheme,p0,loss,objective,total_ac,total_gen_true,total_gen_obs,"
         "mean_abs_temp_dev,violation";
  for (std::size_t v = 0; v < sc.n_load(); ++v)
    out << ",p_ac_" << sc.bus_labels[sc.grid->blocks().load_buses[v]];
  for (std::size_t v = 0; v < sc.n_load(); ++v)
    out << ",c_in_" << sc.bus_labels[sc.grid->blocks().load_buses[v]];
  out << '\n';
  for (const auto& r : run.slots) {
    double dev = 0.0;
    for (Eigen::Index v = 0; v < r.c_in_next.size(); ++v) dev += std::abs(r.c_in_next(v) - sc.buildings[v].c_set);
    out << r.t << ',' << sc.start_time + sc.dt * static_cast<double>(r.t) << ',' << to_string(run.scheme) << ','
        << r.p0 << ',' << r.loss << ',' << r.objective << ',' << r.p_ac.sum() << ',' << r.p_gen_true.sum()
        << ',' << r.p_gen_obs.sum() << ',' << dev / static_cast<double>(r.c_in_next.size()) << ','
        << r.violation;
    for (Eigen::Index v = 0; v < r.p_ac.size(); ++v) out << ',' << r.p_ac(v);
    for (Eigen::Index v = 0; v < r.c_in_next.size(); ++v) out << ',' << r.c_in_next(v);
    out << '\n';
  }
  out.precision(old_precision);
}

nlohmann::json summary_json(const RunResult& run, const RunSummary& s) {
  return nlohmann::json{
      {"scheme", to_string(run.scheme)},
      {"seed", run.seed},
      {"slots", run.slots.size()},
      {"mean_loss", s.mean_loss},
      {"mean_p0", s.mean_p0},
      {"mean_objective", s.mean_objective},
      {"mean_abs_temp_dev", s.mean_abs_temp_dev},
      {"trailing_window", s.window},
      {"trailing_objective_variance", s.trailing_variance},
      {"max_conservation_residual", s.max_conservation_residual},
      {"max_violation", s.max_violation},
      {"all_feasible", s.all_feasible},
      {"generation_observations_clamped", s.gen_clamped},
      {"d_radius", run.d_radius},
      {"g_star", run.g_star},
  };
}

}  // namespace mgrid
