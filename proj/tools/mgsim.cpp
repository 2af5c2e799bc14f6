// mgsim: command-line front end for the microgrid simulator.
//
// Exit codes: 0 ok, 2 configuration error, 3 model error, 4 violated
// experiment assumption. Every flag can also be given through an
// environment variable with the MGSIM_ prefix (MGSIM_CONFIG, MGSIM_SEED, ...).

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mgrid/errors.hpp"
#include "mgrid/experiments.hpp"
#include "mgrid/feasible_set.hpp"
#include "mgrid/grid_model.hpp"
#include "mgrid/network_io.hpp"
#include "mgrid/scenario.hpp"
#include "mgrid/simulator.hpp"
#include "mgrid/thermal.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mgrid;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kModel = 3, kAssumption = 4 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon;
  std::string out = ".";
  std::string scheme = "stochastic";
  std::size_t replications = 20;
  std::string t_list = "100,1000,10000";
  unsigned threads = 0;
  int points = 100;
};

// Writes through a temporary sibling and renames, so readers never see a
// partial file.
void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

fs::path config_or_default(const Options& o, const char* fallback) {
  if (!o.config.empty()) return o.config;
  return default_data_dir() / fallback;
}

Scenario load(const Options& o, const char* fallback) {
  ScenarioOverrides ov;
  ov.horizon = o.horizon;
  ov.run_seed = o.seed;
  return load_scenario(config_or_default(o, fallback), ov);
}

std::string run_csv(const RunResult& run, const Scenario& sc) {
  std::ostringstream os;
  write_run_csv(run, sc, os);
  return os.str();
}

int cmd_simulate(const Options& o) {
  const auto sc = load(o, "ieee37_dynamic.json");
  const auto scheme = parse_scheme(o.scheme);
  const auto run = run_scheme(sc, scheme, o.seed);
  const auto summary = metrics(run, sc);
  const fs::path dir = o.out;
  write_atomic(dir / (to_string(scheme) + ".csv"), run_csv(run, sc));
  json js = summary_json(run, summary);
  js["scenario"] = sc.name;
  write_atomic(dir / (to_string(scheme) + "_summary.json"), js.dump(2) + "\n");
  std::cout << sc.name << " " << to_string(scheme) << ": " << run.slots.size() << " slots, mean loss "
            << summary.mean_loss << ", mean |c_in - c_set| " << summary.mean_abs_temp_dev
            << ", feasible " << (summary.all_feasible ? "yes" : "no") << "\n";
  return kOk;
}

int cmd_compare(const Options& o) {
  const auto sc = load(o, "ieee37_dynamic.json");
  const std::vector<Scheme> schemes{Scheme::Stochastic, Scheme::Exact, Scheme::Oracle};
  const auto runs = parallel_map(
      schemes.size(), [&](std::size_t i) { return run_scheme(sc, schemes[i], o.seed); }, o.threads);
  const fs::path dir = o.out;
  json report{{"scenario", sc.name}, {"schemes", json::array()}};
  for (const auto& run : runs) {
    const auto summary = metrics(run, sc);
    write_atomic(dir / (to_string(run.scheme) + ".csv"), run_csv(run, sc));
    report["schemes"].push_back(summary_json(run, summary));
    std::cout << to_string(run.scheme) << ": mean objective " << summary.mean_objective
              << ", mean |c_in - c_set| " << summary.mean_abs_temp_dev << ", trailing variance "
              << summary.trailing_variance << "\n";
  }
  write_atomic(dir / "compare.json", report.dump(2) + "\n");
  return kOk;
}

std::vector<std::uint64_t> parse_t_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& tok : split_csv_line(text)) {
    const double v = parse_double(tok, "--T-list entry");
    if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("--T-list entries must be positive integers");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw ConfigError("--T-list is empty");
  return out;
}

int cmd_regret(const Options& o) {
  RegretExperimentConfig cfg;
  cfg.horizons = parse_t_list(o.t_list);
  if (o.replications == 0) throw ConfigError("--replications must be positive");
  cfg.replications = o.replications;
  cfg.threads = o.threads;
  const auto sc = load(o, "ieee37_static.json");
  cfg.seed = o.seed.value_or(sc.run_seed);
  const auto rep = run_regret_experiment(sc, cfg);
  auto js = regret_json(rep);
  js["scenario"] = sc.name;
  js["replications"] = cfg.replications;
  js["seed"] = cfg.seed;
  write_atomic(fs::path(o.out) / "regret.json", js.dump(2) + "\n");
  for (const auto& p : rep.points)
    std::cout << "T=" << p.horizon << " mean R_T " << p.mean << " tail " << p.tail_frequency
              << " bound " << p.azuma_bound << "\n";
  std::cout << "log-log slope " << rep.slope << (rep.variance_defined ? "" : " (variance undefined)")
            << "\n";
  return kOk;
}

int cmd_flows(const Options& o) {
  if (o.config.empty()) throw ConfigError("flows: --config is required");
  const fs::path path = o.config;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open flows config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("flows config is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object() || doc.value("kind", std::string{}) != "flows")
    throw ConfigError("flows config must have kind 'flows'");
  if (doc.value("schema_version", 0) != kScenarioSchemaVersion)
    throw ConfigError("flows config: unsupported schema_version");
  if (!doc.contains("network") || !doc.at("network").is_string())
    throw ConfigError("flows config: 'network' must be a file path");
  if (!doc.contains("injections") || !doc.at("injections").is_array())
    throw ConfigError("flows config: 'injections' must be an array");
  std::vector<double> inj;
  for (const auto& v : doc.at("injections")) {
    if (!v.is_number() || !std::isfinite(v.get<double>()))
      throw ConfigError("flows config: injections must be finite numbers");
    inj.push_back(v.get<double>());
  }
  const auto net = load_network_csv(path.parent_path() / doc.at("network").get<std::string>());
  if (inj.size() != net.n_buses)
    throw ConfigError("flows config: expected " + std::to_string(net.n_buses) + " injections");
  std::vector<Edge> edges;
  for (const auto& l : net.lines) edges.push_back({l.from, l.to});
  const auto flows = radial_line_flows(edges, inj);

  std::ostringstream table;
  table.precision(17);
  table << "edge,from,to,flow\n";
  for (std::size_t k = 0; k < edges.size(); ++k)
    table << k + 1 << ',' << edges[k].a << ',' << edges[k].b << ',' << flows[k] << '\n';
  std::cout << table.str();
  if (o.out != ".") write_atomic(fs::path(o.out) / "flows.csv", table.str());
  return kOk;
}

struct Check {
  std::string name;
  bool pass;
  double value;
};

int cmd_validate(const Options& o) {
  const auto sc = load(o, "ieee37_dynamic.json");
  const auto& g = *sc.grid;
  std::vector<Check> checks;
  const auto& y = g.admittance();
  const auto n1 = y.rows();
  checks.push_back({"admittance symmetric", (y - y.transpose()).cwiseAbs().maxCoeff() < 1e-12,
                    (y - y.transpose()).cwiseAbs().maxCoeff()});
  bool zero_shunt = true;
  for (const auto& l : g.lines()) zero_shunt = zero_shunt && l.shunt_admittance == Complex{};
  if (zero_shunt) {
    const double rows = y.rowwise().sum().cwiseAbs().maxCoeff() / std::max(1.0, y.cwiseAbs().maxCoeff());
    checks.push_back({"admittance rows sum to zero (relative)", rows < 1e-12, rows});
  }
  const Eigen::MatrixXcd target =
      Eigen::MatrixXcd::Identity(n1, n1) -
      Eigen::MatrixXcd::Constant(n1, n1, Complex(1.0 / static_cast<double>(n1), 0.0));
  const double ident = (y * g.x_full() - target).cwiseAbs().maxCoeff();
  checks.push_back({"sensitivity identity", ident < 1e-9, ident});
  const double null1 = (g.x_full() * Eigen::VectorXcd::Ones(n1)).cwiseAbs().maxCoeff();
  checks.push_back({"sensitivity annihilates ones", null1 < 1e-9, null1});
  const auto& b = g.blocks();
  const double sym = (b.x - b.x.transpose()).cwiseAbs().maxCoeff();
  checks.push_back({"sensitivity symmetric", sym < 1e-9, sym});
  const double tile = (reassemble_blocks(b) - b.x).cwiseAbs().maxCoeff();
  checks.push_back({"blocks tile Re(X)", tile <= 1e-12 * std::max(1.0, b.x.cwiseAbs().maxCoeff()), tile});
  const double qmin = b.q.size() ? Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(b.q).eigenvalues().minCoeff() : 0.0;
  checks.push_back({"Q positive semidefinite", qmin > -1e-12, qmin});
  const UsecbModel model(sc.buildings, sc.blocks(), g.u_nominal(), sc.lambda_price, sc.bounds.base_load);
  checks.push_back({"objective strictly convex", model.min_eigenvalue() > 0.0, model.min_eigenvalue()});
  double worst = 0.0;
  for (std::size_t t = 0; t < sc.horizon; ++t) {
    const auto set = build_feasible(*sc.blocks(), sc.gen_at(t), g.u_nominal(), sc.bounds);
    worst = std::max(worst, set.max_violation(set.project(set.midpoint())));
  }
  checks.push_back({"feasible set nonempty in every slot", worst <= 1e-9, worst});

  bool ok = true;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "ok   " : "FAIL ") << c.name << " (" << c.value << ")\n";
    ok = ok && c.pass;
  }
  return ok ? kOk : kModel;
}

int cmd_gradcheck(const Options& o) {
  const auto sc = load(o, "ieee37_dynamic.json");
  const std::size_t slot = 0;
  ObjectiveParams params{sc.lambda_price, sc.buildings, sc.blocks(), sc.grid->u_nominal(),
                         sc.gen_at(slot), sc.bounds.base_load};
  const ThermalState state{sc.c_in0, sc.c_out_at(slot)};
  const auto set = build_feasible(*sc.blocks(), sc.gen_at(slot), sc.grid->u_nominal(), sc.bounds);
  std::mt19937_64 rng(o.seed.value_or(sc.run_seed));
  const auto n = set.dimension();
  double worst = 0.0;
  for (int k = 0; k < o.points; ++k) {
    Eigen::VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i)
      p(i) = std::uniform_real_distribution<double>(set.lower()(i), set.upper()(i))(rng);
    p = set.project(p);
    const Eigen::VectorXd g = grad_f(state, p, params);
    Eigen::VectorXd fd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(p(i)));
      Eigen::VectorXd a = p, c = p;
      a(i) += h;
      c(i) -= h;
      fd(i) = (objective_f(state, a, params) - objective_f(state, c, params)) / (2.0 * h);
    }
    worst = std::max(worst, (g - fd).norm() / std::max(1.0, fd.norm()));
  }
  const bool ok = worst < 1e-6;
  std::cout << "gradient check at " << o.points << " points: max relative error " << worst
            << (ok ? " (ok)" : " (FAIL)") << "\n";
  return ok ? kOk : kModel;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microgrid demand-response simulator"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  std::size_t horizon = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Scenario or flows JSON")->envname("MGSIM_CONFIG");
    sub->add_option("--seed", seed, "Run seed (default: the config's seed)")->envname("MGSIM_SEED");
    sub->add_option("--horizon", horizon, "Override the number of slots")->envname("MGSIM_HORIZON");
    sub->add_option("--out", o.out, "Output directory")->envname("MGSIM_OUT");
    sub->add_option("--threads", o.threads, "Worker threads (0 = hardware)")->envname("MGSIM_THREADS");
  };

  auto* simulate = app.add_subcommand("simulate", "Run one control scheme");
  common(simulate);
  simulate->add_option("--scheme", o.scheme, "stochastic | exact | oracle")->envname("MGSIM_SCHEME");
  auto* compare = app.add_subcommand("compare", "Run all three schemes with one seed");
  common(compare);
  auto* regret = app.add_subcommand("regret", "Empirical regret-rate experiment");
  common(regret);
  regret->add_option("--replications", o.replications, "Replications per horizon")->envname("MGSIM_REPLICATIONS");
  regret->add_option("--T-list", o.t_list, "Comma-separated horizons")->envname("MGSIM_T_LIST");
  auto* flows = app.add_subcommand("flows", "Line flows of a radial network");
  common(flows);
  auto* validate = app.add_subcommand("validate", "Check model construction invariants");
  common(validate);
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare the gradient with finite differences");
  common(gradcheck);
  gradcheck->add_option("--points", o.points, "Number of random feasible points")->envname("MGSIM_POINTS");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--horizon")) {
      if (horizon == 0) {
        std::cerr << "error: --horizon must be positive\n";
        return kConfig;
      }
      o.horizon = horizon;
    }
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*compare) return cmd_compare(o);
    if (*regret) return cmd_regret(o);
    if (*flows) return cmd_flows(o);
    if (*validate) return cmd_validate(o);
    if (*gradcheck) return cmd_gradcheck(o);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const AssumptionError& e) {
    std::cerr << "assumption violated: " << e.what() << "\n";
    return kAssumption;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kModel;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  }
  return kConfig;
}
