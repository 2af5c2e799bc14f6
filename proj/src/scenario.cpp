#include "mgrid/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>

#include "mgrid/errors.hpp"
#include "mgrid/network_io.hpp"
#include "mgrid/timeseries.hpp"

#ifndef MGRID_DATA_DIR
#define MGRID_DATA_DIR "data"
#endif

namespace mgrid {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ConfigError("scenario: missing '" + std::string(key) + "' in " + where);
  return obj.at(key);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError("scenario: '" + what + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("scenario: '" + what + "' must be finite");
  return x;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return number(obj.at(key), where + "." + key);
}

std::filesystem::path resolve(const std::filesystem::path& base, const json& v,
                              const std::string& what) {
  if (!v.is_string()) throw ConfigError("scenario: '" + what + "' must be a file path");
  std::filesystem::path p = v.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

// A per-building quantity: scalar, explicit array, or {"mean", "std"} draw
// (truncated to values above `floor` by redrawing).
std::vector<double> per_building(const json& v, std::size_t n, const std::string& what,
                                 std::mt19937_64& rng, double floor, bool allow_draw) {
  std::vector<double> out(n);
  if (v.is_number()) {
    std::fill(out.begin(), out.end(), number(v, what));
  } else if (v.is_array()) {
    if (v.size() != n)
      throw ConfigError("scenario: '" + what + "' needs " + std::to_string(n) + " entries");
    for (std::size_t i = 0; i < n; ++i) out[i] = number(v[i], what);
  } else if (allow_draw && v.is_object()) {
    const double mean = number(require(v, "mean", what), what + ".mean");
    const double sd = number(require(v, "std", what), what + ".std");
    if (sd < 0.0) throw ConfigError("scenario: '" + what + ".std' must be non-negative");
    std::normal_distribution<double> normal(mean, sd);
    for (auto& x : out) {
      int tries = 0;
      do {
        x = sd == 0.0 ? mean : normal(rng);
      } while (!(x > floor) && ++tries < 1000);
      if (!(x > floor)) throw ConfigError("scenario: cannot draw '" + what + "' above bound");
    }
  } else {
    throw ConfigError("scenario: '" + what + "' has an unsupported form");
  }
  return out;
}

std::size_t bus_index(long label, const std::vector<long>& labels, const std::string& what) {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end())
    throw ConfigError("scenario: " + what + " refers to unknown bus " + std::to_string(label));
  return static_cast<std::size_t>(it - labels.begin());
}

}  // namespace

std::shared_ptr<const SensitivityBlocks> Scenario::blocks() const {
  return std::shared_ptr<const SensitivityBlocks>(grid, &grid->blocks());
}

Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir,
                            const ScenarioOverrides& overrides) {
  if (!doc.is_object()) throw ConfigError("scenario: document must be a JSON object");
  const auto version = require(doc, "schema_version", "document");
  if (!version.is_number_integer() || version.get<int>() != kScenarioSchemaVersion)
    throw ConfigError("scenario: unsupported schema_version (expected " +
                      std::to_string(kScenarioSchemaVersion) + ")");
  if (doc.contains("kind") && doc.at("kind") != "scenario")
    throw ConfigError("scenario: document kind must be 'scenario'");

  Scenario sc;
  sc.name = doc.value("name", std::string{"scenario"});
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) throw ConfigError("scenario: 'seed' must be unsigned");
    sc.structure_seed = doc.at("seed").get<std::uint64_t>();
  }
  sc.run_seed = overrides.run_seed.value_or(
      doc.contains("run_seed") ? doc.at("run_seed").get<std::uint64_t>() : sc.structure_seed);

  // Network and bus partition.
  const auto& net = require(doc, "network", "document");
  const auto net_data = load_network_csv(resolve(base_dir, require(net, "file", "network"), "network.file"));
  const double u_nominal = number_or(net, "u_nominal", 1.0, "network");
  if (net.contains("labels")) {
    sc.bus_labels = load_bus_labels(resolve(base_dir, net.at("labels"), "network.labels"), net_data.n_buses);
  } else {
    sc.bus_labels.resize(net_data.n_buses);
    for (std::size_t i = 0; i < net_data.n_buses; ++i) sc.bus_labels[i] = static_cast<long>(i);
  }
  if (net.contains("pcc")) {
    const long pcc = static_cast<long>(number(net.at("pcc"), "network.pcc"));
    if (sc.bus_labels[0] != pcc)
      throw ConfigError("scenario: PCC " + std::to_string(pcc) + " must be network bus index 0");
  }

  const auto& gen = require(doc, "generation", "document");
  std::vector<std::size_t> gen_buses;
  std::set<std::size_t> gen_set;
  for (const auto& b : require(gen, "buses", "generation")) {
    const auto idx = bus_index(static_cast<long>(number(b, "generation.buses")), sc.bus_labels, "generation.buses");
    if (idx == 0) throw ConfigError("scenario: the PCC cannot be a generation bus");
    if (!gen_set.insert(idx).second) throw ConfigError("scenario: duplicate generation bus");
    gen_buses.push_back(idx);
  }
  std::vector<std::size_t> load_buses;
  for (std::size_t i = 1; i < net_data.n_buses; ++i)
    if (!gen_set.count(i)) load_buses.push_back(i);
  if (load_buses.empty()) throw ConfigError("scenario: no consumption buses");

  sc.grid = std::make_shared<GridModel>(net_data.lines, net_data.n_buses, u_nominal, gen_buses, load_buses);

  // Slots.
  const auto& slots = require(doc, "slots", "document");
  sc.dt = number_or(slots, "dt", 48.0, "slots");
  if (!(sc.dt > 0.0)) throw ConfigError("scenario: slots.dt must be positive");
  sc.start_time = number_or(slots, "start", 0.0, "slots");
  const double horizon = number(require(slots, "horizon", "slots"), "slots.horizon");
  if (horizon < 1 || horizon != std::floor(horizon)) throw ConfigError("scenario: slots.horizon must be a positive integer");
  sc.horizon = overrides.horizon.value_or(static_cast<std::size_t>(horizon));
  if (sc.horizon == 0) throw ConfigError("scenario: horizon must be positive");

  double static_time = sc.start_time;
  if (doc.contains("static")) {
    const auto& st = doc.at("static");
    sc.is_static = st.value("enabled", false);
    static_time = number_or(st, "time", sc.start_time, "static");
  }
  if (overrides.is_static) sc.is_static = *overrides.is_static;

  // Time series sampled on the slot grid (or held at one instant when static).
  auto sample = [&](const TimeSeries& ts, std::size_t col) {
    if (sc.is_static) return std::vector<double>(sc.horizon, ts.at(col, static_time));
    return ts.resample(col, sc.start_time, sc.dt, sc.horizon);
  };

  const double capacity = number(require(gen, "capacity", "generation"), "generation.capacity");
  if (capacity < 0.0) throw ConfigError("scenario: generation.capacity must be non-negative");
  const auto pv = load_timeseries(resolve(base_dir, require(gen, "profile", "generation"), "generation.profile"));
  std::vector<std::string> columns;
  if (gen.contains("columns")) {
    columns = gen.at("columns").get<std::vector<std::string>>();
  } else {
    columns.assign(gen_buses.size(), pv.names.front());
  }
  if (columns.size() != gen_buses.size())
    throw ConfigError("scenario: generation.columns must list one column per generation bus");
  sc.gen_true.resize(static_cast<Eigen::Index>(sc.horizon), static_cast<Eigen::Index>(gen_buses.size()));
  for (std::size_t j = 0; j < gen_buses.size(); ++j) {
    const auto series = sample(pv, pv.column_index(columns[j]));
    for (std::size_t t = 0; t < sc.horizon; ++t) {
      if (series[t] < 0.0) throw ConfigError("scenario: negative generation profile value");
      sc.gen_true(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = capacity * series[t];
    }
  }

  const auto& outdoor = require(doc, "outdoor_temperature", "document");
  const auto temp = load_timeseries(resolve(base_dir, require(outdoor, "profile", "outdoor_temperature"), "outdoor_temperature.profile"));
  const auto tcol = temp.column_index(outdoor.value("column", temp.names.front()));
  const auto c_out = sample(temp, tcol);
  const auto nc = static_cast<Eigen::Index>(load_buses.size());
  sc.c_out_true.resize(static_cast<Eigen::Index>(sc.horizon), nc);
  for (std::size_t t = 0; t < sc.horizon; ++t) sc.c_out_true.row(static_cast<Eigen::Index>(t)).setConstant(c_out[t]);

  // Prices, loads, band.
  sc.lambda_price = number(require(doc, "price", "document"), "price");
  if (!(sc.lambda_price > 0.0)) throw ConfigError("scenario: price must be positive");

  std::mt19937_64 rng(derive_seed(sc.structure_seed, 0xB1D));
  const auto& loads = require(doc, "loads", "document");
  const auto n = load_buses.size();
  const auto base = per_building(require(loads, "base", "loads"), n, "loads.base", rng, -1e300, false);
  const auto pmin = per_building(require(loads, "p_min", "loads"), n, "loads.p_min", rng, -1e300, false);
  const auto pmax = per_building(require(loads, "p_max", "loads"), n, "loads.p_max", rng, -1e300, false);
  sc.bounds.base_load = Eigen::Map<const Eigen::VectorXd>(base.data(), nc);
  sc.bounds.p_min = Eigen::Map<const Eigen::VectorXd>(pmin.data(), nc);
  sc.bounds.p_max = Eigen::Map<const Eigen::VectorXd>(pmax.data(), nc);
  if ((sc.bounds.p_min.array() < 0.0).any()) throw ConfigError("scenario: loads.p_min must be non-negative");
  if ((sc.bounds.p_min.array() > sc.bounds.p_max.array()).any()) throw ConfigError("scenario: loads.p_min exceeds p_max");

  if (doc.contains("voltage_band")) {
    const auto& band = doc.at("voltage_band");
    sc.bounds.v_min = number_or(band, "v_min", 0.0, "voltage_band");
    sc.bounds.v_max = band.contains("v_max") && !band.at("v_max").is_null()
                          ? number(band.at("v_max"), "voltage_band.v_max")
                          : std::numeric_limits<double>::infinity();
    const auto scope = band.value("scope", std::string{"all"});
    if (scope == "all") sc.bounds.scope = BandScope::AllBuses;
    else if (scope == "load") sc.bounds.scope = BandScope::LoadBuses;
    else throw ConfigError("scenario: voltage_band.scope must be 'all' or 'load'");
    if (sc.bounds.v_min > sc.bounds.v_max) throw ConfigError("scenario: v_min exceeds v_max");
  }

  // Buildings.
  const auto& bld = require(doc, "buildings", "document");
  const auto alpha1 = per_building(require(bld, "alpha1", "buildings"), n, "buildings.alpha1", rng, -1e-300, false);
  const auto alpha2 = per_building(require(bld, "alpha2", "buildings"), n, "buildings.alpha2", rng, 0.0, true);
  const auto beta = per_building(require(bld, "beta", "buildings"), n, "buildings.beta", rng, 0.0, false);
  const auto c_set = per_building(require(bld, "c_set", "buildings"), n, "buildings.c_set", rng, -1e300, false);
  const auto c_in0 = per_building(require(bld, "initial_indoor", "buildings"), n, "buildings.initial_indoor", rng, -1e300, true);
  sc.buildings.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sc.buildings[i] = BuildingParams{alpha1[i], alpha2[i], beta[i], c_set[i], sc.dt};
    sc.buildings[i].validate();
  }
  sc.c_in0 = Eigen::Map<const Eigen::VectorXd>(c_in0.data(), nc);

  if (doc.contains("noise")) {
    const auto& nz = doc.at("noise");
    sc.noise.sigma_gen = number_or(nz, "sigma_gen", sc.noise.sigma_gen, "noise");
    sc.noise.sigma_temp = number_or(nz, "sigma_temp", sc.noise.sigma_temp, "noise");
    const auto mode = nz.value("gen_mode", std::string{"relative"});
    if (mode == "relative") sc.noise.gen_mode = NoiseMode::Relative;
    else if (mode == "absolute") sc.noise.gen_mode = NoiseMode::Absolute;
    else throw ConfigError("scenario: noise.gen_mode must be 'relative' or 'absolute'");
    if (sc.noise.sigma_gen < 0.0 || sc.noise.sigma_temp < 0.0)
      throw ConfigError("scenario: noise sigmas must be non-negative");
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path, const ScenarioOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("scenario config is not valid JSON: " + std::string(e.what()));
  }
  try {
    return scenario_from_json(doc, path.parent_path(), overrides);
  } catch (const json::exception& e) {
    throw ConfigError("scenario config: " + std::string(e.what()));
  }
}

json ieee37_config(bool is_static) {
  // Cooling gain: about 1 degree F per minute at full AC power, spread
  // N(1, 0.16^2) across buildings; converted to degF / (MW s).
  const double p_max = 1.2;
  json doc = {
      {"schema_version", kScenarioSchemaVersion},
      {"kind", "scenario"},
      {"name", is_static ? "ieee37-static" : "ieee37-dynamic"},
      {"network", {{"file", "ieee37.csv"}, {"labels", "ieee37_buses.csv"}, {"pcc", 799}, {"u_nominal", 1.0}}},
      {"generation",
       {{"buses", {725, 731, 741}},
        {"capacity", 12.0},
        {"profile", "pv_profile.csv"},
        {"columns", {"site_a", "site_b", "site_c"}}}},
      {"outdoor_temperature", {{"profile", "outdoor_temp.csv"}, {"column", "value"}}},
      {"slots", {{"horizon", 900}, {"dt", 48.0}, {"start", 0.0}}},
      {"static", {{"enabled", is_static}, {"time", 3600.0}}},
      {"price", 1.0},
      {"loads", {{"base", 0.6}, {"p_min", 0.0}, {"p_max", p_max}}},
      {"voltage_band", {{"v_min", 0.95}, {"v_max", 1.05}, {"scope", "all"}}},
      {"buildings",
       {{"alpha1", 1.0 / 5400.0},
        {"alpha2", {{"mean", 1.0 / (p_max * 60.0)}, {"std", 0.16 / (p_max * 60.0)}}},
        {"beta", 2.0},
        {"c_set", 65.0},
        {"initial_indoor", {{"mean", 65.0}, {"std", 5.0}}}}},
      {"noise", {{"sigma_gen", 0.3}, {"gen_mode", "relative"}, {"sigma_temp", std::sqrt(3.0)}}},
      {"seed", kDefaultSeed},
  };
  return doc;
}

Scenario build_ieee37_scenario(const std::filesystem::path& data_dir,
                               const ScenarioOverrides& overrides) {
  for (const char* f : {"ieee37.csv", "ieee37_buses.csv", "pv_profile.csv", "outdoor_temp.csv"})
    if (!std::filesystem::exists(data_dir / f))
      throw ConfigError("missing fixture " + (data_dir / f).string());
  return scenario_from_json(ieee37_config(overrides.is_static.value_or(false)), data_dir, overrides);
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("MGSIM_DATA_DIR"); env && *env) return env;
  return MGRID_DATA_DIR;
}

}  // namespace mgrid
