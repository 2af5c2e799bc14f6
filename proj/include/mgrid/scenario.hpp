#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mgrid/feasible_set.hpp"
#include "mgrid/grid_model.hpp"
#include "mgrid/noise.hpp"
#include "mgrid/thermal.hpp"

namespace mgrid {

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr std::uint64_t kDefaultSeed = 20110812;

/// Fully materialized scenario: network, per-slot true data, buildings.
struct Scenario {
  std::string name;
  std::shared_ptr<const GridModel> grid;
  std::vector<long> bus_labels;          // label per network index (index if none)
  std::size_t horizon = 0;
  double dt = 48.0;
  double start_time = 0.0;
  bool is_static = false;
  double lambda_price = 1.0;
  std::vector<BuildingParams> buildings;  // per load bus, block order
  Eigen::VectorXd c_in0;                  // initial (static: frozen) indoor temperature
  Eigen::MatrixXd gen_true;               // horizon x n_gen
  Eigen::MatrixXd c_out_true;             // horizon x n_load
  FeasibleBounds bounds;
  NoiseConfig noise;
  std::uint64_t structure_seed = kDefaultSeed;
  std::uint64_t run_seed = kDefaultSeed;

  std::size_t n_load() const { return buildings.size(); }
  std::size_t n_gen() const { return static_cast<std::size_t>(gen_true.cols()); }
  Eigen::VectorXd gen_at(std::size_t slot) const { return gen_true.row(slot).transpose(); }
  Eigen::VectorXd c_out_at(std::size_t slot) const { return c_out_true.row(slot).transpose(); }
  std::shared_ptr<const SensitivityBlocks> blocks() const;
};

struct ScenarioOverrides {
  std::optional<std::size_t> horizon;
  std::optional<std::uint64_t> run_seed;
  std::optional<bool> is_static;
};

/// Parses a scenario JSON document; relative file paths resolve against
/// `base_dir`. Throws ConfigError on schema problems and ModelError when
/// the network is invalid.
Scenario scenario_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                            const ScenarioOverrides& overrides = {});

Scenario load_scenario(const std::filesystem::path& path, const ScenarioOverrides& overrides = {});

/// Default IEEE 37-bus configuration document (PCC 799, PV at 725/731/741,
/// 0.6 inflexible + [0, 1.2] AC load elsewhere, 48 s slots).
nlohmann::json ieee37_config(bool is_static);

/// Builds the default IEEE 37-bus scenario from the fixtures in `data_dir`.
Scenario build_ieee37_scenario(const std::filesystem::path& data_dir,
                               const ScenarioOverrides& overrides = {});

/// Directory holding the bundled fixtures (compile-time default, overridable
/// with the MGSIM_DATA_DIR environment variable).
std::filesystem::path default_data_dir();

}  // namespace mgrid
