#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mgrid/grid_model.hpp"

namespace mgrid {

struct NetworkData {
  std::vector<Line> lines;
  std::size_t n_buses = 0;
};

/// Reads `from,to,r,x,b_shunt` (header required, per-unit). Bus 0 is the PCC.
/// Rejects non-finite values and negative resistance with ConfigError.
NetworkData load_network_csv(const std::filesystem::path& path);

/// Reads an `index,label` table; returns labels indexed by bus index.
std::vector<long> load_bus_labels(const std::filesystem::path& path, std::size_t n_buses);

/// Splits a CSV line on commas, trimming surrounding whitespace.
std::vector<std::string> split_csv_line(const std::string& line);

/// Strict float parse; throws ConfigError naming `what` on failure.
double parse_double(const std::string& text, const std::string& what);

}  // namespace mgrid
