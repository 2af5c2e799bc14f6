#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mgrid {

/// Multi-column series sampled at strictly increasing times.
struct TimeSeries {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t column_index(const std::string& name) const;

  /// Linear interpolation; throws ConfigError outside [front, back].
  double at(std::size_t column, double time) const;

  /// Samples `count` points at start + k * step.
  std::vector<double> resample(std::size_t column, double start, double step,
                               std::size_t count) const;
};

/// Reads a CSV with header `t,<name>...`. Times must be strictly increasing
/// and every value finite.
TimeSeries load_timeseries(const std::filesystem::path& path);

}  // namespace mgrid
