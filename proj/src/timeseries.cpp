#include "mgrid/timeseries.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mgrid/errors.hpp"
#include "mgrid/network_io.hpp"

namespace mgrid {

std::size_t TimeSeries::column_index(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError("time series has no column '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

double TimeSeries::at(std::size_t column, double time) const {
  if (column >= columns.size()) throw ConfigError("time series column out of range");
  const auto& v = columns[column];
  const double eps = 1e-9 * std::max(1.0, std::abs(times.back()));
  if (time < times.front() - eps || time > times.back() + eps) {
    std::ostringstream msg;
    msg << "time " << time << " is outside the series range [" << times.front() << ", "
        << times.back() << "]";
    throw ConfigError(msg.str());
  }
  if (times.size() == 1) return v.front();
  auto hi = std::upper_bound(times.begin(), times.end(), time);
  if (hi == times.begin()) return v.front();
  if (hi == times.end()) return v.back();
  const auto k = static_cast<std::size_t>(hi - times.begin());
  const double w = (time - times[k - 1]) / (times[k] - times[k - 1]);
  return v[k - 1] + w * (v[k] - v[k - 1]);
}

std::vector<double> TimeSeries::resample(std::size_t column, double start, double step,
                                         std::size_t count) const {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = at(column, start + step * static_cast<double>(k));
  return out;
}

TimeSeries load_timeseries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open time series " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("time series is empty: " + path.string());
  auto header = split_csv_line(line);
  if (header.size() < 2 || header.front() != "t")
    throw ConfigError("time series header must be 't,<value>...': " + path.string());

  TimeSeries ts;
  ts.names.assign(header.begin() + 1, header.end());
  ts.columns.resize(ts.names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path.filename().string() + ":" + std::to_string(row);
    if (cells.size() != header.size()) throw ConfigError(where + ": column count mismatch");
    const double t = parse_double(cells[0], where + " t");
    if (!ts.times.empty() && !(t > ts.times.back()))
      throw ConfigError(where + ": timestamps must be strictly increasing");
    ts.times.push_back(t);
    for (std::size_t c = 1; c < cells.size(); ++c)
      ts.columns[c - 1].push_back(parse_double(cells[c], where + " " + header[c]));
  }
  if (ts.times.empty()) throw ConfigError("time series has no rows: " + path.string());
  return ts;
}

}  // namespace mgrid
