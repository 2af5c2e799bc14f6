#include "mgrid/network_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mgrid/errors.hpp"

namespace mgrid {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::size_t parse_index(const std::string& text, const std::string& what) {
  const double v = parse_double(text, what);
  if (v < 0 || v != std::floor(v)) throw ConfigError(what + ": expected a bus index, got '" + text + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(what + ": cannot parse '" + text + "' as a number");
  }
  if (used != text.size()) throw ConfigError(what + ": trailing characters in '" + text + "'");
  if (!std::isfinite(v)) throw ConfigError(what + ": non-finite value '" + text + "'");
  return v;
}

NetworkData load_network_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open network file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("network file is empty: " + path.string());
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected{"from", "to", "r", "x", "b_shunt"};
  if (header != expected)
    throw ConfigError("network file must start with header 'from,to,r,x,b_shunt': " + path.string());

  NetworkData net;
  std::size_t max_bus = 0;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path.filename().string() + ":" + std::to_string(row);
    if (cells.size() != 5) throw ConfigError(where + ": expected 5 columns");
    const auto from = parse_index(cells[0], where + " from");
    const auto to = parse_index(cells[1], where + " to");
    const double r = parse_double(cells[2], where + " r");
    const double x = parse_double(cells[3], where + " x");
    const double b = parse_double(cells[4], where + " b_shunt");
    if (r < 0.0) throw ConfigError(where + ": negative resistance");
    if (r == 0.0 && x == 0.0) throw ConfigError(where + ": zero impedance");
    if (from == to) throw ConfigError(where + ": line endpoints must differ");
    net.lines.push_back(Line::from_impedance(from, to, r, x, b));
    max_bus = std::max({max_bus, from, to});
  }
  if (net.lines.empty()) throw ConfigError("network file has no lines: " + path.string());
  net.n_buses = max_bus + 1;
  return net;
}

std::vector<long> load_bus_labels(const std::filesystem::path& path, std::size_t n_buses) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open bus label file " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"index", "label"})
    throw ConfigError("bus label file must start with header 'index,label': " + path.string());
  std::vector<long> labels(n_buses, -1);
  std::vector<bool> seen(n_buses, false);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) throw ConfigError("bus label file: expected 2 columns");
    const auto idx = parse_index(cells[0], "bus label index");
    if (idx >= n_buses) throw ConfigError("bus label index out of range: " + cells[0]);
    if (seen[idx]) throw ConfigError("duplicate bus label index: " + cells[0]);
    seen[idx] = true;
    labels[idx] = static_cast<long>(parse_double(cells[1], "bus label"));
  }
  for (std::size_t i = 0; i < n_buses; ++i)
    if (!seen[i]) throw ConfigError("bus label file misses index " + std::to_string(i));
  return labels;
}

}  // namespace mgrid
