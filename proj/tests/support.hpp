#pragma once

#include <Eigen/Dense>
#include <complex>
#include <filesystem>
#include <optional>
#include <random>

#include "mgrid/scenario.hpp"

namespace testsupport {

inline std::filesystem::path data_dir() { return MGRID_TEST_DATA_DIR; }

inline mgrid::Scenario ieee37(bool is_static, std::optional<std::size_t> horizon = std::nullopt) {
  mgrid::ScenarioOverrides ov;
  ov.is_static = is_static;
  ov.horizon = horizon;
  return mgrid::build_ieee37_scenario(data_dir(), ov);
}

inline Eigen::VectorXd uniform(std::mt19937_64& rng, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd x(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) x(i) = std::uniform_real_distribution<double>(lo(i), hi(i))(rng);
  return x;
}

// Exact AC power flow on a two-bus line: slack bus 0 at voltage u0, bus 1
// injecting complex power s (negative real part = consumption). Fixed-point
// iteration on u1 = u0 + z * conj(s / u1). Returns the line loss |i|^2 r.
inline double two_bus_ac_loss(double r, double x, std::complex<double> s, double u0 = 1.0) {
  const std::complex<double> z(r, x);
  std::complex<double> u1(u0, 0.0);
  for (int k = 0; k < 200; ++k) u1 = u0 + z * std::conj(s / u1);
  const std::complex<double> i = std::conj(s / u1);
  return std::norm(i) * r;
}

}  // namespace testsupport
