#include "mgrid/noise.hpp"

#include <cmath>
#include <random>

namespace mgrid {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

Eigen::VectorXd observe(const Eigen::VectorXd& truth, double sigma, NoiseMode mode,
                        std::uint64_t seed, std::uint64_t t, Channel channel) {
  if (sigma == 0.0) return truth;
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(channel), t));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd out(truth.size());
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const double scale = mode == NoiseMode::Relative ? sigma * std::abs(truth(i)) : sigma;
    out(i) = truth(i) + scale * normal(rng);
  }
  return out;
}

}  // namespace mgrid
