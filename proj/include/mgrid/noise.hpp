#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace mgrid {

enum class NoiseMode { Absolute, Relative };

struct NoiseConfig {
  double sigma_gen = 0.3;  // relative to the true value in Relative mode
  NoiseMode gen_mode = NoiseMode::Relative;
  double sigma_temp = 1.7320508075688772;  // variance 3
};

/// Independent observation channels; each gets its own RNG stream.
enum class Channel : std::uint64_t { Generation = 1, IndoorTemp = 2, OutdoorTemp = 3, Aux = 4 };

/// Mixes (seed, keys...) into a 64-bit stream seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// truth + N(0, sigma^2) per entry; sigma scales with |truth| in Relative
/// mode. Draws depend only on (seed, t, channel, entry index).
Eigen::VectorXd observe(const Eigen::VectorXd& truth, double sigma, NoiseMode mode,
                        std::uint64_t seed, std::uint64_t t, Channel channel);

}  // namespace mgrid
