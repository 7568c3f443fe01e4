#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>

#include "polatk/image.hpp"
#include "polatk/rng.hpp"

namespace polatk::test {

inline constexpr double kPi = std::numbers::pi;

/// Random physically valid Stokes image (rho <= 1).
inline StokesImage random_stokes(Dims d, std::uint64_t seed, double max_rho = 1.0) {
  Rng rng(seed);
  StokesImage s(d);
  for (int c = 0; c < d.channels; ++c) {
    for (std::size_t p = 0; p < d.pixels(); ++p) {
      const double s0 = rng.uniform(0.05, 4.0);
      const double rho = rng.uniform(0.0, max_rho);
      const double phi = rng.uniform(-kPi / 2, kPi / 2);
      s.plane(kS0, c)[p] = s0;
      s.plane(kS1, c)[p] = s0 * rho * std::cos(2 * phi);
      s.plane(kS2, c)[p] = s0 * rho * std::sin(2 * phi);
    }
  }
  return s;
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Fresh directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("polatk_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace polatk::test
