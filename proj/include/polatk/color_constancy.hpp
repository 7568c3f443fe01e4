#pragma once

// DoLP-guided illuminant estimation. Strongly polarized pixels are taken to
// be specular, and specular reflection carries the light-source color, so
// their polarized radiance rho_c * s0_c per channel estimates the illuminant.

#include <array>

#include "polatk/image.hpp"

namespace polatk {

struct IlluminantEstimate {
  std::array<double, 3> rgb{};  // nonnegative, unit L2 norm
  /// True when no usable pixel was found and the achromatic fallback was returned.
  bool fallback = false;
  std::size_t selected_pixels = 0;
};

/// Selects pixels whose channel-mean DoLP is in the top `top_q` fraction and
/// averages rho_c * s0_c over them. Requires a 3-channel image and top_q in (0, 1].
IlluminantEstimate cc_estimate(const StokesImage& stokes, double top_q = 0.1);

/// g_c = l_G / l_c
std::array<double, 3> white_balance_gains(const IlluminantEstimate& illum);

/// Multiplies every Stokes component of channel c by g_c.
StokesImage white_balance(const StokesImage& stokes, const IlluminantEstimate& illum);

}  // namespace polatk
