#include "polatk/color_constancy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "polatk/polar.hpp"

namespace polatk {

IlluminantEstimate cc_estimate(const StokesImage& stokes, double top_q) {
  if (stokes.channels() != 3) throw StructuralError("cc_estimate: needs a 3-channel image");
  if (!(top_q > 0.0 && top_q <= 1.0)) throw ValidationError("cc_estimate: top_q must lie in (0, 1]");
  const std::size_t n = stokes.dims().pixels();
  const auto cues = cues_from_stokes(stokes).cues;

  // Only lit pixels take part; dark ones have no defined DoLP.
  std::vector<std::size_t> lit;
  std::vector<double> mean_rho(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    bool dark = false;
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
      dark = dark || !(stokes.plane(kS0, c)[p] > kDarkS0);
      sum += cues.plane(kRho, c)[p];
    }
    mean_rho[p] = sum / 3.0;
    if (!dark) lit.push_back(p);
  }

  IlluminantEstimate est;
  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  est.rgb = {inv_sqrt3, inv_sqrt3, inv_sqrt3};
  est.fallback = true;
  if (lit.empty()) return est;

  const std::size_t keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(top_q * static_cast<double>(lit.size()))));
  // Stable order so ties resolve identically for any permutation of equal pixels.
  std::ranges::stable_sort(lit, [&](std::size_t a, std::size_t b) { return mean_rho[a] > mean_rho[b]; });
  std::array<double, 3> l{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < keep; ++k) {
    const std::size_t p = lit[k];
    for (int c = 0; c < 3; ++c) l[static_cast<std::size_t>(c)] += cues.plane(kRho, c)[p] * stokes.plane(kS0, c)[p];
  }
  for (double& v : l) v /= static_cast<double>(keep);
  const double norm = std::sqrt(l[0] * l[0] + l[1] * l[1] + l[2] * l[2]);
  est.selected_pixels = keep;
  if (!(norm > 0.0) || !std::isfinite(norm)) return est;
  for (int c = 0; c < 3; ++c) est.rgb[static_cast<std::size_t>(c)] = l[static_cast<std::size_t>(c)] / norm;
  est.fallback = false;
  return est;
}

std::array<double, 3> white_balance_gains(const IlluminantEstimate& illum) {
  for (double v : illum.rgb) {
    if (!(v > 0.0)) throw DomainError("white_balance: illuminant component must be positive");
  }
  return {illum.rgb[1] / illum.rgb[0], 1.0, illum.rgb[1] / illum.rgb[2]};
}

StokesImage white_balance(const StokesImage& stokes, const IlluminantEstimate& illum) {
  if (stokes.channels() != 3) throw StructuralError("white_balance: needs a 3-channel image");
  const auto g = white_balance_gains(illum);
  StokesImage out = stokes;
  for (int p = 0; p < 3; ++p) {
    for (int c = 0; c < 3; ++c) {
      for (double& v : out.plane(p, c)) v *= g[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

}  // namespace polatk
