#include "polatk/degrade.hpp"

#include <algorithm>
#include <cmath>

#include "polatk/rng.hpp"
#include "polatk/simd/kernels.hpp"

namespace polatk {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("blur sigma must be finite and nonnegative");
  if (sigma == 0.0) return {1.0};
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
  }
  for (double v : k) sum += v;
  for (double& v : k) v /= sum;
  return k;
}

StokesImage gaussian_blur(const StokesImage& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  if (k.size() == 1) return img;
  const int r = static_cast<int>(k.size() / 2);
  const auto& kern = simd::kernels();
  const int w = img.width(), h = img.height();
  StokesImage tmp(img.dims()), out(img.dims());
  std::vector<double> padded(static_cast<std::size_t>(w + 2 * r));
  for (int p = 0; p < 3; ++p) {
    for (int c = 0; c < img.channels(); ++c) {
      auto src = img.plane(p, c);
      auto mid = tmp.plane(p, c);
      auto dst = out.plane(p, c);
      for (int y = 0; y < h; ++y) {
        const double* row = src.data() + static_cast<std::size_t>(y) * w;
        for (int i = 0; i < w + 2 * r; ++i) padded[static_cast<std::size_t>(i)] = row[std::clamp(i - r, 0, w - 1)];
        double* o = mid.data() + static_cast<std::size_t>(y) * w;
        for (int t = 0; t <= 2 * r; ++t) kern.axpy(k[static_cast<std::size_t>(t)], padded.data() + t, o, static_cast<std::size_t>(w));
      }
      for (int y = 0; y < h; ++y) {
        double* o = dst.data() + static_cast<std::size_t>(y) * w;
        for (int t = 0; t <= 2 * r; ++t) {
          const int yy = std::clamp(y + t - r, 0, h - 1);
          kern.axpy(k[static_cast<std::size_t>(t)], mid.data() + static_cast<std::size_t>(yy) * w, o, static_cast<std::size_t>(w));
        }
      }
    }
  }
  return out;
}

StokesImage degrade(const StokesImage& img, double noise_sigma, double blur_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ValidationError("noise sigma must be finite and nonnegative");
  StokesImage out = gaussian_blur(img, blur_sigma);
  if (noise_sigma > 0.0) {
    auto d = out.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += noise_sigma * counter_normal(seed, 0, i);
  }
  return out;
}

}  // namespace polatk
