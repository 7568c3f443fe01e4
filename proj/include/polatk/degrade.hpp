#pragma once

#include <cstdint>
#include <vector>

#include "polatk/image.hpp"

namespace polatk {

/// Normalized Gaussian taps for radius ceil(3 sigma); {1} when sigma == 0.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur of every plane, replicating edge pixels.
StokesImage gaussian_blur(const StokesImage& img, double sigma);

/// Gaussian blur followed by zero-mean Gaussian noise on every component.
/// Noise is counter-based on (seed, sample index) so it is independent of
/// evaluation order. Zero sigmas return the input unchanged.
StokesImage degrade(const StokesImage& img, double noise_sigma, double blur_sigma, std::uint64_t seed);

}  // namespace polatk
