#pragma once

// 8-bit previews (binary PGM/PPM) of Stokes images for visual inspection.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "polatk/image.hpp"
#include "polatk/projector.hpp"

namespace polatk {

void write_pgm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& gray);
void write_ppm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& rgb);

/// Intensity s0 scaled so `white` maps to 255 (the image max when white <= 0).
void preview_s0(const std::filesystem::path& path, const StokesImage& s, double white = 0.0);
/// Channel-mean DoLP, scaled by `gain` and clipped.
void preview_dolp(const std::filesystem::path& path, const StokesImage& s, double gain = 1.0);
/// AoLP of the channel-summed Stokes vector as hue, DoLP as saturation.
void preview_aolp(const std::filesystem::path& path, const StokesImage& s);
void preview_mask(const std::filesystem::path& path, const Mask& m);
/// First channel of a drive pattern.
void preview_pattern(const std::filesystem::path& path, const ProjectionPattern& p);

}  // namespace polatk
