#pragma once

// Linear polarization algebra: Malus's law, Stokes <-> four-angle sensor
// planes, Stokes <-> (DoLP, AoLP) cues, superposition, and the
// division-of-focal-plane mosaic.

#include <cstddef>

#include "polatk/image.hpp"

namespace polatk {

/// Relative slack allowed on sqrt(s1^2 + s2^2) <= s0 before a triplet is rejected.
inline constexpr double kStokesValidityTol = 1e-9;
/// s0 at or below this is treated as dark; cues are reported as (0, 0).
inline constexpr double kDarkS0 = 1e-12;
/// DoLP below this is unpolarized; AoLP is reported as 0.
inline constexpr double kUnpolarizedRho = 1e-9;

/// i0 * cos^2(theta). Throws DomainError for negative i0.
double malus_intensity(double i0, double theta);

StokesImage stokes_from_raw(const RawPolarImage& raw);

/// Ideal polarizer responses I_theta = (s0 + s1 cos 2theta + s2 sin 2theta) / 2.
/// Throws DomainError if any pixel has DoLP > 1 (beyond kStokesValidityTol) or s0 < 0.
RawPolarImage sense(const StokesImage& stokes);

struct CuesResult {
  PolarCuesImage cues;
  std::size_t degenerate_pixels = 0;
};

/// rho = |(s1, s2)| / s0, phi = atan2(s2, s1) / 2 wrapped to [-pi/2, pi/2).
/// Dark pixels report (0, 0) and are counted, never thrown.
CuesResult cues_from_stokes(const StokesImage& stokes);

/// Wrap an angle to [-pi/2, pi/2).
double wrap_aolp(double phi);

/// s1 = s0 rho cos 2phi, s2 = s0 rho sin 2phi. `s0` carries one plane per channel.
StokesImage stokes_from_cues(const Field& s0, const PolarCuesImage& cues);

StokesImage add_stokes(const StokesImage& a, const StokesImage& b);
StokesImage scale_stokes(const StokesImage& a, double k);
/// a - b
StokesImage subtract_stokes(const StokesImage& a, const StokesImage& b);

/// True when every pixel satisfies s0 >= 0 and |(s1,s2)| <= s0 (1 + kStokesValidityTol).
bool is_physically_valid(const StokesImage& stokes);

/// One DoFP frame: channels stay separate, each 2x2 super-pixel holds
///   (y even, x even) i90   (y even, x odd) i45
///   (y odd,  x even) i135  (y odd,  x odd) i0
struct Mosaic {
  Dims dims;  // full-resolution size; one plane per channel
  Field samples;
};

Mosaic mosaic(const RawPolarImage& raw);
/// Bilinear reconstruction of the four angle planes.
RawPolarImage demosaic(const Mosaic& m);

/// Returns which angle plane sits at (y, x) in the mosaic layout.
RawPlane mosaic_plane_at(int y, int x);

}  // namespace polatk
