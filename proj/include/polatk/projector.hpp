#pragma once

// One-chip LCD projector with its front polarizer removed. Each pixel and
// color channel emits light of constant intensity whose angle of
// polarization is set by the liquid-crystal rotation for the drive level.

#include <array>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "polatk/image.hpp"
#include "polatk/raster_io.hpp"

namespace polatk {

struct ProjectorModel {
  int width = 0;
  int height = 0;
  int channels = 3;
  /// Emitted radiance per channel; independent of the drive level.
  std::vector<double> i0_per_channel{1.0, 1.0, 1.0};
  double back_polarizer_angle = 3.0 * std::numbers::pi / 4.0;
  double max_rotation = std::numbers::pi / 2.0;
  double gamma = 2.2;
  /// Fraction of emitted light that leaves unpolarized (LC leakage).
  double depolarization = 0.0;

  static ProjectorModel uniform(Dims dims, double i0 = 1.0);
  Dims dims() const { return {width, height, channels}; }
  void validate() const;
};

/// Per-pixel, per-channel 8-bit drive levels.
struct ProjectionPattern {
  Dims dims;
  std::vector<std::uint8_t> v;

  ProjectionPattern() = default;
  explicit ProjectionPattern(Dims d, std::uint8_t fill = 0) : dims(d), v(d.pixels() * d.channels, fill) {}

  std::uint8_t& at(int c, int y, int x) { return v[(static_cast<std::size_t>(c) * dims.height + y) * dims.width + x]; }
  std::uint8_t at(int c, int y, int x) const { return v[(static_cast<std::size_t>(c) * dims.height + y) * dims.width + x]; }
  bool operator==(const ProjectionPattern&) const = default;
};

Raster8 to_raster(const ProjectionPattern& p);
ProjectionPattern pattern_from_raster(const Raster8& r);

/// LC rotation for drive level v in [0, 255]:
///   max_rotation * asin(sqrt((v/255)^gamma)) / (pi/2)
/// With the front polarizer in place this displays intensity (v/255)^gamma.
double value_to_rotation(const ProjectorModel& model, double v);

/// Emitted AoLP = back_polarizer_angle - rotation(v); monotone decreasing,
/// 3pi/4 at v = 0 and pi/4 at v = 255 with the default geometry.
double value_to_aolp(const ProjectorModel& model, double v);

/// Emitted Stokes field for a pattern: s0 = i0, (s1, s2) = i0 (1 - depol) (cos 2phi, sin 2phi).
StokesImage project_pattern(const ProjectorModel& model, const ProjectionPattern& pattern);

/// Full-field pattern with the same drive level everywhere.
ProjectionPattern constant_pattern(const ProjectorModel& model, std::uint8_t v);

enum class ChannelMode { Neutral, Red, Green, Blue, Yellow, Magenta, Cyan };

inline constexpr std::array<std::string_view, 7> kChannelModeNames{
    "neutral", "red", "green", "blue", "yellow", "magenta", "cyan"};

ChannelMode parse_channel_mode(std::string_view name);
std::string_view channel_mode_name(ChannelMode m);

/// Which RGB channels are "named" by a mode (emitted at pi/4); the rest get 3pi/4.
std::array<bool, 3> channel_mode_mask(ChannelMode m);

/// Constant white projection where each channel carries its own AoLP.
StokesImage channel_polarized_projection(const ProjectorModel& model, ChannelMode mode);

/// Drive pattern that realizes a channel mode (255 for named channels, 0 otherwise).
ProjectionPattern channel_mode_pattern(const ProjectorModel& model, ChannelMode mode);

}  // namespace polatk
