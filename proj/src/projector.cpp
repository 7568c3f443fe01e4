#include "polatk/projector.hpp"

#include <cmath>

namespace polatk {

ProjectorModel ProjectorModel::uniform(Dims dims, double i0) {
  ProjectorModel m;
  m.width = dims.width;
  m.height = dims.height;
  m.channels = dims.channels;
  m.i0_per_channel.assign(static_cast<std::size_t>(dims.channels), i0);
  return m;
}

void ProjectorModel::validate() const {
  if (width <= 0 || height <= 0 || channels <= 0) throw ValidationError("projector: resolution must be positive");
  if (static_cast<int>(i0_per_channel.size()) != channels) throw ValidationError("projector: one i0 per channel");
  for (double v : i0_per_channel) {
    if (!(v >= 0.0)) throw ValidationError("projector: emitted radiance must be nonnegative");
  }
  if (!(gamma > 0.0)) throw ValidationError("projector: gamma must be positive");
  if (!(max_rotation > 0.0 && max_rotation <= std::numbers::pi / 2)) {
    throw ValidationError("projector: max_rotation must lie in (0, pi/2]");
  }
  if (!(depolarization >= 0.0 && depolarization <= 1.0)) throw ValidationError("projector: depolarization in [0, 1]");
}

Raster8 to_raster(const ProjectionPattern& p) { return Raster8{p.dims.width, p.dims.height, p.dims.channels, p.v}; }

ProjectionPattern pattern_from_raster(const Raster8& r) {
  ProjectionPattern p(Dims{r.width, r.height, r.channels});
  p.v = r.data;
  return p;
}

double value_to_rotation(const ProjectorModel& model, double v) {
  if (!(v >= 0.0 && v <= 255.0)) throw DomainError("drive level outside [0, 255]");
  const double intensity = std::pow(v / 255.0, model.gamma);
  // pi/2 - acos(x) written as asin(x).
  return model.max_rotation * std::asin(std::sqrt(intensity)) / (std::numbers::pi / 2);
}

double value_to_aolp(const ProjectorModel& model, double v) {
  return model.back_polarizer_angle - value_to_rotation(model, v);
}

namespace {

struct Emission {
  double c2;
  double s2;
};

// Lookup of (cos 2phi, sin 2phi) for every drive level.
std::array<Emission, 256> emission_table(const ProjectorModel& model) {
  std::array<Emission, 256> t{};
  for (int v = 0; v < 256; ++v) {
    const double phi = value_to_aolp(model, v);
    t[v] = {std::cos(2.0 * phi), std::sin(2.0 * phi)};
  }
  return t;
}

}  // namespace

StokesImage project_pattern(const ProjectorModel& model, const ProjectionPattern& pattern) {
  model.validate();
  if (!(pattern.dims == model.dims())) throw StructuralError("project_pattern: pattern does not match projector");
  const auto table = emission_table(model);
  StokesImage out(model.dims());
  const std::size_t n = out.dims().pixels();
  const double pol = 1.0 - model.depolarization;
  for (int c = 0; c < model.channels; ++c) {
    const double i0 = model.i0_per_channel[static_cast<std::size_t>(c)];
    auto s0 = out.plane(kS0, c);
    auto s1 = out.plane(kS1, c);
    auto s2 = out.plane(kS2, c);
    const std::uint8_t* v = pattern.v.data() + static_cast<std::size_t>(c) * n;
    for (std::size_t i = 0; i < n; ++i) {
      const Emission e = table[v[i]];
      s0[i] = i0;
      s1[i] = i0 * pol * e.c2;
      s2[i] = i0 * pol * e.s2;
    }
  }
  return out;
}

ProjectionPattern constant_pattern(const ProjectorModel& model, std::uint8_t v) {
  return ProjectionPattern(model.dims(), v);
}

ChannelMode parse_channel_mode(std::string_view name) {
  for (std::size_t i = 0; i < kChannelModeNames.size(); ++i) {
    if (kChannelModeNames[i] == name) return static_cast<ChannelMode>(i);
  }
  throw ValidationError("unknown channel mode: " + std::string(name));
}

std::string_view channel_mode_name(ChannelMode m) { return kChannelModeNames[static_cast<std::size_t>(m)]; }

std::array<bool, 3> channel_mode_mask(ChannelMode m) {
  switch (m) {
    case ChannelMode::Neutral: return {true, true, true};
    case ChannelMode::Red: return {true, false, false};
    case ChannelMode::Green: return {false, true, false};
    case ChannelMode::Blue: return {false, false, true};
    case ChannelMode::Yellow: return {true, true, false};
    case ChannelMode::Magenta: return {true, false, true};
    case ChannelMode::Cyan: return {false, true, true};
  }
  return {true, true, true};
}

ProjectionPattern channel_mode_pattern(const ProjectorModel& model, ChannelMode mode) {
  if (model.channels != 3) throw StructuralError("channel-wise projection needs a 3-channel projector");
  const auto named = channel_mode_mask(mode);
  ProjectionPattern p(model.dims());
  const std::size_t n = model.dims().pixels();
  for (int c = 0; c < 3; ++c) {
    const std::uint8_t v = named[static_cast<std::size_t>(c)] ? 255 : 0;
    std::fill_n(p.v.begin() + static_cast<std::ptrdiff_t>(c * n), n, v);
  }
  return p;
}

StokesImage channel_polarized_projection(const ProjectorModel& model, ChannelMode mode) {
  return project_pattern(model, channel_mode_pattern(model, mode));
}

}  // namespace polatk
