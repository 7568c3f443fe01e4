#include "polatk/preview.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "polatk/polar.hpp"

namespace polatk {
namespace {

void write_pnm(const std::filesystem::path& path, const char* magic, int w, int h, const std::vector<std::uint8_t>& px,
               std::size_t per_pixel) {
  if (px.size() != static_cast<std::size_t>(w) * h * per_pixel) throw StructuralError("preview: buffer size");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << magic << '\n' << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

void write_pgm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& gray) {
  write_pnm(path, "P5", width, height, gray, 1);
}

void write_ppm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& rgb) {
  write_pnm(path, "P6", width, height, rgb, 3);
}

void preview_s0(const std::filesystem::path& path, const StokesImage& s, double white) {
  const std::size_t n = s.dims().pixels();
  if (!(white > 0.0)) {
    for (int c = 0; c < s.channels(); ++c) {
      for (double v : s.plane(kS0, c)) white = std::max(white, v);
    }
  }
  const double scale = white > 0.0 ? 1.0 / white : 0.0;
  if (s.channels() == 3) {
    std::vector<std::uint8_t> rgb(n * 3);
    for (std::size_t p = 0; p < n; ++p) {
      for (int c = 0; c < 3; ++c) rgb[p * 3 + static_cast<std::size_t>(c)] = to_byte(s.plane(kS0, c)[p] * scale);
    }
    write_ppm(path, s.width(), s.height(), rgb);
    return;
  }
  std::vector<std::uint8_t> g(n);
  for (std::size_t p = 0; p < n; ++p) g[p] = to_byte(s.plane(kS0, 0)[p] * scale);
  write_pgm(path, s.width(), s.height(), g);
}

void preview_dolp(const std::filesystem::path& path, const StokesImage& s, double gain) {
  const auto cues = cues_from_stokes(s).cues;
  const std::size_t n = s.dims().pixels();
  std::vector<std::uint8_t> g(n);
  for (std::size_t p = 0; p < n; ++p) {
    double m = 0.0;
    for (int c = 0; c < s.channels(); ++c) m += cues.plane(kRho, c)[p];
    g[p] = to_byte(gain * m / s.channels());
  }
  write_pgm(path, s.width(), s.height(), g);
}

void preview_aolp(const std::filesystem::path& path, const StokesImage& s) {
  const std::size_t n = s.dims().pixels();
  std::vector<std::uint8_t> rgb(n * 3);
  for (std::size_t p = 0; p < n; ++p) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (int c = 0; c < s.channels(); ++c) {
      s0 += s.plane(kS0, c)[p];
      s1 += s.plane(kS1, c)[p];
      s2 += s.plane(kS2, c)[p];
    }
    const double sat = s0 > kDarkS0 ? std::clamp(std::hypot(s1, s2) / s0, 0.0, 1.0) : 0.0;
    // Hue from 2*phi in [0, 2pi), HSV with value 1.
    double hue = std::atan2(s2, s1);
    if (hue < 0) hue += 2 * std::numbers::pi;
    const double h6 = hue / (2 * std::numbers::pi) * 6.0;
    const int sector = static_cast<int>(h6) % 6;
    const double f = h6 - std::floor(h6);
    const double v = 1.0, lo = v * (1 - sat), fall = v * (1 - sat * f), rise = v * (1 - sat * (1 - f));
    double r = v, g = rise, b = lo;
    switch (sector) {
      case 0: r = v; g = rise; b = lo; break;
      case 1: r = fall; g = v; b = lo; break;
      case 2: r = lo; g = v; b = rise; break;
      case 3: r = lo; g = fall; b = v; break;
      case 4: r = rise; g = lo; b = v; break;
      default: r = v; g = lo; b = fall; break;
    }
    rgb[p * 3 + 0] = to_byte(r);
    rgb[p * 3 + 1] = to_byte(g);
    rgb[p * 3 + 2] = to_byte(b);
  }
  write_ppm(path, s.width(), s.height(), rgb);
}

void preview_mask(const std::filesystem::path& path, const Mask& m) {
  std::vector<std::uint8_t> g(m.v.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = m.v[i] ? 255 : 0;
  write_pgm(path, m.width, m.height, g);
}

void preview_pattern(const std::filesystem::path& path, const ProjectionPattern& p) {
  std::vector<std::uint8_t> g(p.v.begin(), p.v.begin() + static_cast<std::ptrdiff_t>(p.dims.pixels()));
  write_pgm(path, p.dims.width, p.dims.height, g);
}

}  // namespace polatk
