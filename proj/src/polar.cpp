#include "polatk/polar.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "polatk/simd/kernels.hpp"

namespace polatk {

double malus_intensity(double i0, double theta) {
  if (!(i0 >= 0.0)) throw DomainError("malus_intensity: negative radiance");
  const double c = std::cos(theta);
  return i0 * (c * c);
}

StokesImage stokes_from_raw(const RawPolarImage& raw) {
  StokesImage out(raw.dims());
  const auto& k = simd::kernels();
  const std::size_t n = raw.dims().pixels();
  for (int c = 0; c < raw.channels(); ++c) {
    k.stokes_from_raw(raw.plane(kI0, c).data(), raw.plane(kI45, c).data(), raw.plane(kI90, c).data(),
                      raw.plane(kI135, c).data(), out.plane(kS0, c).data(), out.plane(kS1, c).data(),
                      out.plane(kS2, c).data(), n);
  }
  return out;
}

bool is_physically_valid(const StokesImage& stokes) {
  const std::size_t n = stokes.dims().pixels();
  for (int c = 0; c < stokes.channels(); ++c) {
    auto s0 = stokes.plane(kS0, c);
    auto s1 = stokes.plane(kS1, c);
    auto s2 = stokes.plane(kS2, c);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(s0[i] >= 0.0)) return false;
      if (std::hypot(s1[i], s2[i]) > s0[i] * (1.0 + kStokesValidityTol)) return false;
    }
  }
  return true;
}

RawPolarImage sense(const StokesImage& stokes) {
  if (!is_physically_valid(stokes)) throw DomainError("sense: Stokes triplet with DoLP > 1 or negative s0");
  RawPolarImage out(stokes.dims());
  const auto& k = simd::kernels();
  const std::size_t n = stokes.dims().pixels();
  for (int c = 0; c < stokes.channels(); ++c) {
    k.sense(stokes.plane(kS0, c).data(), stokes.plane(kS1, c).data(), stokes.plane(kS2, c).data(),
            out.plane(kI0, c).data(), out.plane(kI45, c).data(), out.plane(kI90, c).data(),
            out.plane(kI135, c).data(), n);
  }
  // Rounding can leave -1e-17 behind a crossed polarizer.
  for (double& v : out.data()) {
    if (v < 0.0) v = 0.0;
  }
  return out;
}

double wrap_aolp(double phi) {
  constexpr double pi = std::numbers::pi;
  double w = std::fmod(phi + pi / 2, pi);
  if (w < 0) w += pi;
  w -= pi / 2;
  if (w >= pi / 2) w -= pi;
  return w;
}

CuesResult cues_from_stokes(const StokesImage& stokes) {
  CuesResult r{PolarCuesImage(stokes.dims()), 0};
  const std::size_t n = stokes.dims().pixels();
  for (int c = 0; c < stokes.channels(); ++c) {
    auto s0 = stokes.plane(kS0, c);
    auto s1 = stokes.plane(kS1, c);
    auto s2 = stokes.plane(kS2, c);
    auto rho = r.cues.plane(kRho, c);
    auto phi = r.cues.plane(kPhi, c);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(s0[i] > kDarkS0)) {
        rho[i] = 0.0;
        phi[i] = 0.0;
        ++r.degenerate_pixels;
        continue;
      }
      rho[i] = std::hypot(s1[i], s2[i]) / s0[i];
      phi[i] = rho[i] < kUnpolarizedRho ? 0.0 : wrap_aolp(0.5 * std::atan2(s2[i], s1[i]));
    }
  }
  return r;
}

StokesImage stokes_from_cues(const Field& s0, const PolarCuesImage& cues) {
  if (!(s0.dims() == cues.dims())) throw StructuralError("stokes_from_cues: dimension mismatch");
  StokesImage out(cues.dims());
  const std::size_t n = cues.dims().pixels();
  for (int c = 0; c < cues.channels(); ++c) {
    auto in0 = s0.plane(0, c);
    auto rho = cues.plane(kRho, c);
    auto phi = cues.plane(kPhi, c);
    auto o0 = out.plane(kS0, c);
    auto o1 = out.plane(kS1, c);
    auto o2 = out.plane(kS2, c);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(in0[i] >= 0.0)) throw DomainError("stokes_from_cues: negative s0");
      if (!(rho[i] >= 0.0 && rho[i] <= 1.0)) throw DomainError("stokes_from_cues: DoLP outside [0, 1]");
      const double m = in0[i] * rho[i];
      o0[i] = in0[i];
      o1[i] = m * std::cos(2.0 * phi[i]);
      o2[i] = m * std::sin(2.0 * phi[i]);
    }
  }
  return out;
}

StokesImage add_stokes(const StokesImage& a, const StokesImage& b) {
  require_same_dims(a, b, "add_stokes");
  StokesImage out = a;
  simd::kernels().axpy(1.0, b.data().data(), out.data().data(), out.data().size());
  return out;
}

StokesImage subtract_stokes(const StokesImage& a, const StokesImage& b) {
  require_same_dims(a, b, "subtract_stokes");
  StokesImage out = a;
  simd::kernels().axpy(-1.0, b.data().data(), out.data().data(), out.data().size());
  return out;
}

StokesImage scale_stokes(const StokesImage& a, double k) {
  StokesImage out(a.dims());
  simd::kernels().scale(k, a.data().data(), out.data().data(), out.data().size());
  return out;
}

RawPlane mosaic_plane_at(int y, int x) {
  const bool odd_y = (y & 1) != 0;
  const bool odd_x = (x & 1) != 0;
  if (!odd_y) return odd_x ? kI45 : kI90;
  return odd_x ? kI0 : kI135;
}

Mosaic mosaic(const RawPolarImage& raw) {
  const Dims d = raw.dims();
  if (d.width % 2 != 0 || d.height % 2 != 0) throw StructuralError("mosaic: width and height must be even");
  Mosaic m{d, Field(d)};
  for (int c = 0; c < d.channels; ++c) {
    for (int y = 0; y < d.height; ++y) {
      for (int x = 0; x < d.width; ++x) {
        m.samples.at(0, c, y, x) = raw.at(mosaic_plane_at(y, x), c, y, x);
      }
    }
  }
  return m;
}

namespace {

// Parity (py, px) of the mosaic sites carrying a given angle plane.
void plane_parity(RawPlane p, int& py, int& px) {
  switch (p) {
    case kI90: py = 0; px = 0; break;
    case kI45: py = 0; px = 1; break;
    case kI135: py = 1; px = 0; break;
    case kI0: py = 1; px = 1; break;
  }
}

}  // namespace

RawPolarImage demosaic(const Mosaic& m) {
  const Dims d = m.dims;
  if (d.width % 2 != 0 || d.height % 2 != 0) throw StructuralError("demosaic: width and height must be even");
  if (!(m.samples.dims() == d)) throw StructuralError("demosaic: sample plane does not match dims");
  RawPolarImage out(d);
  for (int p = 0; p < 4; ++p) {
    int py = 0, px = 0;
    plane_parity(static_cast<RawPlane>(p), py, px);
    for (int c = 0; c < d.channels; ++c) {
      for (int y = 0; y < d.height; ++y) {
        const bool row_hit = (y & 1) == py;
        for (int x = 0; x < d.width; ++x) {
          const bool col_hit = (x & 1) == px;
          double v[4];
          int count = 0;
          auto take = [&](int yy, int xx) {
            if (yy < 0 || yy >= d.height || xx < 0 || xx >= d.width) return;
            v[count++] = m.samples.at(0, c, yy, xx);
          };
          if (row_hit && col_hit) {
            take(y, x);
          } else if (row_hit) {
            take(y, x - 1);
            take(y, x + 1);
          } else if (col_hit) {
            take(y - 1, x);
            take(y + 1, x);
          } else {
            take(y - 1, x - 1);
            take(y - 1, x + 1);
            take(y + 1, x - 1);
            take(y + 1, x + 1);
          }
          // Pairwise sums keep a constant field exact.
          double sum = v[0];
          if (count == 2) sum = v[0] + v[1];
          if (count == 4) sum = (v[0] + v[1]) + (v[2] + v[3]);
          out.at(p, c, y, x) = sum / count;
        }
      }
    }
  }
  return out;
}

}  // namespace polatk
