#pragma once

// Planar image containers shared by every pipeline stage.
//
// Storage is planar: for each plane, for each color channel, a row-major
// height x width block of doubles. All values are linear radiometric units.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polatk/errors.hpp"

namespace polatk {

struct Dims {
  int width = 0;
  int height = 0;
  int channels = 1;

  std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  bool operator==(const Dims&) const = default;
};

template <int NPlanes, class Tag>
class PlanarImage {
 public:
  static constexpr int kPlanes = NPlanes;

  PlanarImage() = default;
  explicit PlanarImage(Dims dims) : dims_(dims) {
    if (dims.width <= 0 || dims.height <= 0 || dims.channels <= 0) {
      throw StructuralError("image dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(NPlanes) * dims.channels * dims.pixels(), 0.0);
  }

  const Dims& dims() const { return dims_; }
  int width() const { return dims_.width; }
  int height() const { return dims_.height; }
  int channels() const { return dims_.channels; }
  bool empty() const { return data_.empty(); }

  std::span<double> plane(int p, int c) {
    return {data_.data() + offset(p, c), dims_.pixels()};
  }
  std::span<const double> plane(int p, int c) const {
    return {data_.data() + offset(p, c), dims_.pixels()};
  }

  double& at(int p, int c, int y, int x) { return data_[offset(p, c) + index(y, x)]; }
  double at(int p, int c, int y, int x) const { return data_[offset(p, c) + index(y, x)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const PlanarImage&) const = default;

 private:
  std::size_t offset(int p, int c) const {
    return (static_cast<std::size_t>(p) * dims_.channels + static_cast<std::size_t>(c)) * dims_.pixels();
  }
  std::size_t index(int y, int x) const {
    return static_cast<std::size_t>(y) * dims_.width + static_cast<std::size_t>(x);
  }

  Dims dims_{};
  std::vector<double> data_;
};

struct StokesTag {};
struct RawTag {};
struct CuesTag {};
struct FieldTag {};

/// Linear Stokes triplet (s0, s1, s2) per pixel and channel. S3 is not modeled.
using StokesImage = PlanarImage<3, StokesTag>;
/// Intensities behind polarizers at 0, pi/4, pi/2 and 3pi/4.
using RawPolarImage = PlanarImage<4, RawTag>;
/// Degree (rho) and angle (phi) of linear polarization.
using PolarCuesImage = PlanarImage<2, CuesTag>;
/// One scalar plane per channel (material maps, probabilities, masks).
using Field = PlanarImage<1, FieldTag>;

enum StokesPlane : int { kS0 = 0, kS1 = 1, kS2 = 2 };
enum RawPlane : int { kI0 = 0, kI45 = 1, kI90 = 2, kI135 = 3 };
enum CuesPlane : int { kRho = 0, kPhi = 1 };

/// Binary per-pixel label (1 = glass).
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> v;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), v(static_cast<std::size_t>(w) * h, 0) {}
  std::size_t size() const { return v.size(); }
  bool operator==(const Mask&) const = default;
};

template <class Img>
void require_same_dims(const Img& a, const Img& b, const char* what) {
  if (!(a.dims() == b.dims())) throw StructuralError(std::string(what) + ": dimension mismatch");
}

}  // namespace polatk
