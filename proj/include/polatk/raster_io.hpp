#pragma once

// ".sraw": ASCII header "SRAW <width> <height> <channels> <planes>\n" followed by
// planar, row-major, little-endian float32 samples ordered plane-major then
// channel-major. Plane order per type:
//   StokesImage    s0, s1, s2
//   RawPolarImage  i0, i45, i90, i135
//   PolarCuesImage rho, phi
//   Field / Mask   single plane
//
// ".ppat": ASCII header "PPAT <width> <height> <channels>\n" followed by planar
// uint8 drive levels, channel-major, row-major.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "polatk/image.hpp"

namespace polatk {

struct RasterF32 {
  int width = 0;
  int height = 0;
  int channels = 0;
  int planes = 0;
  std::vector<float> data;

  bool operator==(const RasterF32&) const = default;
};

void write_sraw(const std::filesystem::path& path, const RasterF32& raster);
RasterF32 read_sraw(const std::filesystem::path& path);

template <int N, class Tag>
RasterF32 to_raster(const PlanarImage<N, Tag>& img) {
  RasterF32 r{img.width(), img.height(), img.channels(), N, {}};
  r.data.reserve(img.data().size());
  for (double v : img.data()) r.data.push_back(static_cast<float>(v));
  return r;
}

template <class Img>
Img from_raster(const RasterF32& r) {
  if (r.planes != Img::kPlanes) throw IoError("sraw: unexpected plane count");
  Img img(Dims{r.width, r.height, r.channels});
  auto d = img.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(r.data[i]);
  return img;
}

template <class Img>
void save_image(const std::filesystem::path& path, const Img& img) {
  write_sraw(path, to_raster(img));
}

template <class Img>
Img load_image(const std::filesystem::path& path) {
  return from_raster<Img>(read_sraw(path));
}

void save_mask(const std::filesystem::path& path, const Mask& m);
Mask load_mask(const std::filesystem::path& path);

/// Flat float32 vector stored as a 1-row, 1-channel, 1-plane raster.
void save_vector(const std::filesystem::path& path, const std::vector<float>& v);
std::vector<float> load_vector(const std::filesystem::path& path);

struct Raster8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  bool operator==(const Raster8&) const = default;
};

void write_ppat(const std::filesystem::path& path, const Raster8& raster);
Raster8 read_ppat(const std::filesystem::path& path);

}  // namespace polatk
