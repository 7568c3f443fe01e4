#include "polatk/raster_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace polatk {
namespace {

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::string read_header_line(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '\n') return line;
    line.push_back(ch);
    if (line.size() > 256) break;
  }
  throw IoError("malformed raster header in " + path.string());
}

std::size_t checked_count(long long a, long long b, long long c, long long d, const std::filesystem::path& path) {
  if (a <= 0 || b <= 0 || c <= 0 || d <= 0 || a > (1 << 20) || b > (1 << 20) || c > 64 || d > 64) {
    throw IoError("implausible raster dimensions in " + path.string());
  }
  return static_cast<std::size_t>(a * b * c * d);
}

}  // namespace

void write_sraw(const std::filesystem::path& path, const RasterF32& r) {
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height * r.channels * r.planes;
  if (n != r.data.size()) throw StructuralError("sraw: sample count does not match header");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "SRAW " << r.width << ' ' << r.height << ' ' << r.channels << ' ' << r.planes << '\n';
  std::vector<std::uint32_t> words(n);
  for (std::size_t i = 0; i < n; ++i) words[i] = to_le(std::bit_cast<std::uint32_t>(r.data[i]));
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(n * 4));
  if (!out) throw IoError("short write to " + path.string());
}

RasterF32 read_sraw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::istringstream hdr(read_header_line(in, path));
  std::string magic;
  long long w = 0, h = 0, c = 0, p = 0;
  if (!(hdr >> magic >> w >> h >> c >> p) || magic != "SRAW") throw IoError("not an SRAW file: " + path.string());
  const std::size_t n = checked_count(w, h, c, p, path);
  std::vector<std::uint32_t> words(n);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(n * 4));
  if (in.gcount() != static_cast<std::streamsize>(n * 4)) throw IoError("truncated SRAW payload: " + path.string());
  RasterF32 r{static_cast<int>(w), static_cast<int>(h), static_cast<int>(c), static_cast<int>(p), std::vector<float>(n)};
  for (std::size_t i = 0; i < n; ++i) r.data[i] = std::bit_cast<float>(to_le(words[i]));
  return r;
}

void save_mask(const std::filesystem::path& path, const Mask& m) {
  RasterF32 r{m.width, m.height, 1, 1, {}};
  r.data.reserve(m.v.size());
  for (auto b : m.v) r.data.push_back(b ? 1.0f : 0.0f);
  write_sraw(path, r);
}

Mask load_mask(const std::filesystem::path& path) {
  const RasterF32 r = read_sraw(path);
  if (r.channels != 1 || r.planes != 1) throw IoError("mask raster must have one channel and one plane");
  Mask m(r.width, r.height);
  for (std::size_t i = 0; i < m.v.size(); ++i) {
    if (r.data[i] != 0.0f && r.data[i] != 1.0f) throw IoError("mask raster is not binary: " + path.string());
    m.v[i] = r.data[i] != 0.0f ? 1 : 0;
  }
  return m;
}

void save_vector(const std::filesystem::path& path, const std::vector<float>& v) {
  write_sraw(path, RasterF32{static_cast<int>(v.size()), 1, 1, 1, v});
}

std::vector<float> load_vector(const std::filesystem::path& path) {
  RasterF32 r = read_sraw(path);
  if (r.height != 1 || r.channels != 1 || r.planes != 1) throw IoError("expected a flat vector raster");
  return std::move(r.data);
}

void write_ppat(const std::filesystem::path& path, const Raster8& r) {
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height * r.channels;
  if (n != r.data.size()) throw StructuralError("ppat: sample count does not match header");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "PPAT " << r.width << ' ' << r.height << ' ' << r.channels << '\n';
  out.write(reinterpret_cast<const char*>(r.data.data()), static_cast<std::streamsize>(n));
  if (!out) throw IoError("short write to " + path.string());
}

Raster8 read_ppat(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::istringstream hdr(read_header_line(in, path));
  std::string magic;
  long long w = 0, h = 0, c = 0;
  if (!(hdr >> magic >> w >> h >> c) || magic != "PPAT") throw IoError("not a PPAT file: " + path.string());
  const std::size_t n = checked_count(w, h, c, 1, path);
  Raster8 r{static_cast<int>(w), static_cast<int>(h), static_cast<int>(c), std::vector<std::uint8_t>(n)};
  in.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) throw IoError("truncated PPAT payload: " + path.string());
  return r;
}

}  // namespace polatk
