#include "erpmvs/io/pfm.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

namespace erpmvs::io {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("pfm: " + path + ": " + what);
}

float byteswap_f32(float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  u = ((u & 0x000000ffu) << 24) | ((u & 0x0000ff00u) << 8) |
      ((u & 0x00ff0000u) >> 8) | ((u & 0xff000000u) >> 24);
  std::memcpy(&v, &u, 4);
  return v;
}

constexpr bool kHostLittle = std::endian::native == std::endian::little;

}  // namespace

void write_pfm(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("pfm: image must have 1 or 3 channels");
  if (img.width <= 0 || img.height <= 0)
    throw std::invalid_argument("pfm: empty image");
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for writing");
  f << (img.channels == 1 ? "Pf" : "PF") << "\n"
    << img.width << " " << img.height << "\n"
    << "-1.0\n";
  const std::size_t row_floats =
      static_cast<std::size_t>(img.width) * img.channels;
  std::vector<float> row(row_floats);
  for (int y = img.height - 1; y >= 0; --y) {
    const float* src = &img.data[img.index(0, y, 0)];
    if constexpr (kHostLittle) {
      f.write(reinterpret_cast<const char*>(src),
              static_cast<std::streamsize>(row_floats * 4));
    } else {
      for (std::size_t i = 0; i < row_floats; ++i) row[i] = byteswap_f32(src[i]);
      f.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row_floats * 4));
    }
  }
  if (!f) fail(path, "write failed");
}

Image read_pfm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open");
  std::string magic;
  f >> magic;
  int channels = 0;
  if (magic == "Pf") channels = 1;
  else if (magic == "PF") channels = 3;
  else fail(path, "bad magic '" + magic + "'");
  int w = 0, h = 0;
  double scale = 0.0;
  f >> w >> h >> scale;
  if (!f || w <= 0 || h <= 0 || scale == 0.0) fail(path, "bad header");
  f.get();  // single whitespace byte after the scale line
  Image img(w, h, channels);
  const bool file_little = scale < 0.0;
  const std::size_t row_floats = static_cast<std::size_t>(w) * channels;
  for (int y = h - 1; y >= 0; --y) {
    float* dst = &img.data[img.index(0, y, 0)];
    f.read(reinterpret_cast<char*>(dst),
           static_cast<std::streamsize>(row_floats * 4));
    if (!f) fail(path, "truncated pixel data");
    if (file_little != kHostLittle)
      for (std::size_t i = 0; i < row_floats; ++i) dst[i] = byteswap_f32(dst[i]);
  }
  return img;
}

void write_pfm_depth(const std::string& path, const DepthMap& depth) {
  Image img(depth.width, depth.height, 1);
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x)
      img.at(x, y, 0) = depth.is_valid(x, y)
                            ? depth.at(x, y)
                            : std::numeric_limits<float>::quiet_NaN();
  write_pfm(path, img);
}

DepthMap read_pfm_depth(const std::string& path) {
  Image img = read_pfm(path);
  if (img.channels != 1) fail(path, "depth map must be single channel");
  DepthMap depth(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      float v = img.at(x, y, 0);
      if (std::isnan(v))
        depth.set_invalid(x, y);
      else
        depth.set(x, y, v);
    }
  return depth;
}

}  // namespace erpmvs::io
