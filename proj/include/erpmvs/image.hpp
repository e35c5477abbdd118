#pragma once

#include <cstdint>
#include <vector>

#include "erpmvs/geometry.hpp"

namespace erpmvs {

// Dense H x W x C float grid, row-major with interleaved channels (HWC).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
  float& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  const float* pixel(int x, int y) const { return &data[index(x, y)]; }
  float* pixel(int x, int y) { return &data[index(x, y)]; }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// Feature maps share the dense-grid representation; channels = descriptor dim.
using FeatureMap = Image;

// Per-pixel radial depth in meters with an explicit validity mask.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> depth;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w), height(h), depth(static_cast<std::size_t>(w) * h, 0.0f),
        valid(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  float at(int x, int y) const { return depth[index(x, y)]; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
  void set(int x, int y, float d) {
    depth[index(x, y)] = d;
    valid[index(x, y)] = 1;
  }
  void set_invalid(int x, int y) {
    depth[index(x, y)] = 0.0f;
    valid[index(x, y)] = 0;
  }
};

// Bilinear sample of all channels at (u, v); u wraps modulo width (ERP seam
// continuity), v clamps at the poles. Writes `channels` floats to out.
void bilinear_sample_wrap(const Image& img, double u, double v, float* out);

// 2x2 box downsample; width and height must be even.
Image downsample2(const Image& img);

// Cyclic column shift by k (k may be negative).
Image shift_columns(const Image& img, int k);

// Luma conversion (Rec.601 for 3-channel, passthrough for 1-channel).
Image to_grayscale(const Image& img);

}  // namespace erpmvs
