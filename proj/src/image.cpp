#include "erpmvs/image.hpp"

#include <cmath>
#include <stdexcept>

#include "erpmvs/simd/kernels.hpp"

namespace erpmvs {

void bilinear_sample_wrap(const Image& img, double u, double v, float* out) {
  const int w = img.width;
  const int h = img.height;
  // u into [0, w)
  u = std::fmod(u, static_cast<double>(w));
  if (u < 0.0) u += w;
  if (u >= w) u = 0.0;  // fmod can round back up to w
  if (v < 0.0) v = 0.0;
  if (v > h - 1) v = h - 1;

  const int x0 = static_cast<int>(u);
  const int y0 = static_cast<int>(v);
  const int x1 = (x0 + 1 == w) ? 0 : x0 + 1;
  const int y1 = (y0 + 1 >= h) ? h - 1 : y0 + 1;
  const float fu = static_cast<float>(u - x0);
  const float fv = static_cast<float>(v - y0);
  const float w00 = (1.0f - fu) * (1.0f - fv);
  const float w01 = fu * (1.0f - fv);
  const float w10 = (1.0f - fu) * fv;
  const float w11 = fu * fv;

  simd::active_kernels().blend4(img.pixel(x0, y0), img.pixel(x1, y0),
                                img.pixel(x0, y1), img.pixel(x1, y1), w00, w01,
                                w10, w11, out, static_cast<std::size_t>(img.channels));
}

Image downsample2(const Image& img) {
  if (img.width % 2 != 0 || img.height % 2 != 0)
    throw std::invalid_argument("downsample2: dimensions must be even");
  Image out(img.width / 2, img.height / 2, img.channels);
  const auto& k = simd::active_kernels();
  const std::size_t n = static_cast<std::size_t>(img.channels);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      k.avg4(img.pixel(2 * x, 2 * y), img.pixel(2 * x + 1, 2 * y),
             img.pixel(2 * x, 2 * y + 1), img.pixel(2 * x + 1, 2 * y + 1), 0.25f,
             out.pixel(x, y), n);
  return out;
}

Image shift_columns(const Image& img, int k) {
  Image out(img.width, img.height, img.channels);
  const int w = img.width;
  int kk = k % w;
  if (kk < 0) kk += w;
  const std::size_t row_px = static_cast<std::size_t>(img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < w; ++x) {
      const int sx = (x - kk + w) % w;
      const float* src = img.pixel(sx, y);
      float* dst = out.pixel(x, y);
      for (std::size_t c = 0; c < row_px; ++c) dst[c] = src[c];
    }
  return out;
}

Image to_grayscale(const Image& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3)
    throw std::invalid_argument("to_grayscale: expected 1 or 3 channels");
  Image out(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const float* p = img.pixel(x, y);
      out.at(x, y) = 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
    }
  return out;
}

}  // namespace erpmvs
