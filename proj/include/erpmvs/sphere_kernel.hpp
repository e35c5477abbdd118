#pragma once

#include <vector>

#include "erpmvs/geometry.hpp"
#include "erpmvs/image.hpp"

namespace erpmvs {

// Square tap layout for a latitude-adaptive convolution. Taps live on the
// tangent plane of the sphere at each pixel's view direction; angular step
// sizes default to one pixel of the equirectangular grid at the equator.
struct KernelPattern {
  int size = 3;          // odd, taps = size*size
  double delta_theta;    // horizontal angular step (radians)
  double delta_phi;      // vertical angular step (radians)

  KernelPattern(int size_, double dtheta, double dphi);
  int taps() const { return size * size; }
};

// One-pixel-per-step pattern for the given image resolution.
KernelPattern pattern_for(const ErpIntrinsics& intr, int size = 3);

// Tangent-plane coordinates of every tap, row-major over the kernel window
// (top-left tap first). Tap (ii, jj) with half = size/2 sits at
//   x = tan((ii - half) * delta_theta)
//   y = sec((ii - half) * delta_theta) * tan((half - jj) * delta_phi)
// so +y points toward the north pole and the horizontal extent stretches by
// 1/cos at off-axis columns, matching how great circles leave the equator.
std::vector<std::array<double, 2>> tangent_pattern(const KernelPattern& pattern);

// Precomputed sampling positions for every (row, tap) pair. The horizontal
// component is a column *offset* (the pattern is invariant under rotation
// about the polar axis, so it only depends on the row); the vertical
// component is an absolute row coordinate clamped into [0, H-1].
struct SampleGrid {
  int width = 0;
  int height = 0;
  int taps = 0;
  std::vector<double> du;  // height * taps, column offsets in pixels
  std::vector<double> v;   // height * taps, absolute row coordinates

  // Sampling position of tap t for the pixel centered at column x, row y.
  // The column wraps across the horizontal seam.
  PixelCoord at(int x, int y, int t) const {
    const std::size_t i = static_cast<std::size_t>(y) * taps + t;
    double u = static_cast<double>(x) + du[i];
    u -= width * std::floor(u / width);
    if (u >= width) u = 0.0;  // guard against floor rounding at the seam
    return PixelCoord{u, v[i]};
  }
};

// Builds the per-row sampling grid by mapping each tangent-plane tap back to
// the sphere (inverse gnomonic projection) and then into pixel coordinates.
SampleGrid build_sample_grid(const KernelPattern& pattern,
                             const ErpIntrinsics& intr);

// Gathers the taps for every pixel with bilinear interpolation:
// out(x, y, t*C + c) = in(grid.at(x, y, t), c). That layout keeps each tap's
// channels contiguous for the convolution inner loop.
Image sphere_sample(const Image& img, const SampleGrid& grid, int threads = 1);

// Dense convolution weights: w(tap, in_ch, out_ch), out_ch contiguous.
struct ConvWeights {
  int size = 0;
  int in_ch = 0;
  int out_ch = 0;
  std::vector<float> w;

  ConvWeights() = default;
  ConvWeights(int size_, int in, int out);
  int taps() const { return size * size; }
  float at(int tap, int in, int out) const {
    return w[(static_cast<std::size_t>(tap) * in_ch + in) * out_ch + out];
  }
  float& at(int tap, int in, int out) {
    return w[(static_cast<std::size_t>(tap) * in_ch + in) * out_ch + out];
  }
};

// Convolution over the latitude-adaptive taps.
Image sphere_conv(const Image& img, const ConvWeights& weights,
                  const SampleGrid& grid, int threads = 1);

// Plain grid convolution with the same weight layout: tap (ii, jj) reads the
// pixel at (x + ii - half, y + jj - half), columns wrapping, rows clamped.
Image regular_conv(const Image& img, const ConvWeights& weights,
                   int threads = 1);

// Sum of a regular and a latitude-adaptive convolution, the building block
// of the feature network.
Image fused_layer(const Image& img, const ConvWeights& regular_w,
                  const ConvWeights& sphere_w, const SampleGrid& grid,
                  int threads = 1);

}  // namespace erpmvs
