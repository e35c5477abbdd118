#include "erpmvs/sphere_kernel.hpp"

#include <cmath>
#include <stdexcept>

#include "erpmvs/parallel.hpp"
#include "erpmvs/simd/kernels.hpp"

namespace erpmvs {

KernelPattern::KernelPattern(int size_, double dtheta, double dphi)
    : size(size_), delta_theta(dtheta), delta_phi(dphi) {
  if (size < 1 || size % 2 == 0)
    throw std::invalid_argument("kernel size must be odd and positive");
  if (!(dtheta > 0.0) || !(dtheta < kPi / 2) || !(dphi > 0.0) ||
      !(dphi < kPi / 2))
    throw std::invalid_argument("angular steps must lie in (0, pi/2)");
}

KernelPattern pattern_for(const ErpIntrinsics& intr, int size) {
  return KernelPattern(size, 2.0 * kPi / intr.width, kPi / intr.height);
}

std::vector<std::array<double, 2>> tangent_pattern(
    const KernelPattern& pattern) {
  const int half = pattern.size / 2;
  std::vector<std::array<double, 2>> taps;
  taps.reserve(static_cast<std::size_t>(pattern.taps()));
  for (int jj = 0; jj < pattern.size; ++jj) {
    const int j = half - jj;  // +j toward the north pole
    for (int ii = 0; ii < pattern.size; ++ii) {
      const int i = ii - half;
      const double a = i * pattern.delta_theta;
      const double x = std::tan(a);
      const double y = std::tan(j * pattern.delta_phi) / std::cos(a);
      taps.push_back({x, y});
    }
  }
  return taps;
}

SampleGrid build_sample_grid(const KernelPattern& pattern,
                             const ErpIntrinsics& intr) {
  const auto taps = tangent_pattern(pattern);
  SampleGrid grid;
  grid.width = intr.width;
  grid.height = intr.height;
  grid.taps = pattern.taps();
  grid.du.resize(static_cast<std::size_t>(intr.height) * grid.taps);
  grid.v.resize(grid.du.size());

  const double u_per_rad = intr.width / (2.0 * kPi);
  for (int y = 0; y < intr.height; ++y) {
    // Pixel centers sit at integer coordinates; phi0 is this row's latitude.
    const double phi0 =
        unproject(PixelCoord{0.0, static_cast<double>(y)}, intr).phi;
    const double sin_phi0 = std::sin(phi0);
    const double cos_phi0 = std::cos(phi0);
    for (int t = 0; t < grid.taps; ++t) {
      const double tx = taps[static_cast<std::size_t>(t)][0];
      const double ty = taps[static_cast<std::size_t>(t)][1];
      const double rho = std::hypot(tx, ty);
      double dtheta, phi;
      if (rho == 0.0) {
        dtheta = 0.0;
        phi = phi0;
      } else {
        // Inverse gnomonic projection of the tangent-plane point.
        const double c = std::atan(rho);
        const double sin_c = std::sin(c);
        const double cos_c = std::cos(c);
        double s = cos_c * sin_phi0 + ty * sin_c * cos_phi0 / rho;
        s = std::min(1.0, std::max(-1.0, s));
        phi = std::asin(s);
        dtheta = std::atan2(tx * sin_c,
                            rho * cos_phi0 * cos_c - ty * sin_phi0 * sin_c);
      }
      const std::size_t i = static_cast<std::size_t>(y) * grid.taps + t;
      grid.du[i] = dtheta * u_per_rad;
      double v = project(SphericalCoord{0.0, phi}, intr).v;
      grid.v[i] = std::min(static_cast<double>(intr.height - 1),
                           std::max(0.0, v));
    }
  }
  return grid;
}

namespace {

void check_grid(const Image& img, const SampleGrid& grid) {
  if (img.width != grid.width || img.height != grid.height)
    throw std::invalid_argument("sample grid was built for another resolution");
}

}  // namespace

Image sphere_sample(const Image& img, const SampleGrid& grid, int threads) {
  check_grid(img, grid);
  Image out(img.width, img.height, grid.taps * img.channels);
  parallel_for_chunks(0, img.height, 16, threads, [&](int y0, int y1) {
    std::vector<float> tap_buf(static_cast<std::size_t>(img.channels));
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < img.width; ++x) {
        float* dst = out.pixel(x, y);
        for (int t = 0; t < grid.taps; ++t) {
          const PixelCoord p = grid.at(x, y, t);
          bilinear_sample_wrap(img, p.u, p.v, tap_buf.data());
          for (int c = 0; c < img.channels; ++c)
            dst[static_cast<std::size_t>(t) * img.channels + c] = tap_buf[c];
        }
      }
  });
  return out;
}

ConvWeights::ConvWeights(int size_, int in, int out)
    : size(size_), in_ch(in), out_ch(out) {
  if (size < 1 || size % 2 == 0)
    throw std::invalid_argument("kernel size must be odd and positive");
  if (in < 1 || out < 1)
    throw std::invalid_argument("channel counts must be positive");
  w.assign(static_cast<std::size_t>(taps()) * in * out, 0.0f);
}

Image sphere_conv(const Image& img, const ConvWeights& weights,
                  const SampleGrid& grid, int threads) {
  check_grid(img, grid);
  if (weights.taps() != grid.taps)
    throw std::invalid_argument("weight tap count does not match grid");
  if (weights.in_ch != img.channels)
    throw std::invalid_argument("weight input channels do not match image");
  Image out(img.width, img.height, weights.out_ch);
  const auto& k = simd::active_kernels();
  parallel_for_chunks(0, img.height, 16, threads, [&](int y0, int y1) {
    std::vector<float> tap_buf(static_cast<std::size_t>(img.channels));
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < img.width; ++x) {
        float* dst = out.pixel(x, y);
        for (int t = 0; t < grid.taps; ++t) {
          const PixelCoord p = grid.at(x, y, t);
          bilinear_sample_wrap(img, p.u, p.v, tap_buf.data());
          for (int c = 0; c < img.channels; ++c)
            k.axpy(tap_buf[static_cast<std::size_t>(c)],
                   &weights.w[(static_cast<std::size_t>(t) * weights.in_ch + c) *
                              weights.out_ch],
                   dst, static_cast<std::size_t>(weights.out_ch));
        }
      }
  });
  return out;
}

Image regular_conv(const Image& img, const ConvWeights& weights, int threads) {
  if (weights.in_ch != img.channels)
    throw std::invalid_argument("weight input channels do not match image");
  Image out(img.width, img.height, weights.out_ch);
  const int half = weights.size / 2;
  const auto& k = simd::active_kernels();
  parallel_for_chunks(0, img.height, 16, threads, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < img.width; ++x) {
        float* dst = out.pixel(x, y);
        int t = 0;
        for (int jj = 0; jj < weights.size; ++jj) {
          int sy = y + jj - half;
          sy = std::min(img.height - 1, std::max(0, sy));
          for (int ii = 0; ii < weights.size; ++ii, ++t) {
            int sx = (x + ii - half) % img.width;
            if (sx < 0) sx += img.width;
            const float* src = img.pixel(sx, sy);
            for (int c = 0; c < img.channels; ++c)
              k.axpy(src[c],
                     &weights.w[(static_cast<std::size_t>(t) * weights.in_ch +
                                 c) *
                                weights.out_ch],
                     dst, static_cast<std::size_t>(weights.out_ch));
          }
        }
      }
  });
  return out;
}

Image fused_layer(const Image& img, const ConvWeights& regular_w,
                  const ConvWeights& sphere_w, const SampleGrid& grid,
                  int threads) {
  if (regular_w.out_ch != sphere_w.out_ch)
    throw std::invalid_argument("fused branches must share output channels");
  Image a = regular_conv(img, regular_w, threads);
  Image b = sphere_conv(img, sphere_w, grid, threads);
  const auto& k = simd::active_kernels();
  k.add(a.data.data(), b.data.data(), a.data.data(), a.data.size());
  return a;
}

}  // namespace erpmvs
