#include "erpmvs/feature_pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include "erpmvs/parallel.hpp"
#include "erpmvs/simd/kernels.hpp"

namespace erpmvs {

Image classical_features(const Image& img, int radius, int threads) {
  if (radius < 0) throw std::invalid_argument("descriptor radius must be >= 0");
  if (2 * radius + 1 > img.height || 2 * radius + 1 > img.width)
    throw std::invalid_argument("descriptor patch larger than image");
  const Image gray = img.channels == 1 ? img : to_grayscale(img);
  const int side = 2 * radius + 1;
  const int patch = side * side - 1;
  const int dim = 3 + patch;
  Image out(img.width, img.height, dim);
  const int w = img.width;
  const int h = img.height;

  auto wrap_x = [w](int x) {
    x %= w;
    return x < 0 ? x + w : x;
  };
  // Taps that run off the top or bottom continue over the pole: the row
  // reflects and the column advances half a turn, which is the panorama's
  // true spherical neighbourhood (row clamping would duplicate border rows
  // and degrade descriptors near the poles).
  auto sample = [&gray, w, h, &wrap_x](int x, int y) {
    if (y < 0) {
      y = -y;
      x += w / 2;
    } else if (y >= h) {
      y = std::min(2 * h - y, h - 1);
      x += w / 2;
    }
    return gray.at(wrap_x(x), y);
  };

  parallel_for_chunks(0, h, 32, threads, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < w; ++x) {
        float* dst = out.pixel(x, y);
        dst[0] = gray.at(x, y);
        dst[1] = (gray.at(wrap_x(x + 1), y) - gray.at(wrap_x(x - 1), y)) * 0.5f;
        dst[2] = (sample(x, y + 1) - sample(x, y - 1)) * 0.5f;
        float sum = 0.0f;
        int k = 3;
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const float s = sample(x + dx, y + dy);
            dst[k++] = s;
            sum += s;
          }
        const float mean = sum / static_cast<float>(patch);
        for (int i = 3; i < dim; ++i) dst[i] -= mean;
      }
  });
  return out;
}

Image network_features(const Image& img, const std::vector<FusedBlock>& blocks,
                       int threads) {
  if (blocks.empty()) throw std::invalid_argument("network has no blocks");
  Image x = img;
  const auto& k = simd::active_kernels();
  for (const FusedBlock& block : blocks) {
    ErpIntrinsics intr(x.width, x.height);
    SampleGrid grid = build_sample_grid(pattern_for(intr, block.sphere.size), intr);
    Image y = fused_layer(x, block.regular, block.sphere, grid, threads);
    k.relu(y.data.data(), y.data.size());
    if (block.pool) {
      if (y.width % 2 != 0 || y.height % 2 != 0)
        throw std::invalid_argument("pooling requires even dimensions");
      y = downsample2(y);
    }
    x = std::move(y);
  }
  return x;
}

void MlpWeights::validate(int input_dim) const {
  if (layers.empty()) throw std::invalid_argument("mlp has no layers");
  int dim = input_dim;
  for (const MlpLayer& layer : layers) {
    if (layer.rows <= 0 || layer.cols <= 0)
      throw std::invalid_argument("mlp layer has empty shape");
    if (layer.cols != dim)
      throw std::invalid_argument("mlp layer input width does not chain");
    if (layer.weights.size() !=
        static_cast<std::size_t>(layer.rows) * layer.cols)
      throw std::invalid_argument("mlp weight buffer has wrong size");
    if (layer.bias.size() != static_cast<std::size_t>(layer.rows))
      throw std::invalid_argument("mlp bias buffer has wrong size");
    dim = layer.rows;
  }
  if (dim != 1) throw std::invalid_argument("mlp must end in a single score");
}

float mlp_forward(const MlpWeights& mlp, std::span<const float> input) {
  mlp.validate(static_cast<int>(input.size()));
  std::vector<float> cur(input.begin(), input.end());
  std::vector<float> next;
  for (const MlpLayer& layer : mlp.layers) {
    next.assign(static_cast<std::size_t>(layer.rows), 0.0f);
    for (int r = 0; r < layer.rows; ++r) {
      const float* wrow = &layer.weights[static_cast<std::size_t>(r) * layer.cols];
      float acc = layer.bias[static_cast<std::size_t>(r)];
      for (int c = 0; c < layer.cols; ++c) acc += wrow[c] * cur[static_cast<std::size_t>(c)];
      if (layer.activation == MlpLayer::Activation::kRelu && acc < 0.0f)
        acc = 0.0f;
      next[static_cast<std::size_t>(r)] = acc;
    }
    cur.swap(next);
  }
  return cur[0];
}

}  // namespace erpmvs
