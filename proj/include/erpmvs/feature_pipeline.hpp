#pragma once

#include <span>
#include <vector>

#include "erpmvs/sphere_kernel.hpp"

namespace erpmvs {

// Weight-free per-pixel descriptor on the grayscale image:
//   [intensity, gx, gy, patch samples minus patch mean]
// where gx/gy are central differences (columns wrap, rows clamp) and the
// patch covers the (2r+1)^2 window around the pixel, center excluded.
// Feature dimension: 3 + (2r+1)^2 - 1.
Image classical_features(const Image& img, int radius = 2, int threads = 1);

// One stage of the feature network: a regular and a latitude-adaptive
// convolution summed, ReLU, and optionally a 2x2 average pool.
struct FusedBlock {
  ConvWeights regular;
  ConvWeights sphere;
  bool pool = false;
};

// Runs the blocks in order. Image dimensions must stay even through every
// pooling stage. Returns the final feature map.
Image network_features(const Image& img, const std::vector<FusedBlock>& blocks,
                       int threads = 1);

// Fully connected scoring head. Row-major weights, one bias per row.
struct MlpLayer {
  enum class Activation { kRelu, kLinear };
  int rows = 0;
  int cols = 0;
  Activation activation = Activation::kLinear;
  std::vector<float> weights;  // rows * cols, row-major
  std::vector<float> bias;     // rows
};

struct MlpWeights {
  std::vector<MlpLayer> layers;

  // Throws unless layer dimensions chain and the last layer has one row.
  void validate(int input_dim) const;
};

// Forward pass in float32; each output element is bias + a sequential dot
// product over the row, so results are reproducible bit for bit.
float mlp_forward(const MlpWeights& mlp, std::span<const float> input);

}  // namespace erpmvs
