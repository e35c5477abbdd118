#pragma once

#include <string>
#include <vector>

#include "erpmvs/feature_pipeline.hpp"
#include "erpmvs/sphere_kernel.hpp"

namespace erpmvs::io {

// Single convolution kernel. ASCII header "SPHK <size> <in_ch> <out_ch>\n"
// followed by float32 little-endian weights indexed (tap, in, out).
void write_conv_weights(const std::string& path, const ConvWeights& w);
ConvWeights read_conv_weights(const std::string& path);

// Scoring head. "SMLP <n_layers>\n", then per layer
// "<rows> <cols> <relu|linear>\n" followed by float32 row-major weights and
// float32 biases.
void write_mlp_weights(const std::string& path, const MlpWeights& w);
MlpWeights read_mlp_weights(const std::string& path);

// Feature network stack. "SPHN <n_blocks>\n", then per block
// "block <pool01>\n" followed by the regular and latitude-adaptive kernels,
// each in the single-kernel layout above.
void write_network_weights(const std::string& path,
                           const std::vector<FusedBlock>& blocks);
std::vector<FusedBlock> read_network_weights(const std::string& path);

}  // namespace erpmvs::io
