#pragma once

#include <string>

#include "erpmvs/image.hpp"

namespace erpmvs::io {

// Portable FloatMap. "Pf" = 1 channel, "PF" = 3 channels; the scale line's
// sign encodes endianness (negative = little-endian, which is what we write);
// pixel rows are stored bottom-up.
void write_pfm(const std::string& path, const Image& img);
Image read_pfm(const std::string& path);

// Depth maps ride on the 1-channel variant with NaN marking invalid pixels.
void write_pfm_depth(const std::string& path, const DepthMap& depth);
DepthMap read_pfm_depth(const std::string& path);

}  // namespace erpmvs::io
