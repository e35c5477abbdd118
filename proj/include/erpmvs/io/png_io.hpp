#pragma once

#include <string>

#include "erpmvs/image.hpp"

namespace erpmvs::io {

// 8-bit PNG. Float values in [0,1] map to [0,255] (round-to-nearest,
// clamped). 1-channel images are written as grayscale, 3-channel as RGB.
void write_png(const std::string& path, const Image& img);

// Reads 8/16-bit gray/palette/RGB/RGBA as a 3-channel float image in [0,1]
// (alpha is dropped).
Image read_png(const std::string& path);

}  // namespace erpmvs::io
