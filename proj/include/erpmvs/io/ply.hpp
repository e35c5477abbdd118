#pragma once

#include <string>

#include "erpmvs/mesh.hpp"

namespace erpmvs::io {

// Binary little-endian PLY: float32 x/y/z, uchar red/green/blue per vertex;
// faces as uchar-count + int32 index lists. Writing is deterministic byte
// for byte, and write(read(write(m))) equals write(m).
void write_ply(const std::string& path, const TriangleMesh& mesh);
TriangleMesh read_ply(const std::string& path);

}  // namespace erpmvs::io
