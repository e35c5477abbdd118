#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "erpmvs/geometry.hpp"

namespace erpmvs {

// Indexed triangle mesh with per-vertex colors. Vertices are stored in
// doubles but quantize to float32 on disk, so a mesh that came from a file
// round-trips byte-identically.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint8_t, 3>> colors;  // one RGB per vertex
  std::vector<std::array<std::int32_t, 3>> faces;   // CCW when seen from outside

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t face_count() const { return faces.size(); }
};

}  // namespace erpmvs
