#pragma once

#include <array>
#include <cstdint>

namespace erpmvs {

// Cube corners are numbered by coordinate bits: corner i sits at
// ((i>>0)&1, (i>>1)&1, (i>>2)&1). The 12 edges, in table order:
inline constexpr int kCubeEdgeCorners[12][2] = {
    {0, 1}, {2, 3}, {4, 5}, {6, 7},  // along +x
    {0, 2}, {1, 3}, {4, 6}, {5, 7},  // along +y
    {0, 4}, {1, 5}, {2, 6}, {3, 7},  // along +z
};

// Triangulation of the iso-surface inside one cube for each of the 256
// corner-sign configurations (bit i set = corner i below the iso level,
// i.e. inside the solid). Each row lists edge indices, three per triangle,
// -1 terminated. Triangles are wound counterclockwise seen from the
// outside (positive / free-space side).
//
// The table is generated once at startup by walking the cut polygons on
// the cube surface. On ambiguous faces (diagonal sign patterns) the cuts
// always separate the inside corners; since the choice depends only on the
// face's own signs, adjacent cells agree and the extracted surface is
// watertight by construction.
struct McTables {
  std::array<std::array<std::int8_t, 16>, 256> tris;
  std::array<std::uint16_t, 256> edge_mask;  // bit e set = edge e is cut
};

const McTables& mc_tables();

}  // namespace erpmvs
