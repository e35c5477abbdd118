#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "erpmvs/geometry.hpp"
#include "erpmvs/image.hpp"
#include "erpmvs/mesh.hpp"

namespace erpmvs {

// Truncated signed distance volume over a regular voxel grid. Distances are
// signed along the viewing ray (radial): positive in free space between the
// camera and the surface, negative behind it. Values are normalized by the
// truncation band, so stored samples lie in [-1, 1].
struct TsdfGrid {
  Vec3 origin{};        // world position of the grid corner; the center of
                        // voxel (i,j,k) is origin + (i+0.5, j+0.5, k+0.5)*vs
  double voxel_size{};  // edge length in meters
  int nx = 0, ny = 0, nz = 0;

  std::vector<float> tsdf;    // normalized signed distance, per voxel
  std::vector<float> weight;  // accumulated integration weight, per voxel
  std::vector<float> color;   // running-mean RGB in [0,255], 3 per voxel

  TsdfGrid(const Vec3& origin, double voxel_size, int nx, int ny, int nz);

  // Grid whose voxels cover the axis-aligned box [lo, hi].
  static TsdfGrid covering(const Vec3& lo, const Vec3& hi, double voxel_size);

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(ny) +
            static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(i);
  }
  Vec3 center(int i, int j, int k) const {
    return Vec3{origin.x + (i + 0.5) * voxel_size,
                origin.y + (j + 0.5) * voxel_size,
                origin.z + (k + 0.5) * voxel_size};
  }
  std::size_t voxel_count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
};

struct FusionParams {
  double truncation = 0.0;   // truncation band in meters; <=0 means
                             // 3 * voxel_size
  float max_weight = 128.0f; // cap for the running-mean weight
  int threads = 1;
};

// Folds one posed depth map (and its color image) into the volume. For each
// voxel, the voxel center is projected into the view; the depth sample at
// the nearest pixel gives the radial signed distance d - r. Voxels more
// than one truncation band behind the surface are left untouched; all
// others blend clamp(sdf/trunc, -1, 1) into the running mean.
void integrate_frame(TsdfGrid& grid, const DepthMap& depth, const Image& image,
                     const Pose& world_to_cam, const ErpIntrinsics& intr,
                     const FusionParams& params = {});

// Extracts the zero iso-surface as a triangle mesh (marching cubes over
// voxel-center cells). Cells touching any unobserved voxel (weight == 0)
// are skipped. Vertices on shared cell edges are emitted once and reused;
// triangles are wound counterclockwise seen from free space (positive
// side). Vertex colors interpolate the per-voxel running means.
TriangleMesh extract_mesh(const TsdfGrid& grid, double iso_level = 0.0);

// Volume snapshot: one text header line
//   TSDF <nx> <ny> <nz> <voxel_size> <ox> <oy> <oz>\n
// followed by little-endian float32 tsdf values, float32 weights, and
// 3x uint8 colors, each in x-fastest voxel order. Colors are rounded to
// whole levels on save.
void save_tsdf(const std::string& path, const TsdfGrid& grid);
TsdfGrid load_tsdf(const std::string& path);

}  // namespace erpmvs
