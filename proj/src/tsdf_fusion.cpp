#include "erpmvs/tsdf_fusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "erpmvs/marching_cubes_tables.hpp"
#include "erpmvs/parallel.hpp"

namespace erpmvs {

static_assert(std::endian::native == std::endian::little,
              "tsdf snapshots assume a little-endian host");

namespace {

constexpr double kMinCameraRadius = 1e-12;

[[noreturn]] void fail_tsdf(const std::string& path, const std::string& what) {
  throw std::runtime_error("tsdf: " + path + ": " + what);
}

}  // namespace

TsdfGrid::TsdfGrid(const Vec3& origin_, double voxel_size_, int nx_, int ny_,
                   int nz_)
    : origin(origin_), voxel_size(voxel_size_), nx(nx_), ny(ny_), nz(nz_) {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("tsdf: voxel size must be positive");
  if (nx < 1 || ny < 1 || nz < 1)
    throw std::invalid_argument("tsdf: grid dimensions must be at least 1");
  tsdf.assign(voxel_count(), 1.0f);
  weight.assign(voxel_count(), 0.0f);
  color.assign(voxel_count() * 3, 0.0f);
}

TsdfGrid TsdfGrid::covering(const Vec3& lo, const Vec3& hi, double voxel_size) {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("tsdf: voxel size must be positive");
  if (!(hi.x > lo.x) || !(hi.y > lo.y) || !(hi.z > lo.z))
    throw std::invalid_argument("tsdf: box must have positive extent");
  const auto cells = [voxel_size](double span) {
    return std::max(1, static_cast<int>(std::ceil(span / voxel_size - 1e-9)));
  };
  return TsdfGrid(lo, voxel_size, cells(hi.x - lo.x), cells(hi.y - lo.y),
                  cells(hi.z - lo.z));
}

void integrate_frame(TsdfGrid& grid, const DepthMap& depth, const Image& image,
                     const Pose& world_to_cam, const ErpIntrinsics& intr,
                     const FusionParams& params) {
  if (depth.width != intr.width || depth.height != intr.height)
    throw std::invalid_argument("tsdf: depth map does not match intrinsics");
  if (image.width != intr.width || image.height != intr.height ||
      image.channels != 3)
    throw std::invalid_argument("tsdf: color image must be 3-channel at intrinsics size");
  if (!world_to_cam.is_valid())
    throw std::invalid_argument("tsdf: pose rotation is not a rotation matrix");
  if (!(params.max_weight >= 1.0f))
    throw std::invalid_argument("tsdf: max weight must be at least 1");
  const double trunc =
      params.truncation > 0.0 ? params.truncation : 3.0 * grid.voxel_size;

  parallel_for_chunks(0, grid.nz, 1, params.threads, [&](std::int64_t k0,
                                                         std::int64_t k1) {
    for (std::int64_t k = k0; k < k1; ++k) {
      for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
          const Vec3 p_cam =
              world_to_cam.apply(grid.center(i, j, static_cast<int>(k)));
          if (p_cam.norm() < kMinCameraRadius) continue;
          const auto [dir, r_voxel] = cartesian_to_spherical(p_cam);
          const PixelCoord pix = project(dir, intr);
          int px = static_cast<int>(std::lround(pix.u));
          if (px >= intr.width) px -= intr.width;
          if (px < 0) px += intr.width;
          const int py = std::clamp(static_cast<int>(std::lround(pix.v)), 0,
                                    intr.height - 1);
          if (!depth.is_valid(px, py)) continue;
          const double sdf = static_cast<double>(depth.at(px, py)) - r_voxel;
          if (sdf < -trunc) continue;  // occluded beyond the truncation band
          const double sample = std::min(1.0, sdf / trunc);

          const std::size_t idx = grid.index(i, j, static_cast<int>(k));
          const double w = grid.weight[idx];
          const double w_new = w + 1.0;
          grid.tsdf[idx] = static_cast<float>(
              (static_cast<double>(grid.tsdf[idx]) * w + sample) / w_new);
          for (int c = 0; c < 3; ++c) {
            const double level = 255.0 * image.at(px, py, c);
            grid.color[idx * 3 + c] = static_cast<float>(
                (static_cast<double>(grid.color[idx * 3 + c]) * w + level) /
                w_new);
          }
          grid.weight[idx] = static_cast<float>(
              std::min(w_new, static_cast<double>(params.max_weight)));
        }
      }
    }
  });
}

TriangleMesh extract_mesh(const TsdfGrid& grid, double iso_level) {
  const McTables& tables = mc_tables();
  TriangleMesh mesh;
  if (grid.nx < 2 || grid.ny < 2 || grid.nz < 2) return mesh;

  // Global id of the cut-vertex on the grid edge leaving voxel (i,j,k)
  // along +axis; filled in lazily as cells are scanned.
  std::unordered_map<std::int64_t, std::int32_t> edge_vertex;
  const auto edge_key = [&grid](int i, int j, int k, int axis) {
    return (static_cast<std::int64_t>(grid.index(i, j, k))) * 3 + axis;
  };

  std::array<std::size_t, 8> corner_idx{};
  std::array<std::int32_t, 12> cell_vertex{};
  for (int k = 0; k + 1 < grid.nz; ++k) {
    for (int j = 0; j + 1 < grid.ny; ++j) {
      for (int i = 0; i + 1 < grid.nx; ++i) {
        int config = 0;
        bool observed = true;
        for (int c = 0; c < 8; ++c) {
          const std::size_t idx =
              grid.index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
          corner_idx[c] = idx;
          if (!(grid.weight[idx] > 0.0f)) {
            observed = false;
            break;
          }
          if (static_cast<double>(grid.tsdf[idx]) < iso_level) config |= 1 << c;
        }
        if (!observed || config == 0 || config == 255) continue;

        const std::uint16_t mask = tables.edge_mask[config];
        for (int e = 0; e < 12; ++e) {
          if (!((mask >> e) & 1u)) continue;
          const int c0 = kCubeEdgeCorners[e][0];
          const int c1 = kCubeEdgeCorners[e][1];
          const int axis = e / 4;
          const std::int64_t key = edge_key(i + (c0 & 1), j + ((c0 >> 1) & 1),
                                            k + ((c0 >> 2) & 1), axis);
          const auto it = edge_vertex.find(key);
          if (it != edge_vertex.end()) {
            cell_vertex[e] = it->second;
            continue;
          }
          const std::size_t i0 = corner_idx[c0];
          const std::size_t i1 = corner_idx[c1];
          const double f0 = grid.tsdf[i0];
          const double f1 = grid.tsdf[i1];
          const double t = (iso_level - f0) / (f1 - f0);
          const Vec3 p0 = grid.center(i + (c0 & 1), j + ((c0 >> 1) & 1),
                                      k + ((c0 >> 2) & 1));
          const Vec3 p1 = grid.center(i + (c1 & 1), j + ((c1 >> 1) & 1),
                                      k + ((c1 >> 2) & 1));
          const std::int32_t id = static_cast<std::int32_t>(mesh.vertices.size());
          mesh.vertices.push_back(p0 + t * (p1 - p0));
          std::array<std::uint8_t, 3> rgb{};
          for (int c = 0; c < 3; ++c) {
            const double level = (1.0 - t) * grid.color[i0 * 3 + c] +
                                 t * grid.color[i1 * 3 + c];
            rgb[c] = static_cast<std::uint8_t>(
                std::clamp(std::lround(level), 0l, 255l));
          }
          mesh.colors.push_back(rgb);
          edge_vertex.emplace(key, id);
          cell_vertex[e] = id;
        }

        const auto& row = tables.tris[config];
        for (int t = 0; t + 2 < 16; t += 3) {
          if (row[t] < 0) break;
          mesh.faces.push_back({cell_vertex[row[t]], cell_vertex[row[t + 1]],
                                cell_vertex[row[t + 2]]});
        }
      }
    }
  }
  return mesh;
}

void save_tsdf(const std::string& path, const TsdfGrid& grid) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail_tsdf(path, "cannot open for writing");
  char header[256];
  std::snprintf(header, sizeof(header), "TSDF %d %d %d %.17g %.17g %.17g %.17g\n",
                grid.nx, grid.ny, grid.nz, grid.voxel_size, grid.origin.x,
                grid.origin.y, grid.origin.z);
  f << header;
  const std::size_t n = grid.voxel_count();
  f.write(reinterpret_cast<const char*>(grid.tsdf.data()),
          static_cast<std::streamsize>(n * 4));
  f.write(reinterpret_cast<const char*>(grid.weight.data()),
          static_cast<std::streamsize>(n * 4));
  std::vector<std::uint8_t> rgb(n * 3);
  for (std::size_t i = 0; i < n * 3; ++i) {
    rgb[i] = static_cast<std::uint8_t>(std::clamp(
        std::lround(static_cast<double>(grid.color[i])), 0l, 255l));
  }
  f.write(reinterpret_cast<const char*>(rgb.data()),
          static_cast<std::streamsize>(rgb.size()));
  if (!f) fail_tsdf(path, "write failed");
}

TsdfGrid load_tsdf(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail_tsdf(path, "cannot open");
  std::string line;
  if (!std::getline(f, line)) fail_tsdf(path, "missing header");
  std::istringstream hs(line);
  std::string magic;
  int nx = 0, ny = 0, nz = 0;
  double vs = 0.0, ox = 0.0, oy = 0.0, oz = 0.0;
  hs >> magic >> nx >> ny >> nz >> vs >> ox >> oy >> oz;
  if (!hs || magic != "TSDF") fail_tsdf(path, "bad header");
  if (nx < 1 || ny < 1 || nz < 1 || !(vs > 0.0)) fail_tsdf(path, "bad dimensions");
  TsdfGrid grid(Vec3{ox, oy, oz}, vs, nx, ny, nz);
  const std::size_t n = grid.voxel_count();
  f.read(reinterpret_cast<char*>(grid.tsdf.data()),
         static_cast<std::streamsize>(n * 4));
  f.read(reinterpret_cast<char*>(grid.weight.data()),
         static_cast<std::streamsize>(n * 4));
  std::vector<std::uint8_t> rgb(n * 3);
  f.read(reinterpret_cast<char*>(rgb.data()),
         static_cast<std::streamsize>(rgb.size()));
  if (!f) fail_tsdf(path, "truncated payload");
  for (std::size_t i = 0; i < n * 3; ++i)
    grid.color[i] = static_cast<float>(rgb[i]);
  return grid;
}

}  // namespace erpmvs
