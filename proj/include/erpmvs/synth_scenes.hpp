#pragma once

#include <optional>
#include <string>
#include <vector>

#include "erpmvs/geometry.hpp"
#include "erpmvs/image.hpp"
#include "erpmvs/mesh.hpp"

namespace erpmvs {

// Procedural flat-shaded surface color, evaluated at world positions.
struct Texture {
  enum class Kind { kSolid, kChecker, kGradient };
  Kind kind = Kind::kSolid;
  double scale = 0.25;           // checker cell edge / gradient period scale
  Vec3 color_a{0.8, 0.8, 0.8};   // solid color, or first checker color
  Vec3 color_b{0.2, 0.2, 0.2};

  Vec3 eval(const Vec3& p) const;
};

// Axis-aligned scene element. `size` holds full edge lengths for boxes and
// rooms (a room is a box seen from inside); spheres use `radius`.
struct Primitive {
  enum class Kind { kRoom, kBox, kSphere };
  Kind kind = Kind::kBox;
  Vec3 center{0, 0, 0};
  Vec3 size{1, 1, 1};
  double radius = 0.5;
  Texture texture;
};

struct SceneSpec {
  int width = 512;
  int height = 256;
  std::vector<Primitive> primitives;
  std::vector<Pose> cameras;  // world-to-camera

  ErpIntrinsics intrinsics() const { return ErpIntrinsics(width, height); }
};

// Closest hit along o + t*dir for t > 1e-9. Returns the hit distance (which
// is the radial depth for unit directions) or nothing.
std::optional<double> trace_primitive(const Primitive& prim, const Vec3& o,
                                      const Vec3& dir);

struct RenderResult {
  Image image;      // RGB in [0,1]
  DepthMap depth;   // radial ground-truth depth, invalid where no surface
};

// Renders camera `index` by tracing one ray through every pixel center.
// Throws if the camera center is not in free space (inside every room,
// outside every solid) or the index is out of range.
RenderResult render_view(const SceneSpec& spec, int index, int threads = 1);

// Exact scene surface as a colored triangle mesh: rooms wound inward, boxes
// and icosphere approximations of spheres wound outward.
TriangleMesh scene_mesh(const SceneSpec& spec, int sphere_subdiv = 4);

}  // namespace erpmvs
