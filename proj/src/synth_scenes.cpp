#include "erpmvs/synth_scenes.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "erpmvs/parallel.hpp"

namespace erpmvs {
namespace {

constexpr double kRayEps = 1e-9;

// Slab intersection; returns (t_enter, t_exit) or nothing if the ray misses.
std::optional<std::pair<double, double>> slab_hit(const Vec3& lo,
                                                  const Vec3& hi,
                                                  const Vec3& o,
                                                  const Vec3& dir) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  const double ov[3] = {o.x, o.y, o.z};
  const double dv[3] = {dir.x, dir.y, dir.z};
  const double lov[3] = {lo.x, lo.y, lo.z};
  const double hiv[3] = {hi.x, hi.y, hi.z};
  for (int a = 0; a < 3; ++a) {
    if (dv[a] == 0.0) {
      if (ov[a] < lov[a] || ov[a] > hiv[a]) return std::nullopt;
      continue;
    }
    double ta = (lov[a] - ov[a]) / dv[a];
    double tb = (hiv[a] - ov[a]) / dv[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

bool inside_box(const Vec3& lo, const Vec3& hi, const Vec3& p, double margin) {
  return p.x > lo.x + margin && p.x < hi.x - margin && p.y > lo.y + margin &&
         p.y < hi.y - margin && p.z > lo.z + margin && p.z < hi.z - margin;
}

void check_free_space(const SceneSpec& spec, const Vec3& c) {
  constexpr double kMargin = 1e-6;
  for (const Primitive& prim : spec.primitives) {
    const Vec3 half{prim.size.x / 2, prim.size.y / 2, prim.size.z / 2};
    const Vec3 lo = prim.center - half;
    const Vec3 hi = prim.center + half;
    switch (prim.kind) {
      case Primitive::Kind::kRoom:
        if (!inside_box(lo, hi, c, kMargin))
          throw std::invalid_argument("camera center outside a room");
        break;
      case Primitive::Kind::kBox:
        if (inside_box(lo, hi, c, -kMargin))
          throw std::invalid_argument("camera center inside a solid box");
        break;
      case Primitive::Kind::kSphere:
        if ((c - prim.center).norm() < prim.radius + kMargin)
          throw std::invalid_argument("camera center inside a sphere");
        break;
    }
  }
}

// --- mesh construction -----------------------------------------------------

void add_vertex(TriangleMesh& mesh, const Vec3& p, const Texture& tex) {
  mesh.vertices.push_back(p);
  const Vec3 c = tex.eval(p);
  auto q = [](double v) {
    double s = std::lround(std::min(1.0, std::max(0.0, v)) * 255.0);
    return static_cast<std::uint8_t>(s);
  };
  mesh.colors.push_back({q(c.x), q(c.y), q(c.z)});
}

// Box faces as quads with outward CCW winding (right-handed, y up being -y
// in camera convention does not matter here: winding is purely geometric).
void add_box(TriangleMesh& mesh, const Primitive& prim, bool inward) {
  const Vec3 half{prim.size.x / 2, prim.size.y / 2, prim.size.z / 2};
  const Vec3 lo = prim.center - half;
  const Vec3 hi = prim.center + half;
  const Vec3 corners[8] = {
      {lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z},
      {lo.x, hi.y, lo.z}, {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z},
      {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
  // quads with outward winding (CCW seen from outside)
  static const int quads[6][4] = {
      {0, 3, 2, 1},  // z = lo (back)
      {4, 5, 6, 7},  // z = hi (front)
      {0, 4, 7, 3},  // x = lo
      {1, 2, 6, 5},  // x = hi
      {0, 1, 5, 4},  // y = lo
      {3, 7, 6, 2}   // y = hi
  };
  const int base = static_cast<int>(mesh.vertices.size());
  for (const Vec3& c : corners) add_vertex(mesh, c, prim.texture);
  for (const auto& q : quads) {
    int a = q[0], b = q[1], c = q[2], d = q[3];
    if (inward) std::swap(b, d);
    mesh.faces.push_back({base + a, base + b, base + c});
    mesh.faces.push_back({base + a, base + c, base + d});
  }
}

void add_icosphere(TriangleMesh& mesh, const Primitive& prim, int subdiv) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : verts) v = v.normalized();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdiv; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 m = Vec3{(verts[static_cast<std::size_t>(a)].x +
                     verts[static_cast<std::size_t>(b)].x) /
                        2,
                    (verts[static_cast<std::size_t>(a)].y +
                     verts[static_cast<std::size_t>(b)].y) /
                        2,
                    (verts[static_cast<std::size_t>(a)].z +
                     verts[static_cast<std::size_t>(b)].z) /
                        2}
                  .normalized();
      int idx = static_cast<int>(verts.size());
      verts.push_back(m);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces.swap(next);
  }
  const int base = static_cast<int>(mesh.vertices.size());
  for (const Vec3& v : verts) {
    const Vec3 p = prim.center + Vec3{v.x * prim.radius, v.y * prim.radius,
                                      v.z * prim.radius};
    add_vertex(mesh, p, prim.texture);
  }
  for (const auto& f : faces)
    mesh.faces.push_back({base + f[0], base + f[1], base + f[2]});
}

}  // namespace

Vec3 Texture::eval(const Vec3& p) const {
  switch (kind) {
    case Kind::kSolid:
      return color_a;
    case Kind::kChecker: {
      const long long parity = static_cast<long long>(std::floor(p.x / scale)) +
                               static_cast<long long>(std::floor(p.y / scale)) +
                               static_cast<long long>(std::floor(p.z / scale));
      return (parity % 2 == 0) ? color_a : color_b;
    }
    case Kind::kGradient: {
      const double t =
          0.5 * (1.0 + std::sin(2.0 * kPi * (p.x + p.y + p.z) / (3.0 * scale)));
      return Vec3{color_a.x + (color_b.x - color_a.x) * t,
                  color_a.y + (color_b.y - color_a.y) * t,
                  color_a.z + (color_b.z - color_a.z) * t};
    }
  }
  return color_a;
}

std::optional<double> trace_primitive(const Primitive& prim, const Vec3& o,
                                      const Vec3& dir) {
  switch (prim.kind) {
    case Primitive::Kind::kRoom:
    case Primitive::Kind::kBox: {
      const Vec3 half{prim.size.x / 2, prim.size.y / 2, prim.size.z / 2};
      const auto hit = slab_hit(prim.center - half, prim.center + half, o, dir);
      if (!hit) return std::nullopt;
      const auto [t0, t1] = *hit;
      if (prim.kind == Primitive::Kind::kRoom) {
        // enclosure: the surface is seen from inside, at the exit point
        return t1 > kRayEps ? std::optional<double>(t1) : std::nullopt;
      }
      return t0 > kRayEps ? std::optional<double>(t0) : std::nullopt;
    }
    case Primitive::Kind::kSphere: {
      const Vec3 oc = o - prim.center;
      const double b = dir.dot(oc);
      const double c = oc.dot(oc) - prim.radius * prim.radius;
      const double disc = b * b - c;
      if (disc < 0.0) return std::nullopt;
      const double s = std::sqrt(disc);
      const double t_near = -b - s;
      if (t_near > kRayEps) return t_near;
      const double t_far = -b + s;
      if (t_far > kRayEps) return t_far;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

RenderResult render_view(const SceneSpec& spec, int index, int threads) {
  if (index < 0 || static_cast<std::size_t>(index) >= spec.cameras.size())
    throw std::invalid_argument("camera index out of range");
  if (spec.primitives.empty())
    throw std::invalid_argument("scene has no primitives");
  const ErpIntrinsics intr = spec.intrinsics();
  const Pose& pose = spec.cameras[static_cast<std::size_t>(index)];
  const Vec3 origin = pose.camera_center();
  check_free_space(spec, origin);
  const Mat3 cam_to_world = pose.rotation.transposed();

  RenderResult out;
  out.image = Image(intr.width, intr.height, 3);
  out.depth = DepthMap(intr.width, intr.height);

  parallel_for_chunks(0, intr.height, 16, threads, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < intr.width; ++x) {
        const SphericalCoord sph = unproject(
            PixelCoord{static_cast<double>(x), static_cast<double>(y)}, intr);
        const Vec3 dir = cam_to_world * spherical_to_cartesian(sph, 1.0);
        double best = std::numeric_limits<double>::infinity();
        const Primitive* hit = nullptr;
        for (const Primitive& prim : spec.primitives) {
          const auto t = trace_primitive(prim, origin, dir);
          if (t && *t < best) {
            best = *t;
            hit = &prim;
          }
        }
        if (hit == nullptr) {
          out.depth.set_invalid(x, y);
          continue;
        }
        out.depth.set(x, y, static_cast<float>(best));
        const Vec3 p = origin + Vec3{dir.x * best, dir.y * best, dir.z * best};
        const Vec3 c = hit->texture.eval(p);
        float* px = out.image.pixel(x, y);
        px[0] = static_cast<float>(std::min(1.0, std::max(0.0, c.x)));
        px[1] = static_cast<float>(std::min(1.0, std::max(0.0, c.y)));
        px[2] = static_cast<float>(std::min(1.0, std::max(0.0, c.z)));
      }
  });
  return out;
}

TriangleMesh scene_mesh(const SceneSpec& spec, int sphere_subdiv) {
  if (sphere_subdiv < 0 || sphere_subdiv > 7)
    throw std::invalid_argument("sphere subdivision out of range");
  TriangleMesh mesh;
  for (const Primitive& prim : spec.primitives) {
    switch (prim.kind) {
      case Primitive::Kind::kRoom:
        add_box(mesh, prim, /*inward=*/true);
        break;
      case Primitive::Kind::kBox:
        add_box(mesh, prim, /*inward=*/false);
        break;
      case Primitive::Kind::kSphere:
        add_icosphere(mesh, prim, sphere_subdiv);
        break;
    }
  }
  return mesh;
}

}  // namespace erpmvs
