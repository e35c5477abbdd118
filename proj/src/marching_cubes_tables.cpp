#include "erpmvs/marching_cubes_tables.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <vector>

namespace erpmvs {

namespace {

using Pt = std::array<double, 3>;

Pt corner_pos(int c) {
  return {static_cast<double>(c & 1), static_cast<double>((c >> 1) & 1),
          static_cast<double>((c >> 2) & 1)};
}

Pt edge_mid(int e) {
  const Pt a = corner_pos(kCubeEdgeCorners[e][0]);
  const Pt b = corner_pos(kCubeEdgeCorners[e][1]);
  return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
}

Pt sub(const Pt& a, const Pt& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Pt cross(const Pt& a, const Pt& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

double dot(const Pt& a, const Pt& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

int edge_between(int c0, int c1) {
  for (int e = 0; e < 12; ++e) {
    if ((kCubeEdgeCorners[e][0] == c0 && kCubeEdgeCorners[e][1] == c1) ||
        (kCubeEdgeCorners[e][0] == c1 && kCubeEdgeCorners[e][1] == c0)) {
      return e;
    }
  }
  throw std::logic_error("corners are not cube neighbors");
}

// The four corners of the face with normal along `axis`, on side `side`,
// listed counterclockwise as seen from outside the cube.
std::array<int, 4> face_cycle(int axis, int side) {
  const int u = (axis == 0) ? 1 : 0;
  const int v = (axis == 2) ? 1 : 2;
  static constexpr int kUv[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::array<int, 4> cyc{};
  for (int k = 0; k < 4; ++k) {
    cyc[k] = (kUv[k][0] << u) | (kUv[k][1] << v) | (side << axis);
  }
  // The (u,v) square above runs counterclockwise around +axis exactly when
  // (u, v, axis) is an even permutation of (0, 1, 2); flip as needed so the
  // cycle is counterclockwise around the outward normal.
  const bool ccw_around_plus = (axis != 1);
  const bool want_plus = (side == 1);
  if (ccw_around_plus != want_plus) std::swap(cyc[1], cyc[3]);
  return cyc;
}

// One directed boundary segment of the inside region on a single face,
// running from the cut on `from_edge` to the cut on `to_edge`.
struct Arc {
  int from_edge;
  int to_edge;
};

// Orients p->q so that `inside_corner` lies to the left when the face is
// viewed from outside (outward normal `n`).
Arc oriented_arc(int e0, int e1, const Pt& n, int inside_corner) {
  const Pt p = edge_mid(e0);
  const Pt q = edge_mid(e1);
  const Pt left = cross(n, sub(q, p));
  if (dot(sub(corner_pos(inside_corner), p), left) > 0.0) return {e0, e1};
  return {e1, e0};
}

void build_config(int config, std::array<std::int8_t, 16>& tris,
                  std::uint16_t& edge_mask) {
  const auto inside = [config](int c) { return ((config >> c) & 1) != 0; };

  edge_mask = 0;
  for (int e = 0; e < 12; ++e) {
    if (inside(kCubeEdgeCorners[e][0]) != inside(kCubeEdgeCorners[e][1])) {
      edge_mask = static_cast<std::uint16_t>(edge_mask | (1u << e));
    }
  }

  std::vector<Arc> arcs;
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const std::array<int, 4> cyc = face_cycle(axis, side);
      Pt n{0.0, 0.0, 0.0};
      n[axis] = (side == 1) ? 1.0 : -1.0;

      std::array<int, 4> fe{};   // cube edge id of face edge k
      std::array<bool, 4> cut{};
      int n_cut = 0;
      for (int k = 0; k < 4; ++k) {
        fe[k] = edge_between(cyc[k], cyc[(k + 1) % 4]);
        cut[k] = inside(cyc[k]) != inside(cyc[(k + 1) % 4]);
        n_cut += cut[k] ? 1 : 0;
      }

      if (n_cut == 2) {
        int a = -1;
        int b = -1;
        for (int k = 0; k < 4; ++k) {
          if (!cut[k]) continue;
          (a < 0 ? a : b) = k;
        }
        int ref = -1;  // any inside corner of this face
        for (int k = 0; k < 4 && ref < 0; ++k) {
          if (inside(cyc[k])) ref = cyc[k];
        }
        arcs.push_back(oriented_arc(fe[a], fe[b], n, ref));
      } else if (n_cut == 4) {
        // Signs alternate around the face; cut so that each inside corner
        // is hugged by its own segment, keeping the inside corners apart.
        for (int k = 0; k < 4; ++k) {
          if (!inside(cyc[k])) continue;
          arcs.push_back(oriented_arc(fe[(k + 3) % 4], fe[k], n, cyc[k]));
        }
      }
    }
  }

  std::array<int, 12> next{};
  std::array<int, 12> in_deg{};
  next.fill(-1);
  in_deg.fill(0);
  for (const Arc& a : arcs) {
    if (next[a.from_edge] != -1) throw std::logic_error("duplicate arc source");
    next[a.from_edge] = a.to_edge;
    ++in_deg[a.to_edge];
  }
  for (int e = 0; e < 12; ++e) {
    const bool is_cut = (edge_mask >> e) & 1u;
    if (is_cut != (next[e] != -1) || in_deg[e] != (is_cut ? 1 : 0)) {
      throw std::logic_error("cut boundary is not a disjoint union of cycles");
    }
  }

  tris.fill(-1);
  int out = 0;
  std::array<bool, 12> seen{};
  for (int start = 0; start < 12; ++start) {
    if (next[start] == -1 || seen[start]) continue;
    std::vector<int> loop;
    int e = start;
    do {
      loop.push_back(e);
      seen[e] = true;
      e = next[e];
    } while (e != start);
    if (loop.size() < 3) throw std::logic_error("degenerate cut loop");
    for (std::size_t i = 1; i + 1 < loop.size(); ++i) {
      if (out + 3 > 15) throw std::logic_error("more than five triangles");
      tris[out++] = static_cast<std::int8_t>(loop[0]);
      tris[out++] = static_cast<std::int8_t>(loop[i]);
      tris[out++] = static_cast<std::int8_t>(loop[i + 1]);
    }
  }
}

McTables build_tables() {
  McTables t{};
  for (int config = 0; config < 256; ++config) {
    build_config(config, t.tris[config], t.edge_mask[config]);
  }

  // Fix the global winding so triangles face the outside (the free-space
  // side). With only corner 0 inside, the single triangle must point away
  // from the origin.
  const auto& probe = t.tris[1];
  const Pt a = edge_mid(probe[0]);
  const Pt b = edge_mid(probe[1]);
  const Pt c = edge_mid(probe[2]);
  if (dot(cross(sub(b, a), sub(c, a)), Pt{1.0, 1.0, 1.0}) < 0.0) {
    for (auto& row : t.tris) {
      for (int i = 0; i + 2 < 16; i += 3) {
        if (row[i] < 0) break;
        std::swap(row[i + 1], row[i + 2]);
      }
    }
  }
  return t;
}

}  // namespace

const McTables& mc_tables() {
  static const McTables tables = build_tables();
  return tables;
}

}  // namespace erpmvs
