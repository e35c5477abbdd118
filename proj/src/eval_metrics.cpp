#include "erpmvs/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace erpmvs {

namespace {

double coord(const Vec3& v, int axis) {
  return axis == 0 ? v.x : (axis == 1 ? v.y : v.z);
}

// Uniform double in [0, 1) from the top 53 bits of one engine draw, so the
// sample stream does not depend on the standard library's distribution.
double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

// ---------------------------------------------------------------------------
// Depth map metrics
// ---------------------------------------------------------------------------

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw std::invalid_argument("depth_metrics: size mismatch");
  double abs_sum = 0.0, rel_sum = 0.0, sq_sum = 0.0;
  std::int64_t n = 0, within = 0;
  for (int y = 0; y < gt.height; ++y) {
    for (int x = 0; x < gt.width; ++x) {
      if (!pred.is_valid(x, y) || !gt.is_valid(x, y)) continue;
      const double p = pred.at(x, y);
      const double g = gt.at(x, y);
      const double err = std::abs(p - g);
      abs_sum += err;
      rel_sum += err / g;
      sq_sum += (p - g) * (p - g);
      const double ratio = std::max(p / g, g / p);
      if (ratio < 1.25) ++within;
      ++n;
    }
  }
  if (n == 0)
    throw std::invalid_argument("depth_metrics: no jointly valid pixels");
  DepthMetrics m;
  const double dn = static_cast<double>(n);
  m.mae_cm = 100.0 * abs_sum / dn;
  m.mre_pct = 100.0 * rel_sum / dn;
  m.rmse_cm = 100.0 * std::sqrt(sq_sum / dn);
  m.delta1_pct = 100.0 * static_cast<double>(within) / dn;
  return m;
}

// ---------------------------------------------------------------------------
// Surface sampling
// ---------------------------------------------------------------------------

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, int n_samples,
                                 std::uint64_t seed) {
  if (mesh.face_count() == 0)
    throw std::invalid_argument("sample_surface: mesh has no faces");
  if (n_samples < 1)
    throw std::invalid_argument("sample_surface: need at least one sample");

  std::vector<double> cum(mesh.face_count());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const Vec3& a = mesh.vertices[static_cast<std::size_t>(mesh.faces[f][0])];
    const Vec3& b = mesh.vertices[static_cast<std::size_t>(mesh.faces[f][1])];
    const Vec3& c = mesh.vertices[static_cast<std::size_t>(mesh.faces[f][2])];
    total += 0.5 * (b - a).cross(c - a).norm();
    cum[f] = total;
  }
  if (!(total > 0.0))
    throw std::invalid_argument("sample_surface: mesh has zero area");

  std::mt19937_64 rng(seed);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    const double pick = unit_double(rng) * total;
    const std::size_t f = static_cast<std::size_t>(
        std::upper_bound(cum.begin(), cum.end(), pick) - cum.begin());
    const std::size_t fi = std::min(f, mesh.face_count() - 1);
    const Vec3& a = mesh.vertices[static_cast<std::size_t>(mesh.faces[fi][0])];
    const Vec3& b = mesh.vertices[static_cast<std::size_t>(mesh.faces[fi][1])];
    const Vec3& c = mesh.vertices[static_cast<std::size_t>(mesh.faces[fi][2])];
    const double sr = std::sqrt(unit_double(rng));
    const double r2 = unit_double(rng);
    out.push_back(a * (1.0 - sr) + b * (sr * (1.0 - r2)) + c * (sr * r2));
  }
  return out;
}

// ---------------------------------------------------------------------------
// k-d tree
// ---------------------------------------------------------------------------

PointKdTree::PointKdTree(std::vector<Vec3> points) {
  if (points.empty())
    throw std::invalid_argument("kd-tree: empty point set");
  points_ = std::move(points);
  order_.resize(points_.size());
  for (std::size_t i = 0; i < order_.size(); ++i)
    order_[i] = static_cast<int>(i);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<int>(points_.size()));
}

int PointKdTree::build(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[static_cast<std::size_t>(begin)];
  Vec3 hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    const Vec3& p = points_[static_cast<std::size_t>(i)];
    lo.x = std::min(lo.x, p.x); hi.x = std::max(hi.x, p.x);
    lo.y = std::min(lo.y, p.y); hi.y = std::max(hi.y, p.y);
    lo.z = std::min(lo.z, p.z); hi.z = std::max(hi.z, p.z);
  }
  const Vec3 ext = hi - lo;
  int axis = 0;
  if (ext.y > coord(ext, axis)) axis = 1;
  if (ext.z > coord(ext, axis)) axis = 2;

  const int mid = begin + (end - begin) / 2;
  // Keep the point order and the original-index map in lockstep.
  std::vector<int> idx(static_cast<std::size_t>(end - begin));
  for (int i = 0; i < end - begin; ++i) idx[static_cast<std::size_t>(i)] = begin + i;
  std::nth_element(idx.begin(), idx.begin() + (mid - begin), idx.end(),
                   [&](int a, int b) {
                     return coord(points_[static_cast<std::size_t>(a)], axis) <
                            coord(points_[static_cast<std::size_t>(b)], axis);
                   });
  std::vector<Vec3> tmp_p(static_cast<std::size_t>(end - begin));
  std::vector<int> tmp_o(static_cast<std::size_t>(end - begin));
  for (int i = 0; i < end - begin; ++i) {
    tmp_p[static_cast<std::size_t>(i)] = points_[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    tmp_o[static_cast<std::size_t>(i)] = order_[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
  }
  std::copy(tmp_p.begin(), tmp_p.end(), points_.begin() + begin);
  std::copy(tmp_o.begin(), tmp_o.end(), order_.begin() + begin);

  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split =
      coord(points_[static_cast<std::size_t>(mid)], axis);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void PointKdTree::search(int node_id, const Vec3& q, int& best,
                         double& best_d2) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const Vec3 d = points_[static_cast<std::size_t>(i)] - q;
      const double d2 = d.squared_norm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = order_[static_cast<std::size_t>(i)];
      }
    }
    return;
  }
  const double delta = coord(q, node.axis) - node.split;
  const int near = delta < 0.0 ? node.left : node.right;
  const int far = delta < 0.0 ? node.right : node.left;
  search(near, q, best, best_d2);
  if (delta * delta < best_d2) search(far, q, best, best_d2);
}

std::pair<int, double> PointKdTree::nearest(const Vec3& q) const {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  search(root_, q, best, best_d2);
  return {best, best_d2};
}

// ---------------------------------------------------------------------------
// Mesh metrics
// ---------------------------------------------------------------------------

MeshMetrics mesh_metrics(const TriangleMesh& pred, const TriangleMesh& gt,
                         double threshold_cm, int n_samples,
                         std::uint64_t seed) {
  if (pred.face_count() == 0 || gt.face_count() == 0)
    throw std::invalid_argument("mesh_metrics: empty mesh");
  if (!(threshold_cm > 0.0))
    throw std::invalid_argument("mesh_metrics: threshold must be positive");

  const std::vector<Vec3> pred_pts = sample_surface(pred, n_samples, seed);
  const std::vector<Vec3> gt_pts = sample_surface(gt, n_samples, seed);
  const PointKdTree pred_tree(pred_pts);
  const PointKdTree gt_tree(gt_pts);

  const auto directed = [threshold_cm](const std::vector<Vec3>& from,
                                       const PointKdTree& to) {
    double sum_cm = 0.0;
    std::int64_t hits = 0;
    for (const Vec3& p : from) {
      const double d_cm = 100.0 * std::sqrt(to.nearest(p).second);
      sum_cm += d_cm;
      if (d_cm <= threshold_cm) ++hits;
    }
    const double n = static_cast<double>(from.size());
    return std::pair<double, double>(sum_cm / n,
                                     100.0 * static_cast<double>(hits) / n);
  };

  const auto [acc_cm, precision] = directed(pred_pts, gt_tree);
  const auto [comp_cm, recall] = directed(gt_pts, pred_tree);

  MeshMetrics m;
  m.acc_cm = acc_cm;
  m.comp_cm = comp_cm;
  m.chamfer_cm = 0.5 * (acc_cm + comp_cm);
  m.fscore_pct = (precision + recall > 0.0)
                     ? 2.0 * precision * recall / (precision + recall)
                     : 0.0;
  m.threshold_cm = threshold_cm;
  return m;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

namespace {

struct LogDiffField {
  std::vector<double> value;  // log(pred) - log(gt) where both valid
  std::vector<bool> valid;
};

LogDiffField log_diff(const DepthMap& pred, const DepthMap& gt) {
  LogDiffField f;
  const std::size_t n =
      static_cast<std::size_t>(pred.width) * static_cast<std::size_t>(pred.height);
  f.value.assign(n, 0.0);
  f.valid.assign(n, false);
  for (int y = 0; y < pred.height; ++y)
    for (int x = 0; x < pred.width; ++x) {
      if (!pred.is_valid(x, y) || !gt.is_valid(x, y)) continue;
      const double p = pred.at(x, y);
      const double g = gt.at(x, y);
      if (!(p > 0.0) || !(g > 0.0)) continue;
      const std::size_t i =
          static_cast<std::size_t>(y) * static_cast<std::size_t>(pred.width) +
          static_cast<std::size_t>(x);
      f.value[i] = std::log(p) - std::log(g);
      f.valid[i] = true;
    }
  return f;
}

// Camera-frame unit ray through every pixel of the finest level.
std::vector<Vec3> pixel_rays(const ErpIntrinsics& intr) {
  std::vector<Vec3> rays(static_cast<std::size_t>(intr.width) *
                         static_cast<std::size_t>(intr.height));
  for (int y = 0; y < intr.height; ++y)
    for (int x = 0; x < intr.width; ++x) {
      const SphericalCoord s = unproject(
          PixelCoord{static_cast<double>(x), static_cast<double>(y)}, intr);
      rays[static_cast<std::size_t>(y) * static_cast<std::size_t>(intr.width) +
           static_cast<std::size_t>(x)] = spherical_to_cartesian(s, 1.0);
    }
  return rays;
}

// Unit normal from back-projected neighbor differences; false when the
// pixel, its east neighbor (wrapping), or its south neighbor is unusable.
bool surface_normal(const DepthMap& d, const std::vector<Vec3>& rays, int x,
                    int y, Vec3& out) {
  if (y + 1 >= d.height) return false;
  const int xe = (x + 1 == d.width) ? 0 : x + 1;
  if (!d.is_valid(x, y) || !d.is_valid(xe, y) || !d.is_valid(x, y + 1))
    return false;
  const std::size_t w = static_cast<std::size_t>(d.width);
  const std::size_t i0 = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
  const std::size_t ie = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(xe);
  const std::size_t is = (static_cast<std::size_t>(y) + 1) * w + static_cast<std::size_t>(x);
  const Vec3 p = rays[i0] * static_cast<double>(d.at(x, y));
  const Vec3 pe = rays[ie] * static_cast<double>(d.at(xe, y));
  const Vec3 ps = rays[is] * static_cast<double>(d.at(x, y + 1));
  const Vec3 n = (pe - p).cross(ps - p);
  const double len = n.norm();
  if (!(len > 1e-15)) return false;
  out = Vec3{n.x / len, n.y / len, n.z / len};
  return true;
}

constexpr double kOcclusionSlackMeters = 0.05;

}  // namespace

LossBreakdown losses(const std::vector<DepthMap>& pred_scales,
                     const std::vector<DepthMap>& gt_scales,
                     const std::vector<SourceView>& sources,
                     const Pose& ref_pose, const ErpIntrinsics& intr,
                     const LossWeights& weights) {
  if (pred_scales.empty() || pred_scales.size() != gt_scales.size())
    throw std::invalid_argument("losses: prediction/gt pyramids misaligned");
  if (pred_scales[0].width != intr.width || pred_scales[0].height != intr.height)
    throw std::invalid_argument("losses: intrinsics do not match the finest scale");
  for (std::size_t s = 0; s < pred_scales.size(); ++s) {
    if (pred_scales[s].width != gt_scales[s].width ||
        pred_scales[s].height != gt_scales[s].height)
      throw std::invalid_argument("losses: prediction/gt pyramids misaligned");
    if (s > 0 && (pred_scales[s].width * 2 != pred_scales[s - 1].width ||
                  pred_scales[s].height * 2 != pred_scales[s - 1].height))
      throw std::invalid_argument("losses: pyramid levels must halve in size");
  }
  if (!ref_pose.is_valid())
    throw std::invalid_argument("losses: reference pose is not a rigid transform");
  for (const SourceView& src : sources) {
    if (src.gt_depth.width != intr.width || src.gt_depth.height != intr.height)
      throw std::invalid_argument("losses: source depth does not match intrinsics");
    if (!src.pose.is_valid())
      throw std::invalid_argument("losses: source pose is not a rigid transform");
  }

  LossBreakdown out;

  // Depth and gradient terms: per-scale means, averaged across scales.
  double depth_acc = 0.0;
  double grad_acc = 0.0;
  for (std::size_t s = 0; s < pred_scales.size(); ++s) {
    const DepthMap& pred = pred_scales[s];
    const LogDiffField f = log_diff(pred, gt_scales[s]);

    double abs_sum = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < f.value.size(); ++i) {
      if (!f.valid[i]) continue;
      abs_sum += std::abs(f.value[i]);
      ++n;
    }
    if (n == 0)
      throw std::invalid_argument("losses: no jointly valid pixels at a scale");
    depth_acc += abs_sum / static_cast<double>(n);

    const std::size_t w = static_cast<std::size_t>(pred.width);
    double g_sum = 0.0;
    std::int64_t g_n = 0;
    for (int y = 0; y < pred.height; ++y)
      for (int x = 0; x < pred.width; ++x) {
        const std::size_t i =
            static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
        if (!f.valid[i]) continue;
        const std::size_t ie =
            static_cast<std::size_t>(y) * w +
            static_cast<std::size_t>((x + 1 == pred.width) ? 0 : x + 1);
        if (f.valid[ie]) {
          g_sum += std::abs(f.value[ie] - f.value[i]);
          ++g_n;
        }
        if (y + 1 < pred.height && f.valid[i + w]) {
          g_sum += std::abs(f.value[i + w] - f.value[i]);
          ++g_n;
        }
      }
    if (g_n > 0) grad_acc += g_sum / static_cast<double>(g_n);
  }
  const double n_scales = static_cast<double>(pred_scales.size());
  out.depth = depth_acc / n_scales;
  out.grad = grad_acc / n_scales;

  // Normal term at the finest scale.
  const std::vector<Vec3> rays = pixel_rays(intr);
  {
    const DepthMap& pred = pred_scales[0];
    const DepthMap& gt = gt_scales[0];
    double n_sum = 0.0;
    std::int64_t n_n = 0;
    for (int y = 0; y + 1 < intr.height; ++y)
      for (int x = 0; x < intr.width; ++x) {
        Vec3 np, ng;
        if (!surface_normal(pred, rays, x, y, np)) continue;
        if (!surface_normal(gt, rays, x, y, ng)) continue;
        // The dot of two unit vectors can exceed 1 by an ulp when they
        // coincide; keep the contribution nonnegative.
        n_sum += std::max(0.0, 1.0 - np.dot(ng));
        ++n_n;
      }
    if (n_n > 0) out.normals = n_sum / static_cast<double>(n_n);
  }

  // Multi-view term: warp the finest prediction into each source and compare
  // radial log-depths against the source ground truth.
  {
    const DepthMap& pred = pred_scales[0];
    double src_mean_sum = 0.0;
    int src_used = 0;
    for (const SourceView& src : sources) {
      const RelativeTransform rel = relative_transform(ref_pose, src.pose);
      double sum = 0.0;
      std::int64_t n = 0;
      for (int y = 0; y < intr.height; ++y)
        for (int x = 0; x < intr.width; ++x) {
          if (!pred.is_valid(x, y)) continue;
          const double d = pred.at(x, y);
          if (!(d > 0.0)) continue;
          const std::size_t i =
              static_cast<std::size_t>(y) * static_cast<std::size_t>(intr.width) +
              static_cast<std::size_t>(x);
          const Vec3 ray = rays[i];
          const Vec3 p_src =
              rel.apply(Vec3{ray.x * d, ray.y * d, ray.z * d});
          const double r_s = p_src.norm();
          if (r_s < 1e-12) continue;
          const auto [sph, radius] = cartesian_to_spherical(p_src);
          const PixelCoord pix = project(sph, intr);
          int px = static_cast<int>(std::lround(pix.u));
          if (px >= intr.width) px -= intr.width;
          if (px < 0) px += intr.width;
          const int py = std::clamp(static_cast<int>(std::lround(pix.v)), 0,
                                    intr.height - 1);
          if (!src.gt_depth.is_valid(px, py)) continue;
          const double g_s = src.gt_depth.at(px, py);
          if (!(g_s > 0.0)) continue;
          if (radius - g_s > kOcclusionSlackMeters) continue;  // occluded
          sum += std::abs(std::log(radius) - std::log(g_s));
          ++n;
        }
      if (n > 0) {
        src_mean_sum += sum / static_cast<double>(n);
        ++src_used;
      }
    }
    if (src_used > 0) out.mv = src_mean_sum / static_cast<double>(src_used);
  }

  out.total = out.depth + weights.grad * out.grad +
              weights.normals * out.normals + weights.mv * out.mv;
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

void append_kv(std::string& s, const char* key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  s += key;
  s += '=';
  s += buf;
  s += '\n';
}

}  // namespace

std::string report_json(const std::optional<DepthMetrics>& depth,
                        const std::optional<MeshMetrics>& mesh) {
  nlohmann::json j = nlohmann::json::object();
  if (depth) {
    j["mae_cm"] = depth->mae_cm;
    j["mre_pct"] = depth->mre_pct;
    j["rmse_cm"] = depth->rmse_cm;
    j["delta1_pct"] = depth->delta1_pct;
  }
  if (mesh) {
    j["comp_cm"] = mesh->comp_cm;
    j["acc_cm"] = mesh->acc_cm;
    j["chamfer_cm"] = mesh->chamfer_cm;
    j["fscore_pct"] = mesh->fscore_pct;
  }
  return j.dump(2) + "\n";
}

std::string report_text(const std::optional<DepthMetrics>& depth,
                        const std::optional<MeshMetrics>& mesh) {
  std::string s;
  if (depth) {
    append_kv(s, "mae_cm", depth->mae_cm);
    append_kv(s, "mre_pct", depth->mre_pct);
    append_kv(s, "rmse_cm", depth->rmse_cm);
    append_kv(s, "delta1_pct", depth->delta1_pct);
  }
  if (mesh) {
    append_kv(s, "comp_cm", mesh->comp_cm);
    append_kv(s, "acc_cm", mesh->acc_cm);
    append_kv(s, "chamfer_cm", mesh->chamfer_cm);
    append_kv(s, "fscore_pct", mesh->fscore_pct);
  }
  return s;
}

}  // namespace erpmvs
