#include "erpmvs/sweep_volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "erpmvs/parallel.hpp"

namespace erpmvs {
namespace {

constexpr double kMinSourceRadius = 1e-9;  // meters; below this the warp
                                           // direction is undefined

// Scales a unit view ray to a hypothesized radius. Kept as the single
// definition so the batched sweep and the per-call warp share one float
// history.
inline Vec3 scale_ray(const Vec3& ray, double r) {
  return Vec3{ray.x * r, ray.y * r, ray.z * r};
}

// Warps into `out` (feature_dim floats); returns the validity flag.
inline bool warp_into(const Vec3& unit_ray, double radial_depth,
                      const RelativeTransform& ref_to_src,
                      const ErpIntrinsics& intr, const Image& src_feat,
                      float* out) {
  const Vec3 p_src = ref_to_src.apply(scale_ray(unit_ray, radial_depth));
  if (p_src.norm() < kMinSourceRadius) {
    std::fill(out, out + src_feat.channels, 0.0f);
    return false;
  }
  const auto [sph, r_src] = cartesian_to_spherical(p_src);
  (void)r_src;
  const PixelCoord p = project(sph, intr);
  bilinear_sample_wrap(src_feat, p.u, p.v, out);
  return true;
}

// Fills one cost vector (channels() floats). Layout and float evaluation
// order are the contract the brute-force oracle tests pin down.
inline bool fill_cost_vector(const Vec3& unit_ray, double radial_depth,
                             const float* ref_px,
                             const std::vector<RelativeTransform>& transforms,
                             const std::vector<const Image*>& src_feats,
                             const ErpIntrinsics& intr, int feature_dim,
                             float* out) {
  const int n = static_cast<int>(src_feats.size());
  std::memcpy(out, ref_px, static_cast<std::size_t>(feature_dim) * 4);
  bool valid = true;
  for (int i = 0; i < n; ++i) {
    float* dst = out + static_cast<std::size_t>(i + 1) * feature_dim;
    if (!warp_into(unit_ray, radial_depth, transforms[static_cast<std::size_t>(i)],
                   intr, *src_feats[static_cast<std::size_t>(i)], dst))
      valid = false;
  }
  float* dots = out + static_cast<std::size_t>(n + 1) * feature_dim;
  for (int i = 0; i < n; ++i) {
    const float* src = out + static_cast<std::size_t>(i + 1) * feature_dim;
    float acc = 0.0f;
    for (int c = 0; c < feature_dim; ++c) acc += out[c] * src[c];
    dots[i] = acc;
  }
  return valid;
}

// Score of one cost vector under the chosen reducer, in double for the
// softmax that follows.
class CellScorer {
 public:
  CellScorer(const CostReducer& reducer, int feature_dim, int n_sources)
      : reducer_(reducer), feature_dim_(feature_dim), n_sources_(n_sources) {
    if (reducer_.kind == CostReducer::Kind::kMlp) {
      if (reducer_.mlp == nullptr)
        throw std::invalid_argument("learned reducer needs weights");
      const int channels = (n_sources_ + 1) * feature_dim_ + n_sources_;
      reducer_.mlp->validate(channels);
      std::size_t widest = static_cast<std::size_t>(channels);
      for (const MlpLayer& l : reducer_.mlp->layers)
        widest = std::max(widest, static_cast<std::size_t>(l.rows));
      cur_.resize(widest);
      next_.resize(widest);
    }
  }

  double operator()(const float* cost_vec) {
    if (reducer_.kind == CostReducer::Kind::kClassical) {
      const float* dots =
          cost_vec + static_cast<std::size_t>(n_sources_ + 1) * feature_dim_;
      double acc = 0.0;
      for (int i = 0; i < n_sources_; ++i) acc += static_cast<double>(dots[i]);
      return acc / n_sources_;
    }
    // same sequential float arithmetic as mlp_forward
    int dim = (n_sources_ + 1) * feature_dim_ + n_sources_;
    std::copy(cost_vec, cost_vec + dim, cur_.begin());
    for (const MlpLayer& layer : reducer_.mlp->layers) {
      for (int r = 0; r < layer.rows; ++r) {
        const float* wrow =
            &layer.weights[static_cast<std::size_t>(r) * layer.cols];
        float acc = layer.bias[static_cast<std::size_t>(r)];
        for (int c = 0; c < layer.cols; ++c)
          acc += wrow[c] * cur_[static_cast<std::size_t>(c)];
        if (layer.activation == MlpLayer::Activation::kRelu && acc < 0.0f)
          acc = 0.0f;
        next_[static_cast<std::size_t>(r)] = acc;
      }
      cur_.swap(next_);
      dim = layer.rows;
    }
    return static_cast<double>(cur_[0]);
  }

 private:
  CostReducer reducer_;
  int feature_dim_;
  int n_sources_;
  std::vector<float> cur_, next_;
};

// Softmax over the depth dimension of one pixel. scores/valid have D
// entries; writes D probabilities. Returns false when nothing was valid.
inline bool softmax_depth(const double* scores, const std::uint8_t* valid,
                          int planes, float* prob, std::size_t stride) {
  double best = 0.0;
  bool any = false;
  for (int d = 0; d < planes; ++d)
    if (valid[d] && (!any || scores[d] > best)) {
      best = scores[d];
      any = true;
    }
  if (!any) {
    const float uniform = 1.0f / static_cast<float>(planes);
    for (int d = 0; d < planes; ++d) prob[static_cast<std::size_t>(d) * stride] = uniform;
    return false;
  }
  double sum = 0.0;
  for (int d = 0; d < planes; ++d)
    if (valid[d]) sum += std::exp(scores[d] - best);
  for (int d = 0; d < planes; ++d)
    prob[static_cast<std::size_t>(d) * stride] =
        valid[d] ? static_cast<float>(std::exp(scores[d] - best) / sum) : 0.0f;
  return true;
}

struct SweepSetup {
  std::vector<const Image*> src_feats;
  std::vector<RelativeTransform> transforms;
  std::vector<Vec3> rays;  // unit view rays, one per reference pixel
  int feature_dim = 0;
  int n_sources = 0;
};

SweepSetup prepare_sweep(const Image& ref_feat, const Pose& ref_pose,
                         const std::vector<Image>& src_feats,
                         const std::vector<Pose>& src_poses,
                         const DepthHypotheses& hyps,
                         const ErpIntrinsics& intr) {
  if (src_feats.empty())
    throw std::invalid_argument("sweep needs at least one source view");
  if (src_feats.size() != src_poses.size())
    throw std::invalid_argument("source feature/pose counts differ");
  if (ref_feat.width != intr.width || ref_feat.height != intr.height)
    throw std::invalid_argument("reference features do not match intrinsics");
  for (const Image& f : src_feats)
    if (!f.same_shape(ref_feat))
      throw std::invalid_argument("feature map shapes differ");
  if (hyps.count() < 2)
    throw std::invalid_argument("need at least two depth hypotheses");

  SweepSetup s;
  s.feature_dim = ref_feat.channels;
  s.n_sources = static_cast<int>(src_feats.size());
  s.src_feats.reserve(src_feats.size());
  for (const Image& f : src_feats) s.src_feats.push_back(&f);
  s.transforms.reserve(src_poses.size());
  for (const Pose& p : src_poses)
    s.transforms.push_back(relative_transform(ref_pose, p));
  s.rays.resize(static_cast<std::size_t>(intr.width) * intr.height);
  for (int y = 0; y < intr.height; ++y)
    for (int x = 0; x < intr.width; ++x) {
      const SphericalCoord sph = unproject(
          PixelCoord{static_cast<double>(x), static_cast<double>(y)}, intr);
      s.rays[static_cast<std::size_t>(y) * intr.width + x] =
          spherical_to_cartesian(sph, 1.0);
    }
  return s;
}

}  // namespace

DepthHypotheses make_hypotheses(double d_min, double d_max, int count) {
  if (!(d_min > 0.0) || !(d_max > d_min))
    throw std::invalid_argument("need 0 < d_min < d_max");
  if (count < 2) throw std::invalid_argument("need at least two hypotheses");
  DepthHypotheses h;
  h.values.resize(static_cast<std::size_t>(count));
  const double log_min = std::log(d_min);
  const double log_max = std::log(d_max);
  for (int i = 0; i < count; ++i)
    h.values[static_cast<std::size_t>(i)] =
        std::exp(log_min + (static_cast<double>(i) / (count - 1)) *
                               (log_max - log_min));
  h.values.front() = d_min;  // endpoints exact, immune to exp/log rounding
  h.values.back() = d_max;
  return h;
}

WarpResult warp_feature(const PixelCoord& ref_pixel, double radial_depth,
                        const Pose& ref_pose, const Pose& src_pose,
                        const ErpIntrinsics& intr, const Image& src_feat) {
  if (src_feat.width != intr.width || src_feat.height != intr.height)
    throw std::invalid_argument("source features do not match intrinsics");
  if (!(radial_depth > 0.0))
    throw std::invalid_argument("radial depth must be positive");
  const SphericalCoord sph = unproject(ref_pixel, intr);
  const Vec3 ray = spherical_to_cartesian(sph, 1.0);
  const RelativeTransform rt = relative_transform(ref_pose, src_pose);
  WarpResult result;
  result.feature.resize(static_cast<std::size_t>(src_feat.channels));
  result.valid =
      warp_into(ray, radial_depth, rt, intr, src_feat, result.feature.data());
  return result;
}

CostVolume build_cost_volume(const Image& ref_feat, const Pose& ref_pose,
                             const std::vector<Image>& src_feats,
                             const std::vector<Pose>& src_poses,
                             const DepthHypotheses& hyps,
                             const ErpIntrinsics& intr, int threads) {
  SweepSetup s =
      prepare_sweep(ref_feat, ref_pose, src_feats, src_poses, hyps, intr);
  CostVolume cv;
  cv.planes = hyps.count();
  cv.width = intr.width;
  cv.height = intr.height;
  cv.feature_dim = s.feature_dim;
  cv.n_sources = s.n_sources;
  const int channels = cv.channels();
  cv.data.resize(static_cast<std::size_t>(cv.planes) * cv.height * cv.width *
                 channels);
  cv.valid.resize(static_cast<std::size_t>(cv.planes) * cv.height * cv.width);

  parallel_for_chunks(0, cv.height, 8, threads, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y)
      for (int d = 0; d < cv.planes; ++d)
        for (int x = 0; x < cv.width; ++x) {
          const std::size_t cell = cv.cell(d, x, y);
          const bool ok = fill_cost_vector(
              s.rays[static_cast<std::size_t>(y) * cv.width + x],
              hyps.values[static_cast<std::size_t>(d)], ref_feat.pixel(x, y),
              s.transforms, s.src_feats, intr, s.feature_dim,
              &cv.data[cell * channels]);
          cv.valid[cell] = ok ? 1 : 0;
        }
  });
  return cv;
}

ProbabilityVolume reduce_volume(const CostVolume& volume,
                                const CostReducer& reducer, int threads) {
  ProbabilityVolume pv;
  pv.planes = volume.planes;
  pv.width = volume.width;
  pv.height = volume.height;
  pv.data.resize(static_cast<std::size_t>(pv.planes) * pv.height * pv.width);
  pv.pixel_valid.resize(static_cast<std::size_t>(pv.height) * pv.width);

  parallel_for_chunks(0, volume.height, 8, threads, [&](int y0, int y1) {
    CellScorer score(reducer, volume.feature_dim, volume.n_sources);
    std::vector<double> scores(static_cast<std::size_t>(volume.planes));
    std::vector<std::uint8_t> valid(static_cast<std::size_t>(volume.planes));
    const std::size_t plane_stride =
        static_cast<std::size_t>(pv.height) * pv.width;
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < volume.width; ++x) {
        for (int d = 0; d < volume.planes; ++d) {
          scores[static_cast<std::size_t>(d)] = score(volume.at(d, x, y));
          valid[static_cast<std::size_t>(d)] =
              volume.is_valid(d, x, y) ? 1 : 0;
        }
        const bool any = softmax_depth(
            scores.data(), valid.data(), volume.planes,
            &pv.data[static_cast<std::size_t>(y) * pv.width + x], plane_stride);
        pv.pixel_valid[static_cast<std::size_t>(y) * pv.width + x] = any ? 1 : 0;
      }
  });
  return pv;
}

DepthMap extract_depth(const ProbabilityVolume& prob,
                       const DepthHypotheses& hyps, DepthMode mode,
                       bool median3) {
  if (hyps.count() != prob.planes)
    throw std::invalid_argument("hypothesis count does not match volume");
  DepthMap depth(prob.width, prob.height);
  for (int y = 0; y < prob.height; ++y)
    for (int x = 0; x < prob.width; ++x) {
      if (!prob.pixel_valid[static_cast<std::size_t>(y) * prob.width + x]) {
        depth.set_invalid(x, y);
        continue;
      }
      if (mode == DepthMode::kArgmax) {
        int best = 0;
        float best_p = prob.at(0, x, y);
        for (int d = 1; d < prob.planes; ++d)
          if (prob.at(d, x, y) > best_p) {  // ties keep the smaller depth
            best_p = prob.at(d, x, y);
            best = d;
          }
        depth.set(x, y,
                  static_cast<float>(hyps.values[static_cast<std::size_t>(best)]));
      } else {
        double acc = 0.0;
        for (int d = 0; d < prob.planes; ++d)
          acc += static_cast<double>(prob.at(d, x, y)) *
                 std::log(hyps.values[static_cast<std::size_t>(d)]);
        depth.set(x, y, static_cast<float>(std::exp(acc)));
      }
    }
  if (!median3) return depth;

  DepthMap filtered(depth.width, depth.height);
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      if (!depth.is_valid(x, y)) {
        filtered.set_invalid(x, y);
        continue;
      }
      float window[9];
      int k = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        const int sy = y + dy;
        if (sy < 0 || sy >= depth.height) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const int sx = (x + dx + depth.width) % depth.width;
          if (depth.is_valid(sx, sy)) window[k++] = depth.at(sx, sy);
        }
      }
      std::sort(window, window + k);
      filtered.set(x, y, window[(k - 1) / 2]);  // lower median for even counts
    }
  return filtered;
}

Image confidence_map(const ProbabilityVolume& prob) {
  Image conf(prob.width, prob.height, 1);
  for (int y = 0; y < prob.height; ++y)
    for (int x = 0; x < prob.width; ++x) {
      if (!prob.pixel_valid[static_cast<std::size_t>(y) * prob.width + x]) {
        conf.at(x, y) = 0.0f;
        continue;
      }
      float best = 0.0f;
      for (int d = 0; d < prob.planes; ++d)
        best = std::max(best, prob.at(d, x, y));
      conf.at(x, y) = best;
    }
  return conf;
}

SweepResult sweep_depth(const Image& ref_feat, const Pose& ref_pose,
                        const std::vector<Image>& src_feats,
                        const std::vector<Pose>& src_poses,
                        const DepthHypotheses& hyps, const ErpIntrinsics& intr,
                        const CostReducer& reducer, DepthMode mode,
                        bool median3, int threads) {
  SweepSetup s =
      prepare_sweep(ref_feat, ref_pose, src_feats, src_poses, hyps, intr);
  ProbabilityVolume pv;
  pv.planes = hyps.count();
  pv.width = intr.width;
  pv.height = intr.height;
  pv.data.resize(static_cast<std::size_t>(pv.planes) * pv.height * pv.width);
  pv.pixel_valid.resize(static_cast<std::size_t>(pv.height) * pv.width);
  const int channels = (s.n_sources + 1) * s.feature_dim + s.n_sources;
  const std::size_t plane_stride =
      static_cast<std::size_t>(pv.height) * pv.width;

  // One row at a time: build each hypothesis' cost vector, score it, drop
  // it. Same float sequence as build_cost_volume + reduce_volume, without
  // ever holding the volume.
  parallel_for_chunks(0, intr.height, 8, threads, [&](int y0, int y1) {
    CellScorer score(reducer, s.feature_dim, s.n_sources);
    std::vector<float> cost(static_cast<std::size_t>(channels));
    std::vector<double> scores(static_cast<std::size_t>(hyps.count()) *
                               intr.width);
    std::vector<std::uint8_t> valid(scores.size());
    std::vector<double> col(static_cast<std::size_t>(pv.planes));
    std::vector<std::uint8_t> vcol(static_cast<std::size_t>(pv.planes));
    for (int y = y0; y < y1; ++y) {
      for (int d = 0; d < pv.planes; ++d)
        for (int x = 0; x < intr.width; ++x) {
          const bool ok = fill_cost_vector(
              s.rays[static_cast<std::size_t>(y) * intr.width + x],
              hyps.values[static_cast<std::size_t>(d)], ref_feat.pixel(x, y),
              s.transforms, s.src_feats, intr, s.feature_dim, cost.data());
          const std::size_t i =
              static_cast<std::size_t>(d) * intr.width + x;
          scores[i] = score(cost.data());
          valid[i] = ok ? 1 : 0;
        }
      for (int x = 0; x < intr.width; ++x) {
        for (int d = 0; d < pv.planes; ++d) {
          col[static_cast<std::size_t>(d)] =
              scores[static_cast<std::size_t>(d) * intr.width + x];
          vcol[static_cast<std::size_t>(d)] =
              valid[static_cast<std::size_t>(d) * intr.width + x];
        }
        const bool any = softmax_depth(
            col.data(), vcol.data(), pv.planes,
            &pv.data[static_cast<std::size_t>(y) * pv.width + x], plane_stride);
        pv.pixel_valid[static_cast<std::size_t>(y) * pv.width + x] =
            any ? 1 : 0;
      }
    }
  });

  SweepResult result;
  result.depth = extract_depth(pv, hyps, mode, median3);
  result.confidence = confidence_map(pv);
  result.prob = std::move(pv);
  return result;
}

}  // namespace erpmvs
