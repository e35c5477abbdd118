#pragma once

#include <optional>
#include <vector>

#include "erpmvs/feature_pipeline.hpp"
#include "erpmvs/geometry.hpp"
#include "erpmvs/image.hpp"

namespace erpmvs {

// Candidate depths, log-uniform from d_min to d_max inclusive.
struct DepthHypotheses {
  std::vector<double> values;

  int count() const { return static_cast<int>(values.size()); }
};

DepthHypotheses make_hypotheses(double d_min, double d_max, int count);

// Per-pixel matching data for every depth hypothesis. Channel layout per
// (plane, pixel): reference feature (F), each source's warped feature (n*F),
// then the n reference-source dot products; C = (n+1)*F + n.
// data[((d*H + y)*W + x)*C + c]; valid[(d*H + y)*W + x].
struct CostVolume {
  int planes = 0;
  int width = 0;
  int height = 0;
  int feature_dim = 0;
  int n_sources = 0;
  std::vector<float> data;
  std::vector<std::uint8_t> valid;

  int channels() const { return (n_sources + 1) * feature_dim + n_sources; }
  std::size_t cell(int d, int x, int y) const {
    return (static_cast<std::size_t>(d) * height + y) * width + x;
  }
  const float* at(int d, int x, int y) const {
    return &data[cell(d, x, y) * channels()];
  }
  bool is_valid(int d, int x, int y) const { return valid[cell(d, x, y)] != 0; }
};

// Softmax-normalized scores over the depth dimension.
// data[(d*H + y)*W + x]; pixel_valid marks pixels with at least one valid
// hypothesis (the rest carry a uniform distribution as a placeholder).
struct ProbabilityVolume {
  int planes = 0;
  int width = 0;
  int height = 0;
  std::vector<float> data;
  std::vector<std::uint8_t> pixel_valid;

  std::size_t index(int d, int x, int y) const {
    return (static_cast<std::size_t>(d) * height + y) * width + x;
  }
  float at(int d, int x, int y) const { return data[index(d, x, y)]; }
};

// Warps one reference pixel into one source view at an assumed radial depth
// and samples the source feature map there. `valid` goes false only when the
// hypothesized point lands on the source camera center, where direction is
// undefined.
struct WarpResult {
  std::vector<float> feature;
  bool valid = true;
};

WarpResult warp_feature(const PixelCoord& ref_pixel, double radial_depth,
                        const Pose& ref_pose, const Pose& src_pose,
                        const ErpIntrinsics& intr, const Image& src_feat);

// Builds the full cost volume. Every feature map must match `intr`.
CostVolume build_cost_volume(const Image& ref_feat, const Pose& ref_pose,
                             const std::vector<Image>& src_feats,
                             const std::vector<Pose>& src_poses,
                             const DepthHypotheses& hyps,
                             const ErpIntrinsics& intr, int threads = 1);

// Turns per-hypothesis matching data into a score. The classical reducer
// averages the dot-product channels; the learned reducer runs the scoring
// head over the whole channel vector.
struct CostReducer {
  enum class Kind { kClassical, kMlp };
  Kind kind = Kind::kClassical;
  const MlpWeights* mlp = nullptr;  // required for kMlp

  static CostReducer classical() { return {}; }
  static CostReducer learned(const MlpWeights& w) {
    return CostReducer{Kind::kMlp, &w};
  }
};

// Scores every hypothesis and softmax-normalizes over depth per pixel
// (computed in double, stored as float). Invalid hypotheses are excluded;
// pixels with no valid hypothesis get a uniform distribution and a cleared
// pixel_valid flag.
ProbabilityVolume reduce_volume(const CostVolume& volume,
                                const CostReducer& reducer, int threads = 1);

enum class DepthMode { kArgmax, kSoft };

// Collapses probabilities to a depth map. Argmax ties resolve to the
// smaller depth; soft mode takes the probability-weighted geometric mean.
// `median3` applies a 3x3 spatial median (valid neighbors only) afterwards.
DepthMap extract_depth(const ProbabilityVolume& prob,
                       const DepthHypotheses& hyps, DepthMode mode,
                       bool median3 = false);

// Per-pixel confidence: probability mass at the selected mode.
Image confidence_map(const ProbabilityVolume& prob);

// One-call depth estimation that never materializes the cost volume: builds
// and reduces one row at a time. Bit-identical to composing
// build_cost_volume + reduce_volume + extract_depth.
struct SweepResult {
  DepthMap depth;
  Image confidence;
  ProbabilityVolume prob;  // kept for loss evaluation and tests
};

SweepResult sweep_depth(const Image& ref_feat, const Pose& ref_pose,
                        const std::vector<Image>& src_feats,
                        const std::vector<Pose>& src_poses,
                        const DepthHypotheses& hyps, const ErpIntrinsics& intr,
                        const CostReducer& reducer,
                        DepthMode mode = DepthMode::kSoft, bool median3 = false,
                        int threads = 1);

}  // namespace erpmvs
