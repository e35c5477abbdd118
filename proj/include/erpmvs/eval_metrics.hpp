#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "erpmvs/geometry.hpp"
#include "erpmvs/image.hpp"
#include "erpmvs/mesh.hpp"

namespace erpmvs {

// ---------------------------------------------------------------------------
// Depth map metrics
// ---------------------------------------------------------------------------

struct DepthMetrics {
  double mae_cm = 0.0;     // mean absolute error
  double mre_pct = 0.0;    // mean relative error, percent of ground truth
  double rmse_cm = 0.0;    // root mean squared error
  double delta1_pct = 0.0; // share of pixels with max(p/g, g/p) < 1.25
};

// Computed over pixels valid in both maps; throws if there are none or the
// maps disagree in size.
DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt);

// ---------------------------------------------------------------------------
// Mesh metrics
// ---------------------------------------------------------------------------

struct MeshMetrics {
  double acc_cm = 0.0;      // mean nearest-sample distance, pred -> gt
  double comp_cm = 0.0;     // mean nearest-sample distance, gt -> pred
  double chamfer_cm = 0.0;  // (acc + comp) / 2
  double fscore_pct = 0.0;  // harmonic mean of precision/recall at threshold
  double threshold_cm = 0.0;
};

// Deterministic area-weighted surface sampling: triangles are chosen through
// the cumulative-area table and points placed with the square-root
// barycentric trick, all driven by one seeded mt19937_64 stream.
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, int n_samples,
                                 std::uint64_t seed);

// Exact nearest-neighbor index over a fixed point set (median-split k-d
// tree). Immutable after construction; lookups are safe to share across
// threads.
class PointKdTree {
 public:
  explicit PointKdTree(std::vector<Vec3> points);

  // Returns {index into the original point order, squared distance}.
  std::pair<int, double> nearest(const Vec3& query) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int begin = 0, end = 0;       // leaf range when count <= kLeafSize
    int axis = -1;                // split axis; -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
  };
  static constexpr int kLeafSize = 8;

  int build(int begin, int end);
  void search(int node, const Vec3& q, int& best, double& best_d2) const;

  std::vector<Vec3> points_;   // reordered storage
  std::vector<int> order_;     // original index of points_[i]
  std::vector<Node> nodes_;
  int root_ = -1;
};

inline constexpr std::uint64_t kDefaultSampleSeed = 0x36052A9B1ull;

// Samples both surfaces with the same seed and compares nearest sampled
// points in both directions. Distances are reported in centimeters; the
// F-score counts samples within `threshold_cm` (inclusive).
MeshMetrics mesh_metrics(const TriangleMesh& pred, const TriangleMesh& gt,
                         double threshold_cm = 5.0, int n_samples = 200000,
                         std::uint64_t seed = kDefaultSampleSeed);

// ---------------------------------------------------------------------------
// Evaluation losses for multi-scale depth predictions
// ---------------------------------------------------------------------------

struct LossWeights {
  double grad = 1.0;
  double normals = 1.0;
  double mv = 0.2;
};

// A source view for the multi-view consistency term: its ground-truth depth
// at the finest scale and its world-to-camera pose.
struct SourceView {
  DepthMap gt_depth;
  Pose pose;
};

struct LossBreakdown {
  double depth = 0.0;    // mean |log p - log g|, averaged over scales
  double grad = 0.0;     // mean L1 of log-depth difference gradients
  double normals = 0.0;  // mean (1 - n_pred . n_gt) at the finest scale
  double mv = 0.0;       // warped log-depth L1 vs source ground truth
  double total = 0.0;    // depth + a_grad*grad + a_normals*normals + a_mv*mv
};

// Pure evaluation of the four-term loss. `pred_scales` and `gt_scales` are
// aligned pyramids, finest first, each level half the previous size;
// `intr` describes the finest level, as does `ref_pose` (world-to-camera of
// the reference view). Gradients wrap across the horizontal seam. Source
// pixels whose warped point lies more than 5 cm behind the source ground
// truth are treated as occluded and skipped.
LossBreakdown losses(const std::vector<DepthMap>& pred_scales,
                     const std::vector<DepthMap>& gt_scales,
                     const std::vector<SourceView>& sources,
                     const Pose& ref_pose, const ErpIntrinsics& intr,
                     const LossWeights& weights = {});

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

// Flat JSON object / key=value lines with exactly the keys mae_cm, mre_pct,
// rmse_cm, delta1_pct (when depth metrics are present) and comp_cm, acc_cm,
// chamfer_cm, fscore_pct (when mesh metrics are present).
std::string report_json(const std::optional<DepthMetrics>& depth,
                        const std::optional<MeshMetrics>& mesh);
std::string report_text(const std::optional<DepthMetrics>& depth,
                        const std::optional<MeshMetrics>& mesh);

}  // namespace erpmvs
