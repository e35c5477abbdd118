#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <erpmvs/sweep_volume.hpp>

#include <cmath>
#include <cstring>
#include <random>

using namespace erpmvs;

namespace {

Image random_image(std::mt19937_64& rng, int w, int h, int c) {
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  Image img(w, h, c);
  for (auto& v : img.data) v = d(rng);
  return img;
}

Mat3 rotation_y(double a) {
  Mat3 r = Mat3::identity();
  r.m[0] = std::cos(a);
  r.m[2] = std::sin(a);
  r.m[6] = -std::sin(a);
  r.m[8] = std::cos(a);
  return r;
}

Pose pose_at(const Vec3& center, double yaw = 0.0) {
  // world-to-camera with the camera at `center`: t = -R * center
  Pose p;
  p.rotation = rotation_y(yaw);
  const Vec3 rc = p.rotation * center;
  p.translation = Vec3{-rc.x, -rc.y, -rc.z};
  return p;
}

}  // namespace

TEST_CASE("hypotheses are log-uniform with exact endpoints") {
  DepthHypotheses h = make_hypotheses(0.25, 8.0, 64);
  REQUIRE(h.count() == 64);
  CHECK(h.values.front() == 0.25);
  CHECK(h.values.back() == 8.0);
  CHECK(h.values[32] == doctest::Approx(1.4536526106296066).epsilon(1e-12));
  // equal spacing in log depth
  const double step0 = std::log(h.values[1]) - std::log(h.values[0]);
  for (int i = 1; i + 1 < 64; ++i) {
    const double step = std::log(h.values[static_cast<std::size_t>(i) + 1]) -
                        std::log(h.values[static_cast<std::size_t>(i)]);
    CHECK(step == doctest::Approx(step0).epsilon(1e-9));
  }
  for (int i = 0; i + 1 < 64; ++i)
    CHECK(h.values[static_cast<std::size_t>(i)] <
          h.values[static_cast<std::size_t>(i) + 1]);

  CHECK_THROWS_AS(make_hypotheses(0.0, 8.0, 8), std::invalid_argument);
  CHECK_THROWS_AS(make_hypotheses(2.0, 1.0, 8), std::invalid_argument);
  CHECK_THROWS_AS(make_hypotheses(0.25, 8.0, 1), std::invalid_argument);
}

TEST_CASE("warp under identical poses samples the reference pixel") {
  ErpIntrinsics intr(32, 16);
  std::mt19937_64 rng(3);
  Image feat = random_image(rng, 32, 16, 4);
  Pose pose = pose_at(Vec3{0.4, -0.2, 1.0}, 0.3);
  for (double depth : {0.5, 1.0, 3.7}) {
    WarpResult w = warp_feature(PixelCoord{11.0, 6.0}, depth, pose, pose, intr,
                                feat);
    REQUIRE(w.valid);
    for (int c = 0; c < 4; ++c) CHECK(w.feature[static_cast<std::size_t>(c)] == feat.at(11, 6, c));
  }
}

TEST_CASE("warp with a translated source lands where geometry says") {
  ErpIntrinsics intr(64, 32);
  std::mt19937_64 rng(5);
  Image feat = random_image(rng, 64, 32, 2);
  const Pose ref = pose_at(Vec3{0, 0, 0});
  const Pose src = pose_at(Vec3{0, 0, 1});

  // forward pixel: the hypothesized point stays on the source optical axis
  for (double depth : {1.5, 2.0, 5.0}) {
    WarpResult w =
        warp_feature(PixelCoord{32.0, 16.0}, depth, ref, src, intr, feat);
    REQUIRE(w.valid);
    for (int c = 0; c < 2; ++c) CHECK(w.feature[static_cast<std::size_t>(c)] == feat.at(32, 16, c));
  }
  // sideways pixel (theta = pi/2) at depth 1: point (1,0,0) is at
  // theta = 3*pi/4 in the source frame -> u = 0.875*W = 56, v = 16
  WarpResult w =
      warp_feature(PixelCoord{48.0, 16.0}, 1.0, ref, src, intr, feat);
  REQUIRE(w.valid);
  for (int c = 0; c < 2; ++c) CHECK(w.feature[static_cast<std::size_t>(c)] == doctest::Approx(feat.at(56, 16, c)).epsilon(1e-6));
}

TEST_CASE("warp flags the source camera center as invalid") {
  ErpIntrinsics intr(32, 16);
  Image feat(32, 16, 2, 1.0f);
  const Pose ref = pose_at(Vec3{0, 0, 0});
  const Pose src = pose_at(Vec3{0, 0, 1});
  // the forward ray at depth 1 hits the source center exactly
  WarpResult w = warp_feature(PixelCoord{16.0, 8.0}, 1.0, ref, src, intr, feat);
  CHECK(!w.valid);
  CHECK(w.feature[0] == 0.0f);
  // throws on nonsense depth
  CHECK_THROWS_AS(
      warp_feature(PixelCoord{16.0, 8.0}, 0.0, ref, src, intr, feat),
      std::invalid_argument);
}

TEST_CASE("cost volume matches the per-call warp path bit for bit") {
  ErpIntrinsics intr(16, 8);
  std::mt19937_64 rng(7);
  Image ref_feat = random_image(rng, 16, 8, 3);
  std::vector<Image> src_feats = {random_image(rng, 16, 8, 3),
                                  random_image(rng, 16, 8, 3)};
  const Pose ref_pose = pose_at(Vec3{0, 0, 0});
  const std::vector<Pose> src_poses = {pose_at(Vec3{0.2, 0.05, -0.1}, 0.1),
                                       pose_at(Vec3{-0.15, 0.0, 0.25}, -0.2)};
  DepthHypotheses hyps = make_hypotheses(0.5, 4.0, 5);
  CostVolume cv =
      build_cost_volume(ref_feat, ref_pose, src_feats, src_poses, hyps, intr);
  REQUIRE(cv.channels() == 3 * 3 + 2);
  REQUIRE(cv.feature_dim == 3);
  REQUIRE(cv.n_sources == 2);

  for (int d = 0; d < cv.planes; ++d)
    for (int y = 0; y < cv.height; ++y)
      for (int x = 0; x < cv.width; ++x) {
        const float* got = cv.at(d, x, y);
        // reference feature block
        for (int c = 0; c < 3; ++c) CHECK(got[c] == ref_feat.at(x, y, c));
        bool want_valid = true;
        float want[11];
        std::memcpy(want, ref_feat.pixel(x, y), 3 * sizeof(float));
        for (int i = 0; i < 2; ++i) {
          WarpResult w = warp_feature(
              PixelCoord{static_cast<double>(x), static_cast<double>(y)},
              hyps.values[static_cast<std::size_t>(d)], ref_pose,
              src_poses[static_cast<std::size_t>(i)], intr,
              src_feats[static_cast<std::size_t>(i)]);
          if (!w.valid) want_valid = false;
          std::memcpy(want + 3 * (i + 1), w.feature.data(), 3 * sizeof(float));
        }
        for (int i = 0; i < 2; ++i) {
          float acc = 0.0f;
          for (int c = 0; c < 3; ++c) acc += want[c] * want[3 * (i + 1) + c];
          want[9 + i] = acc;
        }
        for (int c = 0; c < 11; ++c) CHECK(got[c] == want[c]);
        CHECK(cv.is_valid(d, x, y) == want_valid);
      }
}

TEST_CASE("classical reduction is a softmax over mean dot products") {
  // hand-built volume: 1 source, F = 1, so channels = [ref, src, dot]
  CostVolume cv;
  cv.planes = 4;
  cv.width = 2;
  cv.height = 1;
  cv.feature_dim = 1;
  cv.n_sources = 1;
  cv.data.assign(static_cast<std::size_t>(4) * 2 * 1 * 3, 0.0f);
  cv.valid.assign(static_cast<std::size_t>(4) * 2, 1);
  const float scores_x0[4] = {0.5f, 2.0f, 1.0f, -0.25f};
  for (int d = 0; d < 4; ++d) {
    cv.data[(cv.cell(d, 0, 0)) * 3 + 2] = scores_x0[d];
    cv.data[(cv.cell(d, 1, 0)) * 3 + 2] = 1.0f;  // flat scores at x = 1
  }
  // pixel (1,0) has no valid hypothesis at all
  for (int d = 0; d < 4; ++d) cv.valid[cv.cell(d, 1, 0)] = 0;

  ProbabilityVolume pv = reduce_volume(cv, CostReducer::classical());
  // oracle softmax in double, exactly as specified
  double m = 2.0, sum = 0.0;
  for (float s : scores_x0) sum += std::exp(static_cast<double>(s) - m);
  for (int d = 0; d < 4; ++d) {
    const float want = static_cast<float>(
        std::exp(static_cast<double>(scores_x0[d]) - m) / sum);
    CHECK(pv.at(d, 0, 0) == want);
  }
  CHECK(pv.pixel_valid[0] == 1);
  // all-invalid pixel: uniform placeholder, flagged invalid
  CHECK(pv.pixel_valid[1] == 0);
  for (int d = 0; d < 4; ++d) CHECK(pv.at(d, 1, 0) == 0.25f);
  // probabilities sum to one
  float total = 0.0f;
  for (int d = 0; d < 4; ++d) total += pv.at(d, 0, 0);
  CHECK(total == doctest::Approx(1.0f).epsilon(1e-6));
}

TEST_CASE("learned reduction agrees with mlp_forward per cell") {
  ErpIntrinsics intr(8, 4);
  std::mt19937_64 rng(11);
  Image ref_feat = random_image(rng, 8, 4, 2);
  std::vector<Image> src_feats = {random_image(rng, 8, 4, 2)};
  const Pose ref_pose = pose_at(Vec3{0, 0, 0});
  const std::vector<Pose> src_poses = {pose_at(Vec3{0.1, 0.0, 0.05})};
  DepthHypotheses hyps = make_hypotheses(0.5, 2.0, 3);
  CostVolume cv =
      build_cost_volume(ref_feat, ref_pose, src_feats, src_poses, hyps, intr);
  const int channels = cv.channels();  // 2*2 + 1 = 5

  MlpWeights mlp;
  MlpLayer l1;
  l1.rows = 3;
  l1.cols = channels;
  l1.activation = MlpLayer::Activation::kRelu;
  std::uniform_real_distribution<float> d(-0.6f, 0.6f);
  l1.weights.resize(static_cast<std::size_t>(l1.rows) * l1.cols);
  for (auto& v : l1.weights) v = d(rng);
  l1.bias = {0.1f, -0.2f, 0.05f};
  MlpLayer l2;
  l2.rows = 1;
  l2.cols = 3;
  l2.activation = MlpLayer::Activation::kLinear;
  l2.weights = {0.7f, -0.3f, 1.1f};
  l2.bias = {0.0f};
  mlp.layers = {l1, l2};

  ProbabilityVolume pv = reduce_volume(cv, CostReducer::learned(mlp));
  // oracle: softmax over mlp_forward scores, double math
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) {
      std::vector<double> scores;
      for (int dd = 0; dd < 3; ++dd)
        scores.push_back(static_cast<double>(mlp_forward(
            mlp, std::span<const float>(cv.at(dd, x, y),
                                        static_cast<std::size_t>(channels)))));
      const double m = std::max({scores[0], scores[1], scores[2]});
      double sum = 0.0;
      for (double s : scores) sum += std::exp(s - m);
      for (int dd = 0; dd < 3; ++dd)
        CHECK(pv.at(dd, x, y) ==
              static_cast<float>(std::exp(scores[static_cast<std::size_t>(dd)] - m) / sum));
    }

  CostReducer bad;
  bad.kind = CostReducer::Kind::kMlp;
  CHECK_THROWS_AS(reduce_volume(cv, bad), std::invalid_argument);
}

TEST_CASE("depth extraction: argmax ties pick the smaller depth") {
  ProbabilityVolume pv;
  pv.planes = 4;
  pv.width = 2;
  pv.height = 1;
  pv.data.assign(8, 0.0f);
  pv.pixel_valid = {1, 0};
  const float probs[4] = {0.1f, 0.4f, 0.4f, 0.1f};
  for (int d = 0; d < 4; ++d) pv.data[pv.index(d, 0, 0)] = probs[d];
  DepthHypotheses hyps;
  hyps.values = {1.0, 2.0, 4.0, 8.0};
  DepthMap depth = extract_depth(pv, hyps, DepthMode::kArgmax);
  CHECK(depth.is_valid(0, 0));
  CHECK(depth.at(0, 0) == 2.0f);  // tie between planes 1 and 2
  CHECK(!depth.is_valid(1, 0));   // invalid pixels stay invalid
}

TEST_CASE("depth extraction: soft mode is the log-space expectation") {
  ProbabilityVolume pv;
  pv.planes = 4;
  pv.width = 1;
  pv.height = 1;
  pv.data = {0.1f, 0.4f, 0.3f, 0.2f};
  pv.pixel_valid = {1};
  DepthHypotheses hyps;
  hyps.values = {1.0, 2.0, 4.0, 8.0};
  DepthMap depth = extract_depth(pv, hyps, DepthMode::kSoft);
  CHECK(depth.at(0, 0) == doctest::Approx(3.031433214428765).epsilon(1e-6));
  CHECK_THROWS_AS(extract_depth(pv, make_hypotheses(1.0, 8.0, 5),
                                DepthMode::kSoft),
                  std::invalid_argument);
}

TEST_CASE("3x3 median filter suppresses a lone spike") {
  ProbabilityVolume pv;
  pv.planes = 2;
  pv.width = 4;
  pv.height = 3;
  pv.data.assign(static_cast<std::size_t>(2) * 4 * 3, 0.0f);
  pv.pixel_valid.assign(12, 1);
  // plane 0 wins everywhere except the center pixel (1,1)
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x) {
      const bool spike = (x == 1 && y == 1);
      pv.data[pv.index(0, x, y)] = spike ? 0.1f : 0.9f;
      pv.data[pv.index(1, x, y)] = spike ? 0.9f : 0.1f;
    }
  DepthHypotheses hyps;
  hyps.values = {1.0, 5.0};
  DepthMap raw = extract_depth(pv, hyps, DepthMode::kArgmax, false);
  CHECK(raw.at(1, 1) == 5.0f);
  DepthMap filtered = extract_depth(pv, hyps, DepthMode::kArgmax, true);
  CHECK(filtered.at(1, 1) == 1.0f);
  CHECK(filtered.at(0, 0) == 1.0f);
}

TEST_CASE("confidence is the winning probability mass") {
  ProbabilityVolume pv;
  pv.planes = 3;
  pv.width = 2;
  pv.height = 1;
  pv.data.assign(6, 0.0f);
  pv.pixel_valid = {1, 0};
  pv.data[pv.index(0, 0, 0)] = 0.2f;
  pv.data[pv.index(1, 0, 0)] = 0.7f;
  pv.data[pv.index(2, 0, 0)] = 0.1f;
  Image conf = confidence_map(pv);
  CHECK(conf.at(0, 0) == 0.7f);
  CHECK(conf.at(1, 0) == 0.0f);  // invalid pixel
}

TEST_CASE("streaming sweep is bit-identical to the composed pipeline") {
  ErpIntrinsics intr(16, 8);
  std::mt19937_64 rng(13);
  Image ref_feat = random_image(rng, 16, 8, 3);
  std::vector<Image> src_feats = {random_image(rng, 16, 8, 3),
                                  random_image(rng, 16, 8, 3)};
  const Pose ref_pose = pose_at(Vec3{0, 0, 0}, 0.05);
  const std::vector<Pose> src_poses = {pose_at(Vec3{0.2, 0.0, -0.1}, -0.1),
                                       pose_at(Vec3{-0.1, 0.1, 0.2}, 0.15)};
  DepthHypotheses hyps = make_hypotheses(0.4, 5.0, 8);

  for (DepthMode mode : {DepthMode::kArgmax, DepthMode::kSoft}) {
    CostVolume cv = build_cost_volume(ref_feat, ref_pose, src_feats, src_poses,
                                      hyps, intr);
    ProbabilityVolume pv = reduce_volume(cv, CostReducer::classical());
    DepthMap composed = extract_depth(pv, hyps, mode, true);
    Image conf = confidence_map(pv);

    SweepResult streamed =
        sweep_depth(ref_feat, ref_pose, src_feats, src_poses, hyps, intr,
                    CostReducer::classical(), mode, true);
    CHECK(std::memcmp(streamed.prob.data.data(), pv.data.data(),
                      pv.data.size() * sizeof(float)) == 0);
    CHECK(streamed.prob.pixel_valid == pv.pixel_valid);
    REQUIRE(streamed.depth.width == composed.width);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 16; ++x) {
        CHECK(streamed.depth.is_valid(x, y) == composed.is_valid(x, y));
        if (composed.is_valid(x, y))
          CHECK(streamed.depth.at(x, y) == composed.at(x, y));
        CHECK(streamed.confidence.at(x, y) == conf.at(x, y));
      }
  }
}

TEST_CASE("sweep results do not depend on the thread count") {
  ErpIntrinsics intr(32, 16);
  std::mt19937_64 rng(17);
  Image ref_feat = random_image(rng, 32, 16, 2);
  std::vector<Image> src_feats = {random_image(rng, 32, 16, 2)};
  const Pose ref_pose = pose_at(Vec3{0, 0, 0});
  const std::vector<Pose> src_poses = {pose_at(Vec3{0.15, -0.05, 0.1})};
  DepthHypotheses hyps = make_hypotheses(0.5, 4.0, 6);
  SweepResult a = sweep_depth(ref_feat, ref_pose, src_feats, src_poses, hyps,
                              intr, CostReducer::classical(),
                              DepthMode::kSoft, false, 1);
  SweepResult b = sweep_depth(ref_feat, ref_pose, src_feats, src_poses, hyps,
                              intr, CostReducer::classical(),
                              DepthMode::kSoft, false, 8);
  CHECK(std::memcmp(a.prob.data.data(), b.prob.data.data(),
                    a.prob.data.size() * sizeof(float)) == 0);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 32; ++x)
      if (a.depth.is_valid(x, y)) CHECK(a.depth.at(x, y) == b.depth.at(x, y));
}

TEST_CASE("sweep validation") {
  ErpIntrinsics intr(16, 8);
  std::mt19937_64 rng(19);
  Image ref_feat = random_image(rng, 16, 8, 2);
  DepthHypotheses hyps = make_hypotheses(0.5, 4.0, 4);
  const Pose ref = pose_at(Vec3{0, 0, 0});
  // no sources
  CHECK_THROWS_AS(build_cost_volume(ref_feat, ref, {}, {}, hyps, intr),
                  std::invalid_argument);
  // mismatched shapes
  std::vector<Image> bad = {random_image(rng, 8, 4, 2)};
  CHECK_THROWS_AS(
      build_cost_volume(ref_feat, ref, bad, {pose_at(Vec3{0.1, 0, 0})}, hyps,
                        intr),
      std::invalid_argument);
  // feature/pose count mismatch
  std::vector<Image> ok = {random_image(rng, 16, 8, 2)};
  CHECK_THROWS_AS(build_cost_volume(ref_feat, ref, ok, {}, hyps, intr),
                  std::invalid_argument);
}
