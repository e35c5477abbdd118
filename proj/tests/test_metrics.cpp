#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <erpmvs/eval_metrics.hpp>
#include <erpmvs/synth_scenes.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>
#include <vector>

using namespace erpmvs;

namespace {

DepthMap map_from(const std::vector<float>& values, int w, int h) {
  REQUIRE(static_cast<int>(values.size()) == w * h);
  DepthMap m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, values[static_cast<std::size_t>(y * w + x)]);
  return m;
}

DepthMap constant_map(int w, int h, float value) {
  DepthMap m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, value);
  return m;
}

DepthMap scaled_map(const DepthMap& src, float factor) {
  DepthMap m(src.width, src.height);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      if (src.is_valid(x, y)) m.set(x, y, src.at(x, y) * factor);
  return m;
}

TriangleMesh unit_cube_mesh(const Vec3& lo) {
  SceneSpec spec;
  Primitive box;
  box.kind = Primitive::Kind::kBox;
  box.center = lo + Vec3{0.5, 0.5, 0.5};
  box.size = Vec3{1, 1, 1};
  spec.primitives.push_back(box);
  return scene_mesh(spec);
}

// Unit square spanning [0,1]^2 at height z, as two triangles.
TriangleMesh square_mesh(double z) {
  TriangleMesh m;
  m.vertices = {Vec3{0, 0, z}, Vec3{1, 0, z}, Vec3{1, 1, z}, Vec3{0, 1, z}};
  m.colors.assign(4, {128, 128, 128});
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Pose identity_pose_at(const Vec3& center) {
  Pose p;
  p.translation = Vec3{-center.x, -center.y, -center.z};
  return p;
}

SceneSpec room_scene(int w, int h, const std::vector<Vec3>& cams) {
  SceneSpec spec;
  spec.width = w;
  spec.height = h;
  Primitive room;
  room.kind = Primitive::Kind::kRoom;
  room.size = Vec3{4.0, 3.0, 5.0};
  room.texture.kind = Texture::Kind::kChecker;
  spec.primitives.push_back(room);
  for (const Vec3& c : cams) spec.cameras.push_back(identity_pose_at(c));
  return spec;
}

}  // namespace

TEST_CASE("depth metrics: three-pixel hand oracle") {
  const DepthMap gt = map_from({1.0f, 2.0f, 4.0f}, 3, 1);
  const DepthMap pred = map_from({1.1f, 2.0f, 5.0f}, 3, 1);
  const DepthMetrics m = depth_metrics(pred, gt);
  // Hand computation: errors {0.1, 0, 1} m on gt {1, 2, 4} m; the 5/4 ratio
  // equals the 1.25 bound exactly and must not count toward delta1.
  CHECK(m.mae_cm == doctest::Approx(36.666666666666664).epsilon(1e-6));
  CHECK(m.mre_pct == doctest::Approx(11.666666666666666).epsilon(1e-6));
  CHECK(m.rmse_cm == doctest::Approx(58.022983951764039).epsilon(1e-6));
  CHECK(m.delta1_pct == 100.0 * 2.0 / 3.0);
}

TEST_CASE("depth metrics: identity and uniform scale") {
  std::mt19937_64 rng(11);
  DepthMap d(32, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 32; ++x)
      if ((x + y) % 7 != 3)  // leave holes
        d.set(x, y, static_cast<float>(0.5 + 4.0 * unit_double(rng)));

  const DepthMetrics self = depth_metrics(d, d);
  CHECK(self.mae_cm == 0.0);
  CHECK(self.mre_pct == 0.0);
  CHECK(self.rmse_cm == 0.0);
  CHECK(self.delta1_pct == 100.0);

  const DepthMetrics scaled = depth_metrics(scaled_map(d, 1.2f), d);
  CHECK(scaled.mre_pct == doctest::Approx(20.0).epsilon(1e-5));
  CHECK(scaled.delta1_pct == 100.0);  // ratio 1.2 < 1.25 everywhere
}

TEST_CASE("depth metrics: delta1 never drops when moving toward gt") {
  std::mt19937_64 rng(99);
  DepthMap gt(24, 12), pred(24, 12), mid(24, 12);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 24; ++x) {
      const float g = static_cast<float>(0.5 + 3.0 * unit_double(rng));
      const float p = static_cast<float>(0.5 + 3.0 * unit_double(rng));
      gt.set(x, y, g);
      pred.set(x, y, p);
      mid.set(x, y, 0.5f * (p + g));
    }
  CHECK(depth_metrics(mid, gt).delta1_pct >= depth_metrics(pred, gt).delta1_pct);
}

TEST_CASE("depth metrics: validation") {
  const DepthMap a = constant_map(4, 2, 1.0f);
  CHECK_THROWS_AS(depth_metrics(a, constant_map(2, 2, 1.0f)),
                  std::invalid_argument);
  DepthMap gt(4, 2), pred(4, 2);
  gt.set(0, 0, 1.0f);     // valid only where pred is not
  pred.set(1, 0, 1.0f);
  CHECK_THROWS_AS(depth_metrics(pred, gt), std::invalid_argument);
}

TEST_CASE("surface sampling is deterministic, on-surface, and area weighted") {
  TriangleMesh two;
  two.vertices = {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0},
                  Vec3{10, 0, 0}, Vec3{12, 0, 0}, Vec3{10, 2, 0}};
  two.colors.assign(6, {0, 0, 0});
  two.faces = {{0, 1, 2}, {3, 4, 5}};  // areas 0.5 and 2.0

  const auto pts = sample_surface(two, 50000, 1234);
  const auto pts_again = sample_surface(two, 50000, 1234);
  REQUIRE(pts.size() == 50000);
  CHECK(std::equal(pts.begin(), pts.end(), pts_again.begin(),
                   [](const Vec3& a, const Vec3& b) {
                     return a.x == b.x && a.y == b.y && a.z == b.z;
                   }));
  const auto pts_other = sample_surface(two, 50000, 77);
  CHECK((pts_other[0].x != pts[0].x || pts_other[0].y != pts[0].y));

  int on_big = 0;
  for (const Vec3& p : pts) {
    CHECK(p.z == 0.0);  // convex combinations stay in the z=0 plane
    if (p.x >= 5.0) ++on_big;
  }
  // Binomial(50000, 0.8): four sigma is about 0.0072.
  CHECK(std::abs(on_big / 50000.0 - 0.8) < 0.01);

  CHECK_THROWS_AS(sample_surface(TriangleMesh{}, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_surface(two, 0, 1), std::invalid_argument);
}

TEST_CASE("k-d tree matches brute force exactly") {
  std::mt19937_64 rng(5150);
  std::vector<Vec3> pts(3000);
  for (Vec3& p : pts)
    p = Vec3{unit_double(rng), unit_double(rng), unit_double(rng)};
  const PointKdTree tree(pts);
  REQUIRE(tree.size() == pts.size());

  for (int q = 0; q < 800; ++q) {
    const Vec3 query{3.0 * unit_double(rng) - 1.0, 3.0 * unit_double(rng) - 1.0,
                     3.0 * unit_double(rng) - 1.0};
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d2 = (pts[i] - query).squared_norm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<int>(i);
      }
    }
    const auto [idx, d2] = tree.nearest(query);
    CHECK(idx == best);
    CHECK(d2 == best_d2);
  }
}

TEST_CASE("mesh metrics: self comparison is exact") {
  const TriangleMesh cube = unit_cube_mesh(Vec3{0, 0, 0});
  const MeshMetrics m = mesh_metrics(cube, cube, 5.0, 20000);
  CHECK(m.acc_cm == 0.0);
  CHECK(m.comp_cm == 0.0);
  CHECK(m.chamfer_cm == 0.0);
  CHECK(m.fscore_pct == 100.0);
  CHECK(m.threshold_cm == 5.0);
}

TEST_CASE("mesh metrics: parallel unit squares 10 cm apart") {
  const TriangleMesh a = square_mesh(0.0);
  const TriangleMesh b = square_mesh(0.10);
  const MeshMetrics m = mesh_metrics(a, b, 5.0, 100000);
  // Every nearest-point distance is sqrt(0.1^2 + in-plane^2); the in-plane
  // nearest-sample term adds only ~0.016% at this density.
  CHECK(m.acc_cm == doctest::Approx(10.0).epsilon(0.002));
  CHECK(m.comp_cm == doctest::Approx(10.0).epsilon(0.002));
  CHECK(m.chamfer_cm == doctest::Approx(10.0).epsilon(0.002));
  CHECK(m.fscore_pct == 0.0);  // nothing within 5 cm

  const MeshMetrics wide = mesh_metrics(a, b, 15.0, 100000);
  CHECK(wide.fscore_pct == 100.0);  // everything within 15 cm
}

TEST_CASE("mesh metrics: centimeter-shifted cube") {
  // Point-to-point chamfer mixes two regimes: the two faces normal to the
  // shift sit a clean 1 cm apart, while the four parallel faces overlap and
  // bottom out at the expected nearest-sample spacing 1/(2*sqrt(density)),
  // about 0.39 cm at 10^5 samples over 6 m^2. Expected mean is therefore
  // (2*1.0 + 4*0.39)/6 = 0.59 cm, not the shift distance itself.
  const TriangleMesh cube = unit_cube_mesh(Vec3{0, 0, 0});
  const TriangleMesh moved = unit_cube_mesh(Vec3{0.01, 0, 0});
  const MeshMetrics m = mesh_metrics(cube, moved, 5.0, 100000);
  CHECK(m.chamfer_cm > 0.45);
  CHECK(m.chamfer_cm < 0.80);
  CHECK(m.fscore_pct == 100.0);  // all distances well under 5 cm

  // Symmetry: swapping the meshes swaps acc and comp bit for bit.
  const MeshMetrics rev = mesh_metrics(moved, cube, 5.0, 100000);
  CHECK(rev.acc_cm == m.comp_cm);
  CHECK(rev.comp_cm == m.acc_cm);
  CHECK(rev.chamfer_cm == m.chamfer_cm);
  CHECK(rev.fscore_pct == m.fscore_pct);

  CHECK_THROWS_AS(mesh_metrics(TriangleMesh{}, cube, 5.0, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(mesh_metrics(cube, moved, 0.0, 100), std::invalid_argument);
}

TEST_CASE("losses: identical prediction scores zero") {
  const std::vector<Vec3> cams = {Vec3{0, 0, 0}, Vec3{0.4, 0, 0.2}};
  const SceneSpec fine = room_scene(128, 64, cams);
  const SceneSpec coarse = room_scene(64, 32, cams);
  const RenderResult ref_f = render_view(fine, 0);
  const RenderResult ref_c = render_view(coarse, 0);
  const RenderResult src_f = render_view(fine, 1);

  const std::vector<DepthMap> pyramid = {ref_f.depth, ref_c.depth};
  std::vector<SourceView> sources;
  sources.push_back(SourceView{src_f.depth, fine.cameras[1]});
  // A source at the reference camera itself is exactly consistent.
  std::vector<SourceView> self_sources;
  self_sources.push_back(SourceView{ref_f.depth, fine.cameras[0]});

  const LossBreakdown self = losses(pyramid, pyramid, self_sources,
                                    fine.cameras[0], fine.intrinsics());
  CHECK(self.depth == 0.0);
  CHECK(self.grad == 0.0);
  CHECK(self.normals >= 0.0);
  CHECK(self.normals < 1e-12);
  CHECK(self.mv >= 0.0);
  CHECK(self.mv < 1e-12);
  CHECK(self.total < 1e-12);

  // With a real baseline the mv term pays only for resampling against the
  // neighboring source rays: nonzero but small.
  const LossBreakdown clean =
      losses(pyramid, pyramid, sources, fine.cameras[0], fine.intrinsics());
  CHECK(clean.depth == 0.0);
  CHECK(clean.mv > 0.0);
  CHECK(clean.mv < 0.2);

  // Scaling the prediction 3% against a source at the reference center
  // yields an exact oracle: every surviving pixel contributes ln 1.03, and
  // pixels deeper than 0.05/0.03 m land beyond the occlusion slack and must
  // be dropped (the room spans depths on both sides of that line).
  std::vector<DepthMap> off = {scaled_map(ref_f.depth, 1.03f),
                               scaled_map(ref_c.depth, 1.03f)};
  const LossBreakdown wrong =
      losses(off, pyramid, self_sources, fine.cameras[0], fine.intrinsics());
  CHECK(wrong.depth == doctest::Approx(std::log(1.03)).epsilon(1e-5));
  CHECK(wrong.mv == doctest::Approx(std::log(1.03)).epsilon(1e-5));
  CHECK(wrong.grad < 1e-6);  // only float rounding of the 1.03 product
}

TEST_CASE("losses: log-depth scale property and weight linearity") {
  const std::vector<Vec3> cams = {Vec3{0, 0, 0}};
  const SceneSpec fine = room_scene(64, 32, cams);
  const SceneSpec coarse = room_scene(32, 16, cams);
  const std::vector<DepthMap> gt = {render_view(fine, 0).depth,
                                    render_view(coarse, 0).depth};
  const std::vector<DepthMap> doubled = {scaled_map(gt[0], 2.0f),
                                         scaled_map(gt[1], 2.0f)};
  const std::vector<DepthMap> halved = {scaled_map(gt[0], 0.5f),
                                        scaled_map(gt[1], 0.5f)};

  const LossBreakdown up =
      losses(doubled, gt, {}, fine.cameras[0], fine.intrinsics());
  // Doubling is exact in floats, so the per-pixel log difference is ln 2 to
  // rounding, at every scale.
  CHECK(up.depth == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(up.grad < 1e-12);  // constant log offset has no gradients
  CHECK(up.mv == 0.0);     // no sources

  const LossBreakdown down =
      losses(halved, gt, {}, fine.cameras[0], fine.intrinsics());
  CHECK(down.depth == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  LossWeights w;
  w.mv = 0.4;
  const LossBreakdown base =
      losses(doubled, gt, {}, fine.cameras[0], fine.intrinsics());
  const LossBreakdown rew =
      losses(doubled, gt, {}, fine.cameras[0], fine.intrinsics(), w);
  CHECK(base.depth == rew.depth);
  CHECK(base.total ==
        doctest::Approx(base.depth + 1.0 * base.grad + 1.0 * base.normals +
                        0.2 * base.mv)
            .epsilon(1e-12));
  CHECK(rew.total ==
        doctest::Approx(rew.depth + rew.grad + rew.normals + 0.4 * rew.mv)
            .epsilon(1e-12));
}

TEST_CASE("losses: occlusion rule in the multi-view term") {
  const ErpIntrinsics intr(8, 4);
  const DepthMap pred = constant_map(8, 4, 2.0f);
  const std::vector<DepthMap> pyr = {pred};

  // Source surface 1 m away: warped points sit 1 m behind it -> occluded.
  std::vector<SourceView> occluded;
  occluded.push_back(SourceView{constant_map(8, 4, 1.0f), Pose::identity()});
  const LossBreakdown occ =
      losses(pyr, pyr, occluded, Pose::identity(), intr);
  CHECK(occ.mv == 0.0);

  // Source surface 20 cm beyond the warped points -> visible, compared.
  std::vector<SourceView> visible;
  visible.push_back(SourceView{constant_map(8, 4, 2.2f), Pose::identity()});
  const LossBreakdown vis =
      losses(pyr, pyr, visible, Pose::identity(), intr);
  CHECK(vis.mv == doctest::Approx(std::log(2.2 / 2.0)).epsilon(1e-6));

  // 5 cm behind the source surface is within the slack -> still compared.
  std::vector<SourceView> boundary;
  boundary.push_back(SourceView{constant_map(8, 4, 1.95f), Pose::identity()});
  const LossBreakdown near =
      losses(pyr, pyr, boundary, Pose::identity(), intr);
  CHECK(near.mv == doctest::Approx(std::log(2.0 / 1.95)).epsilon(1e-6));
}

TEST_CASE("losses: pyramid validation") {
  const DepthMap fine = constant_map(16, 8, 2.0f);
  const DepthMap half = constant_map(8, 4, 2.0f);
  const DepthMap off = constant_map(10, 4, 2.0f);
  const ErpIntrinsics intr(16, 8);

  CHECK_THROWS_AS(losses({}, {}, {}, Pose::identity(), intr),
                  std::invalid_argument);
  CHECK_THROWS_AS(losses({fine}, {fine, half}, {}, Pose::identity(), intr),
                  std::invalid_argument);
  CHECK_THROWS_AS(losses({fine, off}, {fine, off}, {}, Pose::identity(), intr),
                  std::invalid_argument);
  CHECK_THROWS_AS(losses({half}, {half}, {}, Pose::identity(), intr),
                  std::invalid_argument);  // intrinsics mismatch
  std::vector<SourceView> bad_src;
  bad_src.push_back(SourceView{half, Pose::identity()});
  CHECK_THROWS_AS(losses({fine}, {fine}, bad_src, Pose::identity(), intr),
                  std::invalid_argument);
  CHECK_THROWS_AS(losses({fine}, {DepthMap(16, 8)}, {}, Pose::identity(), intr),
                  std::invalid_argument);  // nothing jointly valid
}

TEST_CASE("reports carry exactly the contract keys") {
  DepthMetrics d;
  d.mae_cm = 36.5;
  d.mre_pct = 11.25;
  d.rmse_cm = 58.0625;
  d.delta1_pct = 66.0;
  MeshMetrics m;
  m.acc_cm = 1.5;
  m.comp_cm = 2.5;
  m.chamfer_cm = 2.0;
  m.fscore_pct = 87.5;
  m.threshold_cm = 5.0;

  const std::string full = report_json(d, m);
  const auto j = nlohmann::json::parse(full);
  CHECK(j.size() == 8);
  CHECK(j["mae_cm"] == 36.5);
  CHECK(j["mre_pct"] == 11.25);
  CHECK(j["rmse_cm"] == 58.0625);
  CHECK(j["delta1_pct"] == 66.0);
  CHECK(j["comp_cm"] == 2.5);
  CHECK(j["acc_cm"] == 1.5);
  CHECK(j["chamfer_cm"] == 2.0);
  CHECK(j["fscore_pct"] == 87.5);

  const auto depth_only = nlohmann::json::parse(report_json(d, std::nullopt));
  CHECK(depth_only.size() == 4);
  CHECK(!depth_only.contains("chamfer_cm"));
  const auto mesh_only = nlohmann::json::parse(report_json(std::nullopt, m));
  CHECK(mesh_only.size() == 4);
  CHECK(!mesh_only.contains("mae_cm"));

  const std::string text = report_text(d, m);
  std::istringstream lines(text);
  std::string line;
  std::vector<std::string> keys;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    REQUIRE(eq != std::string::npos);
    keys.push_back(line.substr(0, eq));
    if (keys.back() == "fscore_pct")
      CHECK(std::strtod(line.c_str() + eq + 1, nullptr) == 87.5);
  }
  CHECK(keys == std::vector<std::string>{"mae_cm", "mre_pct", "rmse_cm",
                                         "delta1_pct", "comp_cm", "acc_cm",
                                         "chamfer_cm", "fscore_pct"});

  // Byte determinism for downstream file comparison.
  CHECK(report_json(d, m) == full);
  CHECK(report_text(d, m) == text);
}
