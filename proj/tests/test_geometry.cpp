#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <erpmvs/geometry.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

using namespace erpmvs;

namespace {

Mat3 rotation_z(double a) {
  Mat3 r = Mat3::identity();
  r.m[0] = std::cos(a);
  r.m[1] = -std::sin(a);
  r.m[3] = std::sin(a);
  r.m[4] = std::cos(a);
  return r;
}

Mat3 rotation_y(double a) {
  Mat3 r = Mat3::identity();
  r.m[0] = std::cos(a);
  r.m[2] = std::sin(a);
  r.m[6] = -std::sin(a);
  r.m[8] = std::cos(a);
  return r;
}

}  // namespace

TEST_CASE("intrinsics validation") {
  CHECK_NOTHROW(ErpIntrinsics(512, 256));
  CHECK_THROWS_AS(ErpIntrinsics(512, 255), std::invalid_argument);
  CHECK_THROWS_AS(ErpIntrinsics(510, 256), std::invalid_argument);  // W != 2H
  CHECK_THROWS_AS(ErpIntrinsics(513, 256), std::invalid_argument);  // odd
  CHECK_THROWS_AS(ErpIntrinsics(0, 0), std::invalid_argument);
  ErpIntrinsics half = ErpIntrinsics(512, 256).scaled_down(2);
  CHECK(half.width == 256);
  CHECK(half.height == 128);
  CHECK_THROWS_AS(ErpIntrinsics(4, 2).scaled_down(4), std::invalid_argument);
}

TEST_CASE("image center maps to forward direction") {
  ErpIntrinsics intr(512, 256);
  SphericalCoord s = unproject(PixelCoord{256.0, 128.0}, intr);
  CHECK(s.theta == 0.0);
  CHECK(s.phi == 0.0);
  PixelCoord p = project(SphericalCoord{0.0, 0.0}, intr);
  CHECK(p.u == 256.0);
  CHECK(p.v == 128.0);
}

TEST_CASE("corners and seam") {
  ErpIntrinsics intr(512, 256);
  SphericalCoord tl = unproject(PixelCoord{0.0, 0.0}, intr);
  CHECK(tl.theta == doctest::Approx(-kPi).epsilon(1e-15));
  CHECK(tl.phi == doctest::Approx(kPi / 2).epsilon(1e-15));
  // v = H is the south pole edge of the continuous domain.
  SphericalCoord bl = unproject(PixelCoord{0.0, 256.0}, intr);
  CHECK(bl.phi == doctest::Approx(-kPi / 2).epsilon(1e-15));
  CHECK_THROWS_AS(unproject(PixelCoord{512.0, 0.0}, intr), std::invalid_argument);
  CHECK_THROWS_AS(unproject(PixelCoord{-0.001, 0.0}, intr), std::invalid_argument);
  CHECK_THROWS_AS(unproject(PixelCoord{0.0, 256.001}, intr), std::invalid_argument);
}

TEST_CASE("project/unproject round trip") {
  ErpIntrinsics intr(512, 256);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> du(0.0, 512.0);
  std::uniform_real_distribution<double> dv(0.0, 256.0);
  double max_du = 0.0, max_dv = 0.0;
  for (int i = 0; i < 100000; ++i) {
    PixelCoord p{du(rng), dv(rng)};
    PixelCoord q = project(unproject(p, intr), intr);
    max_du = std::max(max_du, std::abs(q.u - p.u));
    max_dv = std::max(max_dv, std::abs(q.v - p.v));
  }
  CHECK(max_du < 1e-9);
  CHECK(max_dv < 1e-9);
}

TEST_CASE("axis directions in camera frame") {
  // forward (+z) is theta=0,phi=0; right (+x) is theta=+pi/2; up (-y) is phi=+pi/2
  SphericalCoord fwd = cartesian_to_spherical(Vec3{0, 0, 1}).first;
  CHECK(fwd.theta == 0.0);
  CHECK(fwd.phi == 0.0);
  SphericalCoord right = cartesian_to_spherical(Vec3{1, 0, 0}).first;
  CHECK(right.theta == doctest::Approx(kPi / 2).epsilon(1e-15));
  SphericalCoord up = cartesian_to_spherical(Vec3{0, -1, 0}).first;
  CHECK(up.phi == doctest::Approx(kPi / 2).epsilon(1e-15));
  // theta = +pi wraps to -pi so the seam has one representation
  SphericalCoord back = cartesian_to_spherical(Vec3{0, 0, -1}).first;
  CHECK(back.theta == doctest::Approx(-kPi).epsilon(1e-15));
}

TEST_CASE("spherical/cartesian round trip preserves radius and angles") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dt(-kPi, kPi);
  std::uniform_real_distribution<double> dp(-kPi / 2, kPi / 2);
  std::uniform_real_distribution<double> dr(0.01, 100.0);
  for (int i = 0; i < 100000; ++i) {
    SphericalCoord s{dt(rng), dp(rng)};
    double r = dr(rng);
    Vec3 p = spherical_to_cartesian(s, r);
    auto [s2, r2] = cartesian_to_spherical(p);
    CHECK(std::abs(r2 - r) < 1e-9 * r);
    CHECK(std::abs(s2.phi - s.phi) < 1e-9);
    // theta is degenerate at the poles; compare only away from them
    if (std::abs(s.phi) < kPi / 2 - 1e-6) {
      double dt_wrapped = std::abs(wrap_angle(s2.theta - s.theta));
      CHECK(dt_wrapped < 1e-9);
    }
  }
}

TEST_CASE("pose apply and inverse") {
  Pose pose;
  pose.rotation = rotation_z(0.3) * rotation_y(-1.1);
  pose.translation = Vec3{0.5, -2.0, 1.25};
  CHECK(pose.is_valid(1e-12));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-10.0, 10.0);
  Pose inv = pose.inverse();
  for (int i = 0; i < 1000; ++i) {
    Vec3 p{d(rng), d(rng), d(rng)};
    Vec3 q{d(rng), d(rng), d(rng)};
    // isometry: pairwise distances preserved
    double before = (p - q).norm();
    double after = (pose.apply(p) - pose.apply(q)).norm();
    CHECK(std::abs(after - before) < 1e-9);
    // inverse undoes apply
    Vec3 back = inv.apply(pose.apply(p));
    CHECK((back - p).norm() < 1e-9);
  }
  // camera center maps to the origin of the camera frame
  Vec3 c = pose.camera_center();
  CHECK(pose.apply(c).norm() < 1e-12);

  Pose bad;
  bad.rotation.m[0] = 2.0;
  CHECK(!bad.is_valid());
}

TEST_CASE("relative transform matches pose composition bitwise") {
  Pose a, b;
  a.rotation = rotation_y(0.7);
  a.translation = Vec3{1, 2, 3};
  b.rotation = rotation_z(-0.2) * rotation_y(0.25);
  b.translation = Vec3{-0.5, 0.75, 2};
  RelativeTransform rt = relative_transform(a, b);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    Vec3 p{d(rng), d(rng), d(rng)};
    Vec3 via_public = transform_point(p, a, b);
    Vec3 via_rt = rt.apply(p);
    CHECK(via_public.x == via_rt.x);
    CHECK(via_public.y == via_rt.y);
    CHECK(via_public.z == via_rt.z);
    // and it agrees with world-frame composition to rounding
    Vec3 world = a.inverse().apply(p);
    Vec3 ref = b.apply(world);
    CHECK((via_rt - ref).norm() < 1e-9);
  }
}

TEST_CASE("pose file round trip with comments and invalid rotations") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "erpmvs_test_geometry";
  fs::create_directories(dir);
  fs::path file = dir / "poses.txt";

  std::vector<PoseEntry> entries;
  for (int i = 0; i < 4; ++i) {
    PoseEntry e;
    e.frame_id = i;
    e.pose.rotation = rotation_z(0.1 * i) * rotation_y(0.05 * i);
    e.pose.translation = Vec3{0.1 * i, -0.2 * i, 0.3 * i};
    entries.push_back(e);
  }
  save_pose_file(file.string(), entries);

  // prepend a comment line, should be ignored
  {
    std::string text = "# camera trajectory\n";
    FILE* f = std::fopen(file.string().c_str(), "r");
    REQUIRE(f);
    char buf[4096];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
    std::fclose(f);
    f = std::fopen(file.string().c_str(), "w");
    REQUIRE(f);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
  }

  std::vector<PoseEntry> loaded = load_pose_file(file.string());
  REQUIRE(loaded.size() == entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    CHECK(loaded[i].frame_id == entries[i].frame_id);
    for (int k = 0; k < 9; ++k)
      CHECK(loaded[i].pose.rotation.m[k] ==
            doctest::Approx(entries[i].pose.rotation.m[k]).epsilon(1e-15));
    CHECK((loaded[i].pose.translation - entries[i].pose.translation).norm() < 1e-15);
  }

  // a non-rotation matrix in the file must be rejected
  {
    FILE* f = std::fopen(file.string().c_str(), "w");
    REQUIRE(f);
    std::fprintf(f, "0 2 0 0 0 0 1 0 0 0 0 1 0\n");
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_pose_file(file.string()), std::runtime_error);
  fs::remove_all(dir);
}
