#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace erpmvs {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double squared_norm() const { return dot(*this); }
  double norm() const { return std::sqrt(squared_norm()); }
  Vec3 normalized() const {
    const double n = norm();
    return {x / n, y / n, z / n};
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return {}; }

  double operator()(int r, int c) const { return m[3 * r + c]; }
  double& operator()(int r, int c) { return m[3 * r + c]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j) +
                  (*this)(i, 2) * o(2, j);
    return r;
  }
  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }
  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }
};

// Longitude/latitude direction on the unit sphere.
// theta in [-pi, pi), phi in [-pi/2, pi/2].
struct SphericalCoord {
  double theta = 0.0;
  double phi = 0.0;
};

// Continuous pixel position; in-image range is [0, W) x [0, H].
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

// Full-sphere equirectangular intrinsics. W = 2H, both even.
struct ErpIntrinsics {
  int width = 0;
  int height = 0;

  ErpIntrinsics() = default;
  ErpIntrinsics(int w, int h);

  ErpIntrinsics scaled_down(int factor) const;
};

// Rigid world-to-camera transform: p_cam = R * p_world + t.
struct Pose {
  Mat3 rotation;
  Vec3 translation;

  static Pose identity() { return {}; }

  // True when R is orthonormal with det +1 (within tol).
  bool is_valid(double tol = 1e-9) const;

  Pose inverse() const;
  Vec3 camera_center() const;  // -R^T t
  Vec3 apply(const Vec3& p_world) const { return rotation * p_world + translation; }
};

// Wraps an angle into [-pi, pi).
double wrap_angle(double theta);

PixelCoord project(const SphericalCoord& s, const ErpIntrinsics& k);
SphericalCoord unproject(const PixelCoord& p, const ErpIntrinsics& k);

Vec3 spherical_to_cartesian(const SphericalCoord& s, double r);
// Returns direction and radius; throws on the zero vector.
std::pair<SphericalCoord, double> cartesian_to_spherical(const Vec3& p);

// Applies to * from^-1 to p. The composed (M, c) form below is the one
// canonical evaluation order; batched code paths reuse it so per-point and
// batched results are bit-identical.
struct RelativeTransform {
  Mat3 m;
  Vec3 c;
  Vec3 apply(const Vec3& p) const { return m * p + c; }
};
RelativeTransform relative_transform(const Pose& from, const Pose& to);
Vec3 transform_point(const Vec3& p, const Pose& from, const Pose& to);

// Pose file: one `frame_id r00 r01 r02 tx r10 r11 r12 ty r20 r21 r22 tz`
// line per frame, `#` comments allowed. Rotations validated on load.
struct PoseEntry {
  int frame_id = 0;
  Pose pose;
};
std::vector<PoseEntry> load_pose_file(const std::string& path);
void save_pose_file(const std::string& path, const std::vector<PoseEntry>& entries);
std::string format_pose_line(const PoseEntry& e);

}  // namespace erpmvs
