#include "erpmvs/geometry.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace erpmvs {

ErpIntrinsics::ErpIntrinsics(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0 || w != 2 * h || w % 2 != 0 || h % 2 != 0)
    throw std::invalid_argument("ErpIntrinsics: need even W = 2H, W,H > 0, got " +
                                std::to_string(w) + "x" + std::to_string(h));
}

ErpIntrinsics ErpIntrinsics::scaled_down(int factor) const {
  if (factor < 1 || width % (2 * factor) != 0 || height % (2 * factor) != 0)
    throw std::invalid_argument("ErpIntrinsics: cannot downscale " +
                                std::to_string(width) + "x" + std::to_string(height) +
                                " by " + std::to_string(factor));
  return ErpIntrinsics(width / factor, height / factor);
}

bool Pose::is_valid(double tol) const {
  const Mat3 rtr = rotation.transposed() * rotation;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double expect = (i == j) ? 1.0 : 0.0;
      if (std::abs(rtr(i, j) - expect) > tol) return false;
    }
  return std::abs(rotation.det() - 1.0) <= tol;
}

Pose Pose::inverse() const {
  Pose r;
  r.rotation = rotation.transposed();
  r.translation = -(r.rotation * translation);
  return r;
}

Vec3 Pose::camera_center() const { return -(rotation.transposed() * translation); }

double wrap_angle(double theta) {
  double t = std::fmod(theta + kPi, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t - kPi;
}

PixelCoord project(const SphericalCoord& s, const ErpIntrinsics& k) {
  const double w = static_cast<double>(k.width);
  const double h = static_cast<double>(k.height);
  return {w / kTwoPi * s.theta + 0.5 * w, -h / kPi * s.phi + 0.5 * h};
}

SphericalCoord unproject(const PixelCoord& p, const ErpIntrinsics& k) {
  const double w = static_cast<double>(k.width);
  const double h = static_cast<double>(k.height);
  if (!(p.u >= 0.0 && p.u < w && p.v >= 0.0 && p.v <= h))
    throw std::invalid_argument("unproject: pixel out of range");
  return {(p.u - 0.5 * w) * kTwoPi / w, (0.5 * h - p.v) * kPi / h};
}

Vec3 spherical_to_cartesian(const SphericalCoord& s, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("spherical_to_cartesian: r must be > 0");
  const double cp = std::cos(s.phi);
  return {r * cp * std::sin(s.theta), -r * std::sin(s.phi), r * cp * std::cos(s.theta)};
}

std::pair<SphericalCoord, double> cartesian_to_spherical(const Vec3& p) {
  const double r = p.norm();
  if (!(r > 0.0)) throw std::invalid_argument("cartesian_to_spherical: zero vector");
  double theta = std::atan2(p.x, p.z);
  if (theta >= kPi) theta = -kPi;  // atan2 can return exactly +pi
  // Latitude through atan2 of the axial distance, not asin(-y/r): asin's
  // derivative blows up at the poles and turns one ulp of y/r into ~1e-12
  // of recovered direction, while atan2 stays accurate at every latitude.
  const double axial = std::sqrt(p.x * p.x + p.z * p.z);
  return {{theta, std::atan2(-p.y, axial)}, r};
}

RelativeTransform relative_transform(const Pose& from, const Pose& to) {
  RelativeTransform rt;
  rt.m = to.rotation * from.rotation.transposed();
  rt.c = to.translation - rt.m * from.translation;
  return rt;
}

Vec3 transform_point(const Vec3& p, const Pose& from, const Pose& to) {
  return relative_transform(from, to).apply(p);
}

std::vector<PoseEntry> load_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pose file: " + path);
  std::vector<PoseEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    PoseEntry e;
    if (!(ss >> e.frame_id)) continue;  // blank or comment-only line
    double* vals[12] = {&e.pose.rotation(0, 0), &e.pose.rotation(0, 1),
                        &e.pose.rotation(0, 2), &e.pose.translation.x,
                        &e.pose.rotation(1, 0), &e.pose.rotation(1, 1),
                        &e.pose.rotation(1, 2), &e.pose.translation.y,
                        &e.pose.rotation(2, 0), &e.pose.rotation(2, 1),
                        &e.pose.rotation(2, 2), &e.pose.translation.z};
    for (int i = 0; i < 12; ++i)
      if (!(ss >> *vals[i]))
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": expected 12 pose values");
    if (!e.pose.is_valid(1e-6))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": rotation is not orthonormal with det +1");
    entries.push_back(e);
  }
  return entries;
}

std::string format_pose_line(const PoseEntry& e) {
  char buf[512];
  const Pose& p = e.pose;
  std::snprintf(buf, sizeof(buf),
                "%d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                "%.17g %.17g",
                e.frame_id, p.rotation(0, 0), p.rotation(0, 1), p.rotation(0, 2),
                p.translation.x, p.rotation(1, 0), p.rotation(1, 1), p.rotation(1, 2),
                p.translation.y, p.rotation(2, 0), p.rotation(2, 1), p.rotation(2, 2),
                p.translation.z);
  return buf;
}

void save_pose_file(const std::string& path, const std::vector<PoseEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write pose file: " + path);
  out << "# frame_id r00 r01 r02 tx r10 r11 r12 ty r20 r21 r22 tz (world-to-camera)\n";
  for (const auto& e : entries) out << format_pose_line(e) << "\n";
}

}  // namespace erpmvs
