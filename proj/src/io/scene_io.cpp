#include "erpmvs/io/scene_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace erpmvs::io {
namespace {

[[noreturn]] void fail(const std::string& path, int line_no,
                       const std::string& what) {
  throw std::runtime_error("scene: " + path + ":" + std::to_string(line_no) +
                           ": " + what);
}

Texture parse_texture(std::istringstream& ss, const std::string& path,
                      int line_no) {
  std::string kind;
  ss >> kind;
  Texture tex;
  if (kind == "solid") {
    tex.kind = Texture::Kind::kSolid;
    ss >> tex.color_a.x >> tex.color_a.y >> tex.color_a.z;
  } else if (kind == "checker" || kind == "gradient") {
    tex.kind = kind == "checker" ? Texture::Kind::kChecker
                                 : Texture::Kind::kGradient;
    ss >> tex.scale >> tex.color_a.x >> tex.color_a.y >> tex.color_a.z >>
        tex.color_b.x >> tex.color_b.y >> tex.color_b.z;
    if (ss && !(tex.scale > 0.0)) fail(path, line_no, "texture scale must be positive");
  } else {
    fail(path, line_no, "unknown texture '" + kind + "'");
  }
  if (!ss) fail(path, line_no, "malformed texture parameters");
  return tex;
}

std::string format_texture(const Texture& tex) {
  char buf[256];
  switch (tex.kind) {
    case Texture::Kind::kSolid:
      std::snprintf(buf, sizeof buf, "solid %.17g %.17g %.17g", tex.color_a.x,
                    tex.color_a.y, tex.color_a.z);
      break;
    case Texture::Kind::kChecker:
    case Texture::Kind::kGradient:
      std::snprintf(buf, sizeof buf, "%s %.17g %.17g %.17g %.17g %.17g %.17g %.17g",
                    tex.kind == Texture::Kind::kChecker ? "checker" : "gradient",
                    tex.scale, tex.color_a.x, tex.color_a.y, tex.color_a.z,
                    tex.color_b.x, tex.color_b.y, tex.color_b.z);
      break;
  }
  return buf;
}

}  // namespace

SceneSpec read_scene(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("scene: cannot open " + path);
  SceneSpec spec;
  spec.width = 0;
  spec.height = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "resolution") {
      ss >> spec.width >> spec.height;
      if (!ss) fail(path, line_no, "malformed resolution");
    } else if (tag == "room" || tag == "box") {
      Primitive prim;
      prim.kind = tag == "room" ? Primitive::Kind::kRoom : Primitive::Kind::kBox;
      ss >> prim.center.x >> prim.center.y >> prim.center.z >> prim.size.x >>
          prim.size.y >> prim.size.z;
      if (!ss) fail(path, line_no, "malformed " + tag);
      if (!(prim.size.x > 0.0) || !(prim.size.y > 0.0) || !(prim.size.z > 0.0))
        fail(path, line_no, tag + " needs positive size");
      prim.texture = parse_texture(ss, path, line_no);
      spec.primitives.push_back(prim);
    } else if (tag == "sphere") {
      Primitive prim;
      prim.kind = Primitive::Kind::kSphere;
      ss >> prim.center.x >> prim.center.y >> prim.center.z >> prim.radius;
      if (!ss) fail(path, line_no, "malformed sphere");
      if (!(prim.radius > 0.0)) fail(path, line_no, "sphere needs positive radius");
      prim.texture = parse_texture(ss, path, line_no);
      spec.primitives.push_back(prim);
    } else if (tag == "camera") {
      Pose pose;
      ss >> pose.rotation.m[0] >> pose.rotation.m[1] >> pose.rotation.m[2] >>
          pose.translation.x >> pose.rotation.m[3] >> pose.rotation.m[4] >>
          pose.rotation.m[5] >> pose.translation.y >> pose.rotation.m[6] >>
          pose.rotation.m[7] >> pose.rotation.m[8] >> pose.translation.z;
      if (!ss) fail(path, line_no, "malformed camera");
      if (!pose.is_valid(1e-6)) fail(path, line_no, "camera rotation is not orthonormal");
      spec.cameras.push_back(pose);
    } else {
      fail(path, line_no, "unknown directive '" + tag + "'");
    }
  }
  if (spec.width <= 0 || spec.height <= 0)
    throw std::runtime_error("scene: " + path + ": missing resolution");
  try {
    spec.intrinsics();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("scene: " + path + ": " + e.what());
  }
  if (spec.primitives.empty())
    throw std::runtime_error("scene: " + path + ": no primitives");
  if (spec.cameras.empty())
    throw std::runtime_error("scene: " + path + ": no cameras");
  return spec;
}

void write_scene(const std::string& path, const SceneSpec& spec) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("scene: cannot open " + path + " for writing");
  f << "resolution " << spec.width << " " << spec.height << "\n";
  char buf[512];
  for (const Primitive& prim : spec.primitives) {
    switch (prim.kind) {
      case Primitive::Kind::kRoom:
      case Primitive::Kind::kBox:
        std::snprintf(buf, sizeof buf, "%s %.17g %.17g %.17g %.17g %.17g %.17g ",
                      prim.kind == Primitive::Kind::kRoom ? "room" : "box",
                      prim.center.x, prim.center.y, prim.center.z, prim.size.x,
                      prim.size.y, prim.size.z);
        break;
      case Primitive::Kind::kSphere:
        std::snprintf(buf, sizeof buf, "sphere %.17g %.17g %.17g %.17g ",
                      prim.center.x, prim.center.y, prim.center.z, prim.radius);
        break;
    }
    f << buf << format_texture(prim.texture) << "\n";
  }
  for (const Pose& pose : spec.cameras) {
    std::snprintf(buf, sizeof buf,
                  "camera %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                  "%.17g %.17g %.17g %.17g",
                  pose.rotation.m[0], pose.rotation.m[1], pose.rotation.m[2],
                  pose.translation.x, pose.rotation.m[3], pose.rotation.m[4],
                  pose.rotation.m[5], pose.translation.y, pose.rotation.m[6],
                  pose.rotation.m[7], pose.rotation.m[8], pose.translation.z);
    f << buf << "\n";
  }
  if (!f) throw std::runtime_error("scene: write failed for " + path);
}

}  // namespace erpmvs::io
