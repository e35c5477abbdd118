#include "erpmvs/io/ply.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace erpmvs::io {
namespace {

static_assert(std::endian::native == std::endian::little,
              "ply reader/writer assumes a little-endian host");

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("ply: " + path + ": " + what);
}

}  // namespace

void write_ply(const std::string& path, const TriangleMesh& mesh) {
  if (mesh.colors.size() != mesh.vertices.size())
    throw std::invalid_argument("ply: color count must match vertex count");
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for writing");
  f << "ply\n"
       "format binary_little_endian 1.0\n"
       "element vertex "
    << mesh.vertices.size()
    << "\n"
       "property float x\n"
       "property float y\n"
       "property float z\n"
       "property uchar red\n"
       "property uchar green\n"
       "property uchar blue\n"
       "element face "
    << mesh.faces.size()
    << "\n"
       "property list uchar int vertex_indices\n"
       "end_header\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const float xyz[3] = {static_cast<float>(mesh.vertices[i].x),
                          static_cast<float>(mesh.vertices[i].y),
                          static_cast<float>(mesh.vertices[i].z)};
    f.write(reinterpret_cast<const char*>(xyz), 12);
    f.write(reinterpret_cast<const char*>(mesh.colors[i].data()), 3);
  }
  const auto nvert = static_cast<std::int64_t>(mesh.vertices.size());
  for (const auto& face : mesh.faces) {
    for (int k = 0; k < 3; ++k)
      if (face[k] < 0 || face[k] >= nvert)
        throw std::invalid_argument("ply: face index out of range");
    const std::uint8_t count = 3;
    f.write(reinterpret_cast<const char*>(&count), 1);
    f.write(reinterpret_cast<const char*>(face.data()), 12);
  }
  if (!f) fail(path, "write failed");
}

TriangleMesh read_ply(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open");
  std::string line;
  if (!std::getline(f, line) || line != "ply") fail(path, "bad magic");

  std::size_t n_vertex = 0, n_face = 0;
  bool little = false;
  std::vector<std::string> vertex_props;
  std::string current_element;
  while (std::getline(f, line)) {
    if (line == "end_header") break;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      little = (fmt == "binary_little_endian");
      if (!little) fail(path, "unsupported format '" + fmt + "'");
    } else if (tok == "element") {
      std::size_t n = 0;
      ss >> current_element >> n;
      if (current_element == "vertex") n_vertex = n;
      else if (current_element == "face") n_face = n;
      else fail(path, "unsupported element '" + current_element + "'");
    } else if (tok == "property" && current_element == "vertex") {
      std::string type, name;
      ss >> type >> name;
      vertex_props.push_back(type + " " + name);
    }
  }
  if (!f) fail(path, "truncated header");
  const std::vector<std::string> expected = {
      "float x",    "float y",     "float z",
      "uchar red",  "uchar green", "uchar blue"};
  if (vertex_props != expected) fail(path, "unsupported vertex layout");

  TriangleMesh mesh;
  mesh.vertices.resize(n_vertex);
  mesh.colors.resize(n_vertex);
  for (std::size_t i = 0; i < n_vertex; ++i) {
    float xyz[3];
    f.read(reinterpret_cast<char*>(xyz), 12);
    f.read(reinterpret_cast<char*>(mesh.colors[i].data()), 3);
    if (!f) fail(path, "truncated vertex data");
    mesh.vertices[i] = Vec3{xyz[0], xyz[1], xyz[2]};
  }
  mesh.faces.resize(n_face);
  for (std::size_t i = 0; i < n_face; ++i) {
    std::uint8_t count = 0;
    f.read(reinterpret_cast<char*>(&count), 1);
    if (!f || count != 3) fail(path, "only triangle faces are supported");
    f.read(reinterpret_cast<char*>(mesh.faces[i].data()), 12);
    if (!f) fail(path, "truncated face data");
    for (int k = 0; k < 3; ++k)
      if (mesh.faces[i][k] < 0 ||
          static_cast<std::size_t>(mesh.faces[i][k]) >= n_vertex)
        fail(path, "face index out of range");
  }
  return mesh;
}

}  // namespace erpmvs::io
