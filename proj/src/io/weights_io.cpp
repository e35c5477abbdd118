#include "erpmvs/io/weights_io.hpp"

#include <bit>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace erpmvs::io {
namespace {

static_assert(std::endian::native == std::endian::little,
              "weight files assume a little-endian host");

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("weights: " + path + ": " + what);
}

void write_f32(std::ostream& os, const std::vector<float>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * 4));
}

void read_f32(std::istream& is, std::vector<float>& v, const std::string& path) {
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * 4));
  if (!is) fail(path, "truncated weight data");
}

void write_conv_payload(std::ostream& os, const ConvWeights& w) {
  os << "SPHK " << w.size << " " << w.in_ch << " " << w.out_ch << "\n";
  write_f32(os, w.w);
}

ConvWeights read_conv_payload(std::istream& is, const std::string& path) {
  std::string line;
  if (!std::getline(is, line)) fail(path, "missing kernel header");
  std::istringstream ss(line);
  std::string magic;
  int size = 0, in_ch = 0, out_ch = 0;
  ss >> magic >> size >> in_ch >> out_ch;
  if (!ss || magic != "SPHK") fail(path, "bad kernel header '" + line + "'");
  ConvWeights w;
  try {
    w = ConvWeights(size, in_ch, out_ch);
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  read_f32(is, w.w, path);
  return w;
}

}  // namespace

void write_conv_weights(const std::string& path, const ConvWeights& w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for writing");
  write_conv_payload(f, w);
  if (!f) fail(path, "write failed");
}

ConvWeights read_conv_weights(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open");
  return read_conv_payload(f, path);
}

void write_mlp_weights(const std::string& path, const MlpWeights& w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for writing");
  f << "SMLP " << w.layers.size() << "\n";
  for (const MlpLayer& layer : w.layers) {
    f << layer.rows << " " << layer.cols << " "
      << (layer.activation == MlpLayer::Activation::kRelu ? "relu" : "linear")
      << "\n";
    write_f32(f, layer.weights);
    write_f32(f, layer.bias);
  }
  if (!f) fail(path, "write failed");
}

MlpWeights read_mlp_weights(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open");
  std::string line;
  if (!std::getline(f, line)) fail(path, "missing header");
  std::istringstream ss(line);
  std::string magic;
  int n_layers = 0;
  ss >> magic >> n_layers;
  if (!ss || magic != "SMLP" || n_layers <= 0)
    fail(path, "bad header '" + line + "'");
  MlpWeights w;
  for (int i = 0; i < n_layers; ++i) {
    if (!std::getline(f, line)) fail(path, "missing layer header");
    std::istringstream ls(line);
    MlpLayer layer;
    std::string act;
    ls >> layer.rows >> layer.cols >> act;
    if (!ls || layer.rows <= 0 || layer.cols <= 0)
      fail(path, "bad layer header '" + line + "'");
    if (act == "relu") layer.activation = MlpLayer::Activation::kRelu;
    else if (act == "linear") layer.activation = MlpLayer::Activation::kLinear;
    else fail(path, "unknown activation '" + act + "'");
    layer.weights.resize(static_cast<std::size_t>(layer.rows) * layer.cols);
    layer.bias.resize(static_cast<std::size_t>(layer.rows));
    read_f32(f, layer.weights, path);
    read_f32(f, layer.bias, path);
    w.layers.push_back(std::move(layer));
  }
  return w;
}

void write_network_weights(const std::string& path,
                           const std::vector<FusedBlock>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("network has no blocks");
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for writing");
  f << "SPHN " << blocks.size() << "\n";
  for (const FusedBlock& b : blocks) {
    f << "block " << (b.pool ? 1 : 0) << "\n";
    write_conv_payload(f, b.regular);
    write_conv_payload(f, b.sphere);
  }
  if (!f) fail(path, "write failed");
}

std::vector<FusedBlock> read_network_weights(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open");
  std::string line;
  if (!std::getline(f, line)) fail(path, "missing header");
  std::istringstream ss(line);
  std::string magic;
  int n_blocks = 0;
  ss >> magic >> n_blocks;
  if (!ss || magic != "SPHN" || n_blocks <= 0)
    fail(path, "bad header '" + line + "'");
  std::vector<FusedBlock> blocks;
  for (int i = 0; i < n_blocks; ++i) {
    if (!std::getline(f, line)) fail(path, "missing block header");
    std::istringstream bs(line);
    std::string tag;
    int pool = 0;
    bs >> tag >> pool;
    if (!bs || tag != "block" || (pool != 0 && pool != 1))
      fail(path, "bad block header '" + line + "'");
    FusedBlock b;
    b.pool = pool != 0;
    b.regular = read_conv_payload(f, path);
    b.sphere = read_conv_payload(f, path);
    if (b.regular.out_ch != b.sphere.out_ch ||
        b.regular.in_ch != b.sphere.in_ch)
      fail(path, "fused block branches disagree on channels");
    blocks.push_back(std::move(b));
  }
  return blocks;
}

}  // namespace erpmvs::io
