#include "erpmvs/pipeline.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "erpmvs/feature_pipeline.hpp"
#include "erpmvs/geometry.hpp"
#include "erpmvs/image.hpp"
#include "erpmvs/io/pfm.hpp"
#include "erpmvs/io/ply.hpp"
#include "erpmvs/io/png_io.hpp"
#include "erpmvs/io/scene_io.hpp"
#include "erpmvs/io/weights_io.hpp"
#include "erpmvs/sweep_volume.hpp"
#include "erpmvs/synth_scenes.hpp"
#include "erpmvs/tsdf_fusion.hpp"

namespace fs = std::filesystem;

namespace erpmvs {
namespace {

// Grids larger than this (roughly 1.8 GB of voxel state) are almost always a
// sign of outlier depths inflating the auto-fitted bounds.
constexpr std::int64_t kMaxGridVoxels = 160'000'000;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("bad value for config key '" + key + "': '" +
                              value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (pos != value.size() || !std::isfinite(v)) bad_value(key, value);
  return v;
}

int parse_int(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (pos != value.size() || v < INT_MIN || v > INT_MAX) bad_value(key, value);
  return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  if (value.empty() || value[0] == '-') bad_value(key, value);
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (pos != value.size()) bad_value(key, value);
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  bad_value(key, value);
}

void apply_entry(PipelineConfig& c, const std::string& key,
                 const std::string& value) {
  if (key == "d_min") c.d_min = parse_double(key, value);
  else if (key == "d_max") c.d_max = parse_double(key, value);
  else if (key == "n_planes") c.n_planes = parse_int(key, value);
  else if (key == "feature_mode") c.feature_mode = value;
  else if (key == "network_weights") c.network_weights = value;
  else if (key == "feature_radius") c.feature_radius = parse_int(key, value);
  else if (key == "reducer_mode") c.reducer_mode = value;
  else if (key == "mlp_weights") c.mlp_weights = value;
  else if (key == "extract_mode") c.extract_mode = value;
  else if (key == "median_filter") c.median_filter = parse_bool(key, value);
  else if (key == "max_sources") c.max_sources = parse_int(key, value);
  else if (key == "voxel_size") c.voxel_size = parse_double(key, value);
  else if (key == "trunc") c.trunc = parse_double(key, value);
  else if (key == "fscore_threshold_cm")
    c.fscore_threshold_cm = parse_double(key, value);
  else if (key == "mesh_samples") c.mesh_samples = parse_int(key, value);
  else if (key == "w_grad") c.w_grad = parse_double(key, value);
  else if (key == "w_normals") c.w_normals = parse_double(key, value);
  else if (key == "w_mv") c.w_mv = parse_double(key, value);
  else if (key == "threads") c.threads = parse_int(key, value);
  else if (key == "seed") c.seed = parse_u64(key, value);
  else throw std::invalid_argument("unknown config key: '" + key + "'");
}

void append_kv(std::string& out, const char* key, const std::string& value) {
  out += key;
  out += " = ";
  out += value;
  out += '\n';
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(int v) { return std::to_string(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string numbered(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%04d%s", stem, index, ext);
  return buf;
}

void require_file(const std::string& path) {
  if (!fs::exists(path))
    throw std::invalid_argument("missing input: " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create directory " + dir + ": " +
                             ec.message());
}

void echo_config(const std::string& dir, const PipelineConfig& cfg) {
  write_config_file(join(dir, "config.txt"), cfg);
}

std::vector<PoseEntry> load_frame_poses(const std::string& frames_dir) {
  const std::string path = join(frames_dir, "poses.txt");
  require_file(path);
  std::vector<PoseEntry> poses = load_pose_file(path);
  if (poses.empty())
    throw std::invalid_argument("pose file is empty: " + path);
  return poses;
}

const Pose& pose_of(const std::vector<PoseEntry>& poses, int frame_id) {
  for (const PoseEntry& e : poses)
    if (e.frame_id == frame_id) return e.pose;
  throw std::invalid_argument("frame " + std::to_string(frame_id) +
                              " not in pose file");
}

// Nearest frames by index distance, ties toward the smaller id.
std::vector<int> pick_sources(int ref_id, const std::vector<PoseEntry>& poses,
                              int max_sources) {
  std::vector<int> ids;
  for (const PoseEntry& e : poses)
    if (e.frame_id != ref_id) ids.push_back(e.frame_id);
  std::sort(ids.begin(), ids.end(), [ref_id](int a, int b) {
    const int da = std::abs(a - ref_id), db = std::abs(b - ref_id);
    return da != db ? da < db : a < b;
  });
  if (static_cast<int>(ids.size()) > max_sources) ids.resize(max_sources);
  return ids;
}

// Reduces an RGB frame to the resolution of its depth map (feature pooling
// halves dimensions); the factor must be an exact power of two.
Image match_depth_resolution(Image img, const DepthMap& depth,
                             const std::string& what) {
  while (img.width > depth.width && img.width % 2 == 0 && img.height % 2 == 0)
    img = downsample2(img);
  if (img.width != depth.width || img.height != depth.height)
    throw std::invalid_argument(
        what + ": frame resolution " + std::to_string(img.width) + "x" +
        std::to_string(img.height) + " does not reduce to depth resolution " +
        std::to_string(depth.width) + "x" + std::to_string(depth.height));
  return img;
}

}  // namespace

void PipelineConfig::validate() const {
  const auto fail = [](const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
  };
  if (!(d_min > 0.0) || !(d_max > d_min) || !std::isfinite(d_max))
    fail("need 0 < d_min < d_max");
  if (n_planes < 2) fail("n_planes must be >= 2");
  if (feature_mode != "classical" && feature_mode != "network")
    fail("feature_mode must be 'classical' or 'network'");
  if (feature_mode == "network" && network_weights.empty())
    fail("feature_mode 'network' needs network_weights");
  if (feature_radius < 0) fail("feature_radius must be >= 0");
  if (reducer_mode != "classical" && reducer_mode != "mlp")
    fail("reducer_mode must be 'classical' or 'mlp'");
  if (reducer_mode == "mlp" && mlp_weights.empty())
    fail("reducer_mode 'mlp' needs mlp_weights");
  if (extract_mode != "argmax" && extract_mode != "soft")
    fail("extract_mode must be 'argmax' or 'soft'");
  if (max_sources < 1) fail("max_sources must be >= 1");
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size))
    fail("voxel_size must be > 0");
  if (!(trunc >= 0.0) || !std::isfinite(trunc))
    fail("trunc must be >= 0 (0 = 3 * voxel_size)");
  if (!(fscore_threshold_cm > 0.0) || !std::isfinite(fscore_threshold_cm))
    fail("fscore_threshold_cm must be > 0");
  if (mesh_samples < 1) fail("mesh_samples must be >= 1");
  if (!(w_grad >= 0.0) || !(w_normals >= 0.0) || !(w_mv >= 0.0) ||
      !std::isfinite(w_grad) || !std::isfinite(w_normals) ||
      !std::isfinite(w_mv))
    fail("loss weights must be finite and >= 0");
  if (threads < 1) fail("threads must be >= 1");
}

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": expected 'key = value', got '" +
                                  trim(line) + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": empty config key");
    apply_entry(cfg, key, value);
  }
  return cfg;
}

PipelineConfig read_config_file(const std::string& path) {
  require_file(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::string config_text(const PipelineConfig& c) {
  std::string s;
  append_kv(s, "d_min", num(c.d_min));
  append_kv(s, "d_max", num(c.d_max));
  append_kv(s, "n_planes", num(c.n_planes));
  append_kv(s, "feature_mode", c.feature_mode);
  append_kv(s, "network_weights", c.network_weights);
  append_kv(s, "feature_radius", num(c.feature_radius));
  append_kv(s, "reducer_mode", c.reducer_mode);
  append_kv(s, "mlp_weights", c.mlp_weights);
  append_kv(s, "extract_mode", c.extract_mode);
  append_kv(s, "median_filter", c.median_filter ? "on" : "off");
  append_kv(s, "max_sources", num(c.max_sources));
  append_kv(s, "voxel_size", num(c.voxel_size));
  append_kv(s, "trunc", num(c.trunc));
  append_kv(s, "fscore_threshold_cm", num(c.fscore_threshold_cm));
  append_kv(s, "mesh_samples", num(c.mesh_samples));
  append_kv(s, "w_grad", num(c.w_grad));
  append_kv(s, "w_normals", num(c.w_normals));
  append_kv(s, "w_mv", num(c.w_mv));
  append_kv(s, "threads", num(c.threads));
  append_kv(s, "seed", num(c.seed));
  return s;
}

void write_config_file(const std::string& path, const PipelineConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << config_text(cfg);
  if (!out) throw std::runtime_error("failed writing config file: " + path);
}

void cmd_render(const std::string& scene_path, const std::string& out_dir,
                const PipelineConfig& cfg) {
  cfg.validate();
  require_file(scene_path);
  const SceneSpec spec = io::read_scene(scene_path);
  if (spec.cameras.empty())
    throw std::invalid_argument("scene has no cameras: " + scene_path);
  ensure_dir(out_dir);
  std::vector<PoseEntry> entries;
  for (int i = 0; i < static_cast<int>(spec.cameras.size()); ++i) {
    const RenderResult r = render_view(spec, i, cfg.threads);
    io::write_png(join(out_dir, numbered("frame_", i, ".png")), r.image);
    io::write_pfm_depth(join(out_dir, numbered("depth_", i, ".pfm")), r.depth);
    entries.push_back({i, spec.cameras[i]});
  }
  save_pose_file(join(out_dir, "poses.txt"), entries);
  io::write_ply(join(out_dir, "gt_mesh.ply"), scene_mesh(spec));
  echo_config(out_dir, cfg);
  std::printf("rendered %d frames (%dx%d) into %s\n",
              static_cast<int>(spec.cameras.size()), spec.width, spec.height,
              out_dir.c_str());
}

void cmd_depth(const std::string& frames_dir, int ref_index,
               std::vector<int> src_indices, const std::string& out_dir,
               const PipelineConfig& cfg) {
  cfg.validate();
  const std::vector<PoseEntry> poses = load_frame_poses(frames_dir);
  const Pose& ref_pose = pose_of(poses, ref_index);
  if (src_indices.empty()) {
    src_indices = pick_sources(ref_index, poses, cfg.max_sources);
    if (src_indices.empty())
      throw std::invalid_argument(
          "no source frames available (pose file lists only the reference)");
  }

  std::vector<FusedBlock> net;
  const bool use_net = cfg.feature_mode == "network";
  if (use_net) {
    require_file(cfg.network_weights);
    net = io::read_network_weights(cfg.network_weights);
  }
  const auto features_of = [&](int id) {
    const std::string path = join(frames_dir, numbered("frame_", id, ".png"));
    require_file(path);
    const Image gray = to_grayscale(io::read_png(path));
    return use_net ? network_features(gray, net, cfg.threads)
                   : classical_features(gray, cfg.feature_radius, cfg.threads);
  };

  const Image ref_feat = features_of(ref_index);
  const ErpIntrinsics intr(ref_feat.width, ref_feat.height);
  std::vector<Image> src_feats;
  std::vector<Pose> src_poses;
  for (int id : src_indices) {
    const Pose& sp = pose_of(poses, id);
    if ((sp.camera_center() - ref_pose.camera_center()).norm() < 1e-9)
      std::fprintf(stderr,
                   "warning: zero baseline between frames %d and %d\n",
                   ref_index, id);
    src_feats.push_back(features_of(id));
    src_poses.push_back(sp);
  }

  MlpWeights mlp;
  CostReducer reducer = CostReducer::classical();
  if (cfg.reducer_mode == "mlp") {
    require_file(cfg.mlp_weights);
    mlp = io::read_mlp_weights(cfg.mlp_weights);
    reducer = CostReducer::learned(mlp);
  }

  const DepthHypotheses hyps =
      make_hypotheses(cfg.d_min, cfg.d_max, cfg.n_planes);
  const DepthMode mode =
      cfg.extract_mode == "argmax" ? DepthMode::kArgmax : DepthMode::kSoft;
  const SweepResult res =
      sweep_depth(ref_feat, ref_pose, src_feats, src_poses, hyps, intr,
                  reducer, mode, cfg.median_filter, cfg.threads);

  ensure_dir(out_dir);
  io::write_pfm_depth(join(out_dir, numbered("pred_", ref_index, ".pfm")),
                      res.depth);
  io::write_pfm(join(out_dir, numbered("conf_", ref_index, ".pfm")),
                res.confidence);
  echo_config(out_dir, cfg);
  std::printf("frame %d: depth from %d sources at %dx%d into %s\n", ref_index,
              static_cast<int>(src_feats.size()), res.depth.width,
              res.depth.height, out_dir.c_str());
}

void cmd_fuse(const std::string& frames_dir, const std::string& depths_dir,
              const std::string& prefix, const std::string& out_dir,
              const PipelineConfig& cfg) {
  cfg.validate();
  const std::vector<PoseEntry> poses = load_frame_poses(frames_dir);

  struct FrameInput {
    int id;
    Pose pose;
    std::string depth_path;
    std::string image_path;
  };
  std::vector<FrameInput> frames;
  for (const PoseEntry& e : poses) {
    const std::string dp =
        join(depths_dir, numbered(prefix.c_str(), e.frame_id, ".pfm"));
    if (!fs::exists(dp)) continue;
    const std::string ip =
        join(frames_dir, numbered("frame_", e.frame_id, ".png"));
    require_file(ip);
    frames.push_back({e.frame_id, e.pose, dp, ip});
  }
  if (frames.empty())
    throw std::invalid_argument("no depth maps named " + prefix +
                                "NNNN.pfm in " + depths_dir +
                                " match the pose file");

  // First pass: fit the grid to the back-projected depth samples.
  int width = 0, height = 0;
  std::vector<Vec3> rays;
  Vec3 lo, hi;
  bool any = false;
  for (const FrameInput& f : frames) {
    const DepthMap d = io::read_pfm_depth(f.depth_path);
    if (width == 0) {
      width = d.width;
      height = d.height;
      const ErpIntrinsics intr(width, height);
      rays.reserve(static_cast<std::size_t>(width) * height);
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
          rays.push_back(spherical_to_cartesian(
              unproject(PixelCoord{static_cast<double>(x),
                                   static_cast<double>(y)},
                        intr),
              1.0));
    } else if (d.width != width || d.height != height) {
      throw std::invalid_argument(f.depth_path + ": resolution differs from " +
                                  frames.front().depth_path);
    }
    const Pose cam_to_world = f.pose.inverse();
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        if (!d.is_valid(x, y)) continue;
        const double r = d.at(x, y);
        if (!(r > 0.0)) continue;
        const Vec3 p = cam_to_world.apply(rays[d.index(x, y)] * r);
        if (!any) {
          lo = hi = p;
          any = true;
        } else {
          lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
          hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
      }
  }
  if (!any)
    throw std::invalid_argument("depth maps contain no valid pixels");

  const double pad =
      (cfg.trunc > 0.0 ? cfg.trunc : 3.0 * cfg.voxel_size) +
      0.5 * cfg.voxel_size;
  lo = lo - Vec3{pad, pad, pad};
  hi = hi + Vec3{pad, pad, pad};
  std::int64_t rough = 1;
  for (double span : {hi.x - lo.x, hi.y - lo.y, hi.z - lo.z})
    rough *= static_cast<std::int64_t>(std::ceil(span / cfg.voxel_size)) + 1;
  if (rough > kMaxGridVoxels)
    throw std::runtime_error(
        "TSDF grid would need about " + std::to_string(rough) +
        " voxels; increase voxel_size or remove outlier depths");

  TsdfGrid grid = TsdfGrid::covering(lo, hi, cfg.voxel_size);
  FusionParams params;
  params.truncation = cfg.trunc;
  params.threads = cfg.threads;
  const ErpIntrinsics intr(width, height);
  for (const FrameInput& f : frames) {
    const DepthMap d = io::read_pfm_depth(f.depth_path);
    const Image img =
        match_depth_resolution(io::read_png(f.image_path), d, f.image_path);
    integrate_frame(grid, d, img, f.pose, intr, params);
  }

  ensure_dir(out_dir);
  save_tsdf(join(out_dir, "tsdf.bin"), grid);
  const TriangleMesh mesh = extract_mesh(grid, 0.0);
  io::write_ply(join(out_dir, "mesh.ply"), mesh);
  echo_config(out_dir, cfg);
  std::printf(
      "fused %d frames into a %dx%dx%d grid; mesh: %d vertices, %d faces\n",
      static_cast<int>(frames.size()), grid.nx, grid.ny, grid.nz,
      static_cast<int>(mesh.vertices.size()),
      static_cast<int>(mesh.faces.size()));
}

void cmd_eval(EvalKind kind, const std::string& pred_path,
              const std::string& gt_path, const std::string& out_dir,
              const PipelineConfig& cfg) {
  cfg.validate();
  require_file(pred_path);
  require_file(gt_path);
  std::optional<DepthMetrics> dm;
  std::optional<MeshMetrics> mm;
  if (kind == EvalKind::kDepth) {
    dm = depth_metrics(io::read_pfm_depth(pred_path),
                       io::read_pfm_depth(gt_path));
  } else {
    mm = mesh_metrics(io::read_ply(pred_path), io::read_ply(gt_path),
                      cfg.fscore_threshold_cm, cfg.mesh_samples, cfg.seed);
  }
  ensure_dir(out_dir);
  const std::string txt = report_text(dm, mm);
  {
    std::ofstream out(join(out_dir, "report.json"), std::ios::binary);
    out << report_json(dm, mm);
  }
  {
    std::ofstream out(join(out_dir, "report.txt"), std::ios::binary);
    out << txt;
  }
  echo_config(out_dir, cfg);
  std::fputs(txt.c_str(), stdout);
}

void cmd_pipeline(const std::string& scene_path, const std::string& out_dir,
                  const PipelineConfig& cfg) {
  cfg.validate();
  ensure_dir(out_dir);
  echo_config(out_dir, cfg);
  const std::string render_dir = join(out_dir, "render");
  const std::string depth_dir = join(out_dir, "depth");
  const std::string fuse_dir = join(out_dir, "fuse");

  cmd_render(scene_path, render_dir, cfg);
  const std::vector<PoseEntry> poses = load_frame_poses(render_dir);
  for (const PoseEntry& e : poses)
    cmd_depth(render_dir, e.frame_id, {}, depth_dir, cfg);
  cmd_fuse(render_dir, depth_dir, "pred_", fuse_dir, cfg);

  // Depth metrics pool the pixels of every frame; all frames share one
  // resolution, so the maps are stacked into one tall evaluation grid.
  const int n = static_cast<int>(poses.size());
  DepthMap pred_all, gt_all;
  for (int i = 0; i < n; ++i) {
    const int id = poses[i].frame_id;
    const DepthMap pred =
        io::read_pfm_depth(join(depth_dir, numbered("pred_", id, ".pfm")));
    const DepthMap gt =
        io::read_pfm_depth(join(render_dir, numbered("depth_", id, ".pfm")));
    if (pred.width != gt.width || pred.height != gt.height)
      throw std::invalid_argument(
          "depth evaluation needs prediction and ground truth at one "
          "resolution; use pooling-free features for end-to-end runs");
    if (i == 0) {
      pred_all = DepthMap(pred.width, pred.height * n);
      gt_all = DepthMap(gt.width, gt.height * n);
    }
    const std::size_t offset =
        static_cast<std::size_t>(i) * pred.width * pred.height;
    std::copy(pred.depth.begin(), pred.depth.end(),
              pred_all.depth.begin() + offset);
    std::copy(pred.valid.begin(), pred.valid.end(),
              pred_all.valid.begin() + offset);
    std::copy(gt.depth.begin(), gt.depth.end(), gt_all.depth.begin() + offset);
    std::copy(gt.valid.begin(), gt.valid.end(), gt_all.valid.begin() + offset);
  }
  const std::optional<DepthMetrics> dm = depth_metrics(pred_all, gt_all);
  const std::optional<MeshMetrics> mm = mesh_metrics(
      io::read_ply(join(fuse_dir, "mesh.ply")),
      io::read_ply(join(render_dir, "gt_mesh.ply")), cfg.fscore_threshold_cm,
      cfg.mesh_samples, cfg.seed);

  const std::string txt = report_text(dm, mm);
  {
    std::ofstream out(join(out_dir, "report.json"), std::ios::binary);
    out << report_json(dm, mm);
  }
  {
    std::ofstream out(join(out_dir, "report.txt"), std::ios::binary);
    out << txt;
  }
  std::fputs(txt.c_str(), stdout);
}

}  // namespace erpmvs
