// Command-line front end: render / depth / fuse / eval / pipeline.
//
// Configuration resolves in two layers: an optional `key = value` file given
// with --config, then per-field override flags, which always win. Every
// command echoes the fully resolved configuration beside its outputs.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdio>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "erpmvs/pipeline.hpp"

namespace {

using erpmvs::PipelineConfig;

// Registers --config plus one override flag per configuration field on a
// subcommand. resolve() loads the file (when given), applies exactly the
// flags the user passed, and validates the result.
class ConfigArgs {
 public:
  void attach(CLI::App& app) {
    app.add_option("--config", config_path_,
                   "key = value configuration file (flags override it)");
    opt(app, "--d-min", &PipelineConfig::d_min,
        "minimum hypothesis depth in meters");
    opt(app, "--d-max", &PipelineConfig::d_max,
        "maximum hypothesis depth in meters");
    opt(app, "--n-planes", &PipelineConfig::n_planes,
        "number of depth hypotheses");
    opt(app, "--feature-mode", &PipelineConfig::feature_mode,
        "'classical' or 'network'");
    opt(app, "--network-weights", &PipelineConfig::network_weights,
        "feature network weight file (network mode)");
    opt(app, "--feature-radius", &PipelineConfig::feature_radius,
        "classical descriptor patch radius");
    opt(app, "--reducer-mode", &PipelineConfig::reducer_mode,
        "'classical' or 'mlp'");
    opt(app, "--mlp-weights", &PipelineConfig::mlp_weights,
        "scoring head weight file (mlp mode)");
    opt(app, "--extract-mode", &PipelineConfig::extract_mode,
        "'argmax' or 'soft'");
    flag(app, "--median,!--no-median", &PipelineConfig::median_filter,
         "3x3 median filter on the depth map");
    opt(app, "--max-sources", &PipelineConfig::max_sources,
        "source frames per reference when none are given");
    opt(app, "--voxel-size", &PipelineConfig::voxel_size,
        "TSDF voxel edge in meters");
    opt(app, "--trunc", &PipelineConfig::trunc,
        "TSDF truncation in meters (0 = 3 * voxel size)");
    opt(app, "--fscore-threshold", &PipelineConfig::fscore_threshold_cm,
        "F-score distance threshold in cm");
    opt(app, "--mesh-samples", &PipelineConfig::mesh_samples,
        "surface samples per mesh for mesh metrics");
    opt(app, "--w-grad", &PipelineConfig::w_grad, "gradient loss weight");
    opt(app, "--w-normals", &PipelineConfig::w_normals, "normal loss weight");
    opt(app, "--w-mv", &PipelineConfig::w_mv, "multi-view loss weight");
    opt(app, "--threads", &PipelineConfig::threads, "worker thread count");
    opt(app, "--seed", &PipelineConfig::seed, "sampling seed");
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (!config_path_.empty()) cfg = erpmvs::read_config_file(config_path_);
    for (const auto& apply : appliers_) apply(cfg);
    cfg.validate();
    return cfg;
  }

 private:
  template <typename T>
  void opt(CLI::App& app, const std::string& name, T PipelineConfig::*field,
           const std::string& desc) {
    auto store = std::make_shared<T>();
    CLI::Option* o = app.add_option(name, *store, desc);
    appliers_.push_back([o, store, field](PipelineConfig& cfg) {
      if (o->count() > 0) cfg.*field = *store;
    });
  }

  void flag(CLI::App& app, const std::string& name,
            bool PipelineConfig::*field, const std::string& desc) {
    auto store = std::make_shared<bool>(false);
    CLI::Option* o = app.add_flag(name, *store, desc);
    appliers_.push_back([o, store, field](PipelineConfig& cfg) {
      if (o->count() > 0) cfg.*field = *store;
    });
  }

  std::string config_path_;
  std::vector<std::function<void(PipelineConfig&)>> appliers_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view depth estimation and fusion for equirectangular "
               "panoramas"};
  app.require_subcommand(1);
  std::function<void()> run;

  struct {
    std::string scene, out;
    ConfigArgs cfg;
  } render;
  CLI::App* render_cmd = app.add_subcommand(
      "render", "Render a synthetic scene to frames plus ground truth");
  render_cmd->add_option("--scene", render.scene, "scene description file")
      ->required();
  render_cmd->add_option("--out", render.out, "output directory")->required();
  render.cfg.attach(*render_cmd);
  render_cmd->callback([&] {
    run = [&] { erpmvs::cmd_render(render.scene, render.out,
                                   render.cfg.resolve()); };
  });

  struct {
    std::string frames, out;
    int ref = 0;
    std::vector<int> src;
    ConfigArgs cfg;
  } depth;
  CLI::App* depth_cmd = app.add_subcommand(
      "depth", "Estimate depth for one reference frame");
  depth_cmd->add_option("--frames", depth.frames,
                        "directory with frame_NNNN.png and poses.txt")
      ->required();
  depth_cmd->add_option("--ref", depth.ref, "reference frame id")->required();
  depth_cmd->add_option("--src", depth.src,
                        "source frame ids (default: nearest by id)")
      ->delimiter(',');
  depth_cmd->add_option("--out", depth.out, "output directory")->required();
  depth.cfg.attach(*depth_cmd);
  depth_cmd->callback([&] {
    run = [&] { erpmvs::cmd_depth(depth.frames, depth.ref, depth.src,
                                  depth.out, depth.cfg.resolve()); };
  });

  struct {
    std::string frames, depths, prefix = "pred_", out;
    ConfigArgs cfg;
  } fuse;
  CLI::App* fuse_cmd = app.add_subcommand(
      "fuse", "Fuse depth maps into a TSDF and extract a mesh");
  fuse_cmd->add_option("--frames", fuse.frames,
                       "directory with frame_NNNN.png and poses.txt")
      ->required();
  fuse_cmd->add_option("--depths", fuse.depths,
                       "directory with <prefix>NNNN.pfm depth maps")
      ->required();
  fuse_cmd->add_option("--prefix", fuse.prefix,
                       "depth file prefix (default pred_)");
  fuse_cmd->add_option("--out", fuse.out, "output directory")->required();
  fuse.cfg.attach(*fuse_cmd);
  fuse_cmd->callback([&] {
    run = [&] { erpmvs::cmd_fuse(fuse.frames, fuse.depths, fuse.prefix,
                                 fuse.out, fuse.cfg.resolve()); };
  });

  struct {
    std::string kind, pred, gt, out;
    ConfigArgs cfg;
  } eval;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Compare a prediction against ground truth");
  eval_cmd->add_option("--kind", eval.kind, "'depth' (PFM) or 'mesh' (PLY)")
      ->required()
      ->check(CLI::IsMember({"depth", "mesh"}));
  eval_cmd->add_option("--pred", eval.pred, "prediction file")->required();
  eval_cmd->add_option("--gt", eval.gt, "ground truth file")->required();
  eval_cmd->add_option("--out", eval.out, "output directory")->required();
  eval.cfg.attach(*eval_cmd);
  eval_cmd->callback([&] {
    run = [&] {
      erpmvs::cmd_eval(eval.kind == "depth" ? erpmvs::EvalKind::kDepth
                                            : erpmvs::EvalKind::kMesh,
                       eval.pred, eval.gt, eval.out, eval.cfg.resolve());
    };
  });

  struct {
    std::string scene, out;
    ConfigArgs cfg;
  } pipe;
  CLI::App* pipe_cmd = app.add_subcommand(
      "pipeline", "render -> depth -> fuse -> eval end to end");
  pipe_cmd->add_option("--scene", pipe.scene, "scene description file")
      ->required();
  pipe_cmd->add_option("--out", pipe.out, "output directory")->required();
  pipe.cfg.attach(*pipe_cmd);
  pipe_cmd->callback([&] {
    run = [&] { erpmvs::cmd_pipeline(pipe.scene, pipe.out,
                                     pipe.cfg.resolve()); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (run) run();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
