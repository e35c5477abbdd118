#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "erpmvs/eval_metrics.hpp"

namespace erpmvs {

// Every knob of the end-to-end reconstruction. Defaults run the weight-free
// classical path; the learned feature extractor and cost reducer activate
// when weight files are supplied.
struct PipelineConfig {
  // Depth hypothesis schedule (log-uniform, endpoints inclusive).
  double d_min = 0.25;
  double d_max = 8.0;
  int n_planes = 64;

  // Feature extraction: "classical" (weight-free descriptor) or "network"
  // (requires `network_weights`, a feature-network stack file).
  std::string feature_mode = "classical";
  std::string network_weights;
  int feature_radius = 2;  // classical descriptor patch radius

  // Cost reduction: "classical" (mean matching score) or "mlp" (requires
  // `mlp_weights`, a scoring-head file).
  std::string reducer_mode = "classical";
  std::string mlp_weights;

  // Depth readout: "argmax" or "soft", plus an optional 3x3 median filter.
  std::string extract_mode = "soft";
  bool median_filter = false;

  // Depth maps from each reference frame use this many nearest-by-index
  // source frames when no explicit source list is given.
  int max_sources = 2;

  // Fusion. trunc = 0 means the fuser default of 3 * voxel_size.
  double voxel_size = 0.04;
  double trunc = 0.0;

  // Evaluation.
  double fscore_threshold_cm = 5.0;
  int mesh_samples = 200000;
  double w_grad = 1.0;
  double w_normals = 1.0;
  double w_mv = 0.2;

  int threads = 1;
  std::uint64_t seed = kDefaultSampleSeed;

  // Throws std::invalid_argument on any out-of-range or inconsistent field.
  void validate() const;
};

// Line-oriented `key = value` text; `#` starts a comment, blank lines are
// skipped, unknown keys are rejected, later duplicates win. Keys are the
// PipelineConfig field names. String values may be empty; every config
// produced by config_text() parses back to an identical config.
PipelineConfig parse_config_text(const std::string& text);
PipelineConfig read_config_file(const std::string& path);
std::string config_text(const PipelineConfig& cfg);
void write_config_file(const std::string& path, const PipelineConfig& cfg);

// Command bodies behind the command-line tool, callable in-process. All of
// them create `out_dir` if needed and write the fully resolved config beside
// their outputs as config.txt. Missing inputs and bad arguments throw
// std::invalid_argument (usage errors); failures during execution throw
// std::runtime_error.

// Renders every camera of a scene description: frame_%04d.png,
// depth_%04d.pfm (ground truth, NaN = no surface), poses.txt, gt_mesh.ply.
void cmd_render(const std::string& scene_path, const std::string& out_dir,
                const PipelineConfig& cfg);

// Estimates depth for one reference frame from rendered frames + poses.
// Empty `src_indices` selects up to cfg.max_sources nearest-by-index frames.
// Writes pred_%04d.pfm and conf_%04d.pfm (mode probability mass).
void cmd_depth(const std::string& frames_dir, int ref_index,
               std::vector<int> src_indices, const std::string& out_dir,
               const PipelineConfig& cfg);

// Fuses every depth map named <prefix>%04d.pfm that matches a pose into a
// TSDF over an automatically fitted grid; writes tsdf.bin and mesh.ply.
void cmd_fuse(const std::string& frames_dir, const std::string& depths_dir,
              const std::string& prefix, const std::string& out_dir,
              const PipelineConfig& cfg);

// Compares a prediction file against ground truth and writes report.json +
// report.txt. Depth kind reads PFM depth maps; mesh kind reads PLY meshes.
enum class EvalKind { kDepth, kMesh };
void cmd_eval(EvalKind kind, const std::string& pred_path,
              const std::string& gt_path, const std::string& out_dir,
              const PipelineConfig& cfg);

// render -> depth for every frame -> fuse -> eval, under out_dir/render,
// out_dir/depth, out_dir/fuse. The final report pools depth metrics over
// every frame's pixels and evaluates the fused mesh against the exact scene
// mesh; report.json and report.txt land in out_dir.
void cmd_pipeline(const std::string& scene_path, const std::string& out_dir,
                  const PipelineConfig& cfg);

}  // namespace erpmvs
