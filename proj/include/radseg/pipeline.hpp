/* Copyright 2026 The radseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// End-to-end runs behind the radseg CLI. Directory layouts are described in
// docs/formats.md.
#ifndef RADSEG_PIPELINE_HPP_
#define RADSEG_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "radseg/bundle.hpp"
#include "radseg/lang_align.hpp"
#include "radseg/mapper3d.hpp"
#include "radseg/metrics.hpp"
#include "radseg/refine.hpp"
#include "radseg/windows.hpp"

namespace radseg {

struct RunConfig {
  std::filesystem::path bundle;

  // Named preset ("voc"/"stuff"/"ctx-ade"/"city" x "low"/"mid"/"high") or
  // explicit geometry. When both are given they must agree.
  std::optional<std::string> dataset;
  std::optional<std::string> resolution;
  std::optional<std::size_t> shorter_side;
  std::optional<std::size_t> crop;
  std::optional<std::size_t> stride;

  float tau_scra = kDefaultScraTemperature;
  float tau_scga = kDefaultScgaTemperature;
  bool enable_scra = true;
  bool enable_scga = true;
  bool enable_refine = false;
  std::optional<float> logit_scale;  // falls back to the bundle's scale
  ProbabilityMode probability_mode = ProbabilityMode::kSoftmax;
  bool write_probabilities = false;

  std::size_t scga_cell_cap = kDefaultScgaCellCap;
  bool scga_tiling = true;

  std::optional<std::filesystem::path> refine_masks_dir;
  std::size_t min_region_area = 64;
  PromptOptions prompt;

  LiftMode lift_mode = LiftMode::kFeature;
  double voxel_size = kDefaultVoxelSize;
  std::size_t frame_skip = 10;
  double max_depth = kDefaultMaxDepth;

  std::filesystem::path output_dir;
  std::optional<std::size_t> workers;

  // Resolved geometry, or nullopt when nothing was configured (plans are then
  // taken from the features directory as-is).
  std::optional<ResolutionPreset> geometry() const;
};

// Relative paths in the file are resolved against its directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json(const std::string& text,
                           const std::filesystem::path& base_dir = {});
std::string config_to_json(const RunConfig& config);

// One image of an exported features directory.
struct ImageWindows {
  std::string name;
  WindowPlan plan;
  ImageSize output_size;
  std::size_t num_special = 0;
  std::vector<Matrix> windows;  // N x D tokens per planned window
};

std::vector<std::string> list_images(const std::filesystem::path& features_dir);
ImageWindows load_image_windows(const std::filesystem::path& features_dir,
                                const std::string& name);

struct ImageResult {
  FeatureMap aligned;
  ClassLogits logits;
  LabelMap labels;
};

// SCRA per window (optional), aggregation, SCGA (optional), adaptor,
// similarity, upsampling and argmax for one image.
ImageResult segment_image(const RunConfig& config, const WeightBundle& bundle,
                          const TextBank& bank, const ImageWindows& image,
                          std::size_t workers);

struct Segment2dSummary {
  std::vector<std::string> images;
  std::size_t refined_images = 0;
};

// Writes labels/<name>.rstf (i32 [H, W]) and scores/<name>.rstf (f32 [H, W])
// under out_dir, plus refine/<name>/ prompts when refinement is enabled.
Segment2dSummary segment2d(const RunConfig& config, const std::filesystem::path& features_dir,
                           const std::filesystem::path& out_dir);

enum class PayloadKind { kFeature, kProbability };

std::vector<std::string> list_frames(const std::filesystem::path& frames_dir);
PayloadKind frames_payload_kind(const std::filesystem::path& frames_dir);
CameraFrame load_frame(const std::filesystem::path& frame_dir);
void write_frame(const std::filesystem::path& frame_dir, const CameraFrame& frame);

struct Map3dSummary {
  std::size_t frames_used = 0;
  std::size_t voxels = 0;
  std::uint64_t points = 0;
};

// Builds the voxel map from every frame_skip-th frame and writes keys.rstf
// (u64 [N]), means.rstf (f32 [N, C]), counts.rstf (u64 [N]) and labels.rstf
// (i32 [N]) into out_dir.
Map3dSummary map3d(const RunConfig& config, const std::filesystem::path& frames_dir,
                   const std::filesystem::path& out_dir);
VoxelMap build_voxel_map(const RunConfig& config, const TextBank& bank, float logit_scale,
                         const std::filesystem::path& frames_dir, std::size_t workers,
                         Map3dSummary* summary = nullptr);

struct EvalOptions {
  std::optional<std::size_t> num_classes;
  std::set<std::int32_t> ignore;
  std::vector<std::string> class_names;
};

struct EvalResult {
  ConfusionMatrix confusion;
  std::size_t files = 0;
  std::uint64_t unmatched_voxels = 0;
};

// Pixel mode: every <name>.rstf in gt_dir must have a same-named prediction
// and vice versa. Voxel mode (both dirs hold keys.rstf): samples are joined on
// voxel keys; ground-truth voxels without a prediction are counted in
// unmatched_voxels and not scored.
EvalResult evaluate(const std::filesystem::path& pred_dir,
                    const std::filesystem::path& gt_dir, const EvalOptions& options);

struct GoldenCase {
  std::string name;
  double scra_rel_error = 0.0;
  double adaptor_rel_error = 0.0;
};

// Compares SCRA and adaptor outputs against reference tensors from the
// exporter. Each subdirectory of golden_dir holds meta.json
// ({"num_special": S, "grid": [r, c], "tau": t}), window.rstf (N x D tokens),
// scra.rstf (N x D) and adaptor.rstf (num_patch x D_t, adaptor applied to the
// raw patch tokens). Errors are max|a - b| / max|b|.
std::vector<GoldenCase> compare_golden(const WeightBundle& bundle,
                                       const std::filesystem::path& golden_dir);

// max|a - b| / max|b| over equally sized matrices.
double max_relative_error(const Matrix& actual, const Matrix& expected);

}  // namespace radseg

#endif  // RADSEG_PIPELINE_HPP_
