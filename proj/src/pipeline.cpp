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
#include "radseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "radseg/errors.hpp"
#include "radseg/parallel.hpp"
#include "radseg/tensor_store.hpp"

namespace radseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << text << "\n";
}

std::string indexed(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%03zu.rstf", i);
  return buf;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return (p.is_relative() && !base.empty()) ? base / p : p;
}

template <typename T>
std::optional<T> opt(const json& doc, const char* key) {
  if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
  return doc[key].get<T>();
}

}  // namespace

std::optional<ResolutionPreset> RunConfig::geometry() const {
  if (dataset.has_value() != resolution.has_value()) {
    throw InputError("a named preset needs both dataset and resolution");
  }
  std::optional<ResolutionPreset> preset;
  if (dataset) {
    preset = resolution_preset(parse_dataset_family(*dataset), parse_resolution(*resolution));
  }
  const bool any_explicit = shorter_side || crop || stride;
  if (!preset && !any_explicit) return std::nullopt;
  if (!preset) {
    if (!(shorter_side && crop && stride)) {
      throw InputError("explicit geometry needs shorter_side, crop and stride");
    }
    return ResolutionPreset{*shorter_side, *crop, *stride};
  }
  if ((shorter_side && *shorter_side != preset->shorter_side) ||
      (crop && *crop != preset->crop) || (stride && *stride != preset->stride)) {
    throw InputError("explicit geometry contradicts preset " + *dataset + "/" + *resolution);
  }
  return preset;
}

RunConfig config_from_json(const std::string& text, const fs::path& base_dir) {
  RunConfig c;
  try {
    const json doc = json::parse(text);
    if (auto b = opt<std::string>(doc, "bundle")) c.bundle = resolve(base_dir, *b);
    c.dataset = opt<std::string>(doc, "dataset");
    c.resolution = opt<std::string>(doc, "resolution");
    c.shorter_side = opt<std::size_t>(doc, "shorter_side");
    c.crop = opt<std::size_t>(doc, "crop");
    c.stride = opt<std::size_t>(doc, "stride");
    c.tau_scra = doc.value("tau_scra", c.tau_scra);
    c.tau_scga = doc.value("tau_scga", c.tau_scga);
    c.enable_scra = doc.value("enable_scra", c.enable_scra);
    c.enable_scga = doc.value("enable_scga", c.enable_scga);
    c.enable_refine = doc.value("enable_refine", c.enable_refine);
    c.logit_scale = opt<float>(doc, "logit_scale");
    const std::string pmode = doc.value("probability_mode", std::string("softmax"));
    if (pmode == "softmax") {
      c.probability_mode = ProbabilityMode::kSoftmax;
    } else if (pmode == "onehot") {
      c.probability_mode = ProbabilityMode::kOneHot;
    } else {
      throw InputError("probability_mode must be softmax or onehot");
    }
    c.write_probabilities = doc.value("write_probabilities", c.write_probabilities);
    c.scga_cell_cap = doc.value("scga_cell_cap", c.scga_cell_cap);
    c.scga_tiling = doc.value("scga_tiling", c.scga_tiling);
    if (auto r = opt<std::string>(doc, "refine_masks_dir")) {
      c.refine_masks_dir = resolve(base_dir, *r);
    }
    c.min_region_area = doc.value("min_region_area", c.min_region_area);
    c.prompt.num_points = doc.value("prompt_points", c.prompt.num_points);
    c.prompt.dedup_radius = doc.value("prompt_radius", c.prompt.dedup_radius);
    c.prompt.mask_grid = doc.value("mask_grid", c.prompt.mask_grid);
    const std::string lmode = doc.value("lift_mode", std::string("feature"));
    if (lmode == "feature") {
      c.lift_mode = LiftMode::kFeature;
    } else if (lmode == "probability") {
      c.lift_mode = LiftMode::kProbability;
    } else {
      throw InputError("lift_mode must be feature or probability");
    }
    c.voxel_size = doc.value("voxel_size", c.voxel_size);
    c.frame_skip = doc.value("frame_skip", c.frame_skip);
    c.max_depth = doc.value("max_depth", c.max_depth);
    if (auto o = opt<std::string>(doc, "output_dir")) c.output_dir = resolve(base_dir, *o);
    c.workers = opt<std::size_t>(doc, "workers");
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed run config: ") + e.what());
  }
  if (!(c.tau_scra > 0.0f) || !(c.tau_scga > 0.0f)) {
    throw InputError("temperatures must be positive");
  }
  if (c.frame_skip == 0) throw InputError("frame_skip must be >= 1");
  c.geometry();  // validates preset consistency
  return c;
}

RunConfig load_config(const fs::path& path) {
  return config_from_json(read_text(path), path.parent_path());
}

std::string config_to_json(const RunConfig& c) {
  auto maybe = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  json doc = {
      {"bundle", c.bundle.string()},
      {"dataset", maybe(c.dataset)},
      {"resolution", maybe(c.resolution)},
      {"shorter_side", maybe(c.shorter_side)},
      {"crop", maybe(c.crop)},
      {"stride", maybe(c.stride)},
      {"tau_scra", c.tau_scra},
      {"tau_scga", c.tau_scga},
      {"enable_scra", c.enable_scra},
      {"enable_scga", c.enable_scga},
      {"enable_refine", c.enable_refine},
      {"logit_scale", maybe(c.logit_scale)},
      {"probability_mode",
       c.probability_mode == ProbabilityMode::kSoftmax ? "softmax" : "onehot"},
      {"write_probabilities", c.write_probabilities},
      {"scga_cell_cap", c.scga_cell_cap},
      {"scga_tiling", c.scga_tiling},
      {"min_region_area", c.min_region_area},
      {"prompt_points", c.prompt.num_points},
      {"prompt_radius", c.prompt.dedup_radius},
      {"mask_grid", c.prompt.mask_grid},
      {"lift_mode", c.lift_mode == LiftMode::kFeature ? "feature" : "probability"},
      {"voxel_size", c.voxel_size},
      {"frame_skip", c.frame_skip},
      {"max_depth", c.max_depth},
  };
  doc["refine_masks_dir"] =
      c.refine_masks_dir ? json(c.refine_masks_dir->string()) : json(nullptr);
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// 2D

std::vector<std::string> list_images(const fs::path& features_dir) {
  if (!fs::is_directory(features_dir)) {
    throw InputError("features directory " + features_dir.string() + " does not exist");
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(features_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "plan.json")) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw InputError("no images with plan.json under " + features_dir.string());
  return names;
}

ImageWindows load_image_windows(const fs::path& features_dir, const std::string& name) {
  const fs::path dir = features_dir / name;
  const std::string text = read_text(dir / "plan.json");
  ImageWindows img;
  img.name = name;
  img.plan = plan_from_json(text);
  try {
    const json doc = json::parse(text);
    img.num_special = doc.at("num_special").get<std::size_t>();
    if (doc.contains("output_size")) {
      img.output_size = {doc["output_size"].at(0).get<std::size_t>(),
                         doc["output_size"].at(1).get<std::size_t>()};
    } else {
      img.output_size = img.plan.image;
    }
  } catch (const json::exception& e) {
    throw InputError(name + "/plan.json: " + e.what());
  }
  for (std::size_t w = 0; w < img.plan.windows.size(); ++w) {
    const fs::path p = dir / "windows" / indexed(w);
    if (!fs::exists(p)) throw InputError("missing window tensor " + p.string());
    img.windows.push_back(read_tensor(p).to_matrix());
  }
  return img;
}

ImageResult segment_image(const RunConfig& config, const WeightBundle& bundle,
                          const TextBank& bank, const ImageWindows& image,
                          std::size_t workers) {
  const WindowPlan& plan = image.plan;
  if (plan.patch_size != static_cast<std::size_t>(bundle.meta.patch_size)) {
    throw InputError(image.name + ": plan patch size " + std::to_string(plan.patch_size) +
                     " does not match bundle patch size " +
                     std::to_string(bundle.meta.patch_size));
  }
  if (image.num_special != static_cast<std::size_t>(bundle.meta.num_special_tokens)) {
    throw InputError(image.name + ": windows carry " + std::to_string(image.num_special) +
                     " special tokens, bundle expects " +
                     std::to_string(bundle.meta.num_special_tokens));
  }
  if (const auto g = config.geometry()) {
    const std::size_t shorter = std::min(plan.image.height, plan.image.width);
    if (plan.crop != g->crop || plan.stride != g->stride || shorter != g->shorter_side) {
      throw InputError(image.name + ": exported plan geometry " + std::to_string(shorter) +
                       "-" + std::to_string(plan.crop) + "-" + std::to_string(plan.stride) +
                       " differs from configured " + std::to_string(g->shorter_side) + "-" +
                       std::to_string(g->crop) + "-" + std::to_string(g->stride));
    }
  }
  const WindowPlan expected = plan_windows(plan.image, plan.crop, plan.stride, plan.patch_size);
  if (!(expected == plan)) {
    throw InputError(image.name + ": exported window offsets differ from the planned grid");
  }

  const GridShape local = plan.window_grid();
  std::vector<Matrix> patch_features(image.windows.size());
  parallel_for(image.windows.size(), workers, [&](std::size_t w) {
    TokenMatrix tokens{image.windows[w], image.num_special, local};
    tokens.check_shape();
    if (config.enable_scra) tokens = scra(tokens, bundle, config.tau_scra);
    patch_features[w] = tokens.patch_tokens();
  });

  FeatureMap map = aggregate_windows(plan, patch_features);
  if (config.enable_scga) {
    map = scga(map, config.tau_scga,
               ScgaOptions{config.scga_cell_cap, config.scga_tiling, 256});
  }
  ImageResult result;
  result.aligned = apply_cls_adaptor(map, bundle);
  result.logits = similarity_logits(result.aligned, bank);
  result.labels = segment(result.logits, image.output_size);
  return result;
}

Segment2dSummary segment2d(const RunConfig& config, const fs::path& features_dir,
                           const fs::path& out_dir) {
  if (config.bundle.empty()) throw InputError("run config names no bundle");
  const WeightBundle bundle = load_bundle(config.bundle);
  const TextBank bank = text_bank_from(bundle);
  const std::size_t workers = resolve_workers(config.workers);
  const float scale = config.logit_scale.value_or(bundle.logit_scale);

  Segment2dSummary summary;
  summary.images = list_images(features_dir);
  fs::create_directories(out_dir / "labels");
  fs::create_directories(out_dir / "scores");
  for (const auto& name : summary.images) {
    const ImageWindows image = load_image_windows(features_dir, name);
    ImageResult r = segment_image(config, bundle, bank, image, workers);
    const std::vector<std::uint64_t> hw = {r.labels.size.height, r.labels.size.width};

    if (config.write_probabilities) {
      fs::create_directories(out_dir / "probs");
      const ProbabilityMap probs = probabilities(r.logits, scale, config.probability_mode);
      write_tensor(out_dir / "probs" / (name + ".rstf"),
                   Tensor::from_f32({r.logits.grid.rows, r.logits.grid.cols,
                                     r.logits.num_classes()},
                                    probs.probs.values()));
    }

    if (config.enable_refine) {
      const auto components = extract_components(r.labels, config.min_region_area);
      const PromptSet prompts =
          make_prompts(components, r.labels.size, r.labels.scores, config.prompt);
      write_prompts(out_dir / "refine" / name, prompts);
      if (config.refine_masks_dir &&
          fs::exists(*config.refine_masks_dir / name / "masks.json")) {
        const RefinedMasks masks = read_refined_masks(*config.refine_masks_dir / name,
                                                      r.labels.size, prompts.prompts.size());
        std::vector<std::int32_t> classes;
        for (const auto& p : prompts.prompts) classes.push_back(p.class_id);
        fs::create_directories(out_dir / "coarse");
        write_tensor(out_dir / "coarse" / (name + ".rstf"),
                     Tensor::from_i32(hw, r.labels.labels));
        r.labels = fuse_masks(r.labels, masks, classes);
        ++summary.refined_images;
      }
    }
    write_tensor(out_dir / "labels" / (name + ".rstf"), Tensor::from_i32(hw, r.labels.labels));
    write_tensor(out_dir / "scores" / (name + ".rstf"), Tensor::from_f32(hw, r.labels.scores));
  }
  json run = json::parse(config_to_json(config));
  run["images"] = summary.images;
  run["refined_images"] = summary.refined_images;
  write_text(out_dir / "run.json", run.dump(2));
  return summary;
}

// ---------------------------------------------------------------------------
// 3D

std::vector<std::string> list_frames(const fs::path& frames_dir) {
  if (!fs::is_directory(frames_dir)) {
    throw InputError("frames directory " + frames_dir.string() + " does not exist");
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "depth.rstf")) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw InputError("no frames under " + frames_dir.string());
  return names;
}

PayloadKind frames_payload_kind(const fs::path& frames_dir) {
  const fs::path meta = frames_dir / "meta.json";
  if (!fs::exists(meta)) return PayloadKind::kFeature;
  try {
    const std::string kind = json::parse(read_text(meta)).value("payload", "feature");
    if (kind == "feature") return PayloadKind::kFeature;
    if (kind == "probability") return PayloadKind::kProbability;
    throw InputError("frames meta.json payload must be feature or probability");
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed frames meta.json: ") + e.what());
  }
}

CameraFrame load_frame(const fs::path& dir) {
  CameraFrame f;
  const Tensor pose = read_tensor(dir / "pose.rstf");
  if (pose.dims != std::vector<std::uint64_t>{4, 4}) {
    throw ShapeError(dir.string() + ": pose must be [4, 4]");
  }
  const auto pv = pose.to_f32();
  std::copy(pv.begin(), pv.end(), f.pose.begin());
  const auto intr = read_tensor(dir / "intrinsics.rstf").to_f32();
  if (intr.size() != 4) throw ShapeError(dir.string() + ": intrinsics must hold 4 values");
  f.intrinsics = {intr[0], intr[1], intr[2], intr[3]};
  const Tensor depth = read_tensor(dir / "depth.rstf");
  if (depth.dims.size() != 2) throw ShapeError(dir.string() + ": depth must be [H, W]");
  f.size = {depth.dims[0], depth.dims[1]};
  f.depth = depth.to_f32();
  const Tensor payload = read_tensor(dir / "payload.rstf");
  if (payload.dims.size() != 3) throw ShapeError(dir.string() + ": payload must be [h, w, C]");
  f.payload_grid = {payload.dims[0], payload.dims[1]};
  f.payload = Matrix(payload.dims[0] * payload.dims[1], payload.dims[2], payload.to_f32());
  f.validate();
  return f;
}

void write_frame(const fs::path& dir, const CameraFrame& f) {
  fs::create_directories(dir);
  std::vector<float> pose(f.pose.begin(), f.pose.end());
  write_tensor(dir / "pose.rstf", Tensor::from_f32({4, 4}, pose));
  const std::vector<float> intr = {static_cast<float>(f.intrinsics.fx),
                                   static_cast<float>(f.intrinsics.fy),
                                   static_cast<float>(f.intrinsics.cx),
                                   static_cast<float>(f.intrinsics.cy)};
  write_tensor(dir / "intrinsics.rstf", Tensor::from_f32({4}, intr));
  write_tensor(dir / "depth.rstf", Tensor::from_f32({f.size.height, f.size.width}, f.depth));
  write_tensor(dir / "payload.rstf",
               Tensor::from_f32({f.payload_grid.rows, f.payload_grid.cols, f.payload.cols()},
                                f.payload.values()));
}

VoxelMap build_voxel_map(const RunConfig& config, const TextBank& bank, float logit_scale,
                         const fs::path& frames_dir, std::size_t workers,
                         Map3dSummary* summary) {
  const auto names = list_frames(frames_dir);
  const PayloadKind kind = frames_payload_kind(frames_dir);
  if (kind == PayloadKind::kProbability && config.lift_mode == LiftMode::kFeature) {
    throw InputError("feature-space lifting needs feature payloads, frames hold probabilities");
  }
  const std::size_t channels =
      config.lift_mode == LiftMode::kFeature ? bank.embeddings.cols() : bank.num_classes();
  const bool to_probs = kind == PayloadKind::kFeature && config.lift_mode == LiftMode::kProbability;

  std::vector<std::string> selected;
  for (std::size_t i = 0; i < names.size(); i += config.frame_skip) selected.push_back(names[i]);

  VoxelMap map(config.voxel_size, channels);
  std::uint64_t points = 0;
  const std::size_t batch = std::max<std::size_t>(1, workers);
  for (std::size_t begin = 0; begin < selected.size(); begin += batch) {
    const std::size_t end = std::min(selected.size(), begin + batch);
    std::vector<PointCloud> clouds(end - begin);
    parallel_for(end - begin, workers, [&](std::size_t i) {
      CameraFrame frame = load_frame(frames_dir / selected[begin + i]);
      const std::size_t width = to_probs ? bank.embeddings.cols() : channels;
      if (frame.payload.cols() != width) {
        throw InputError(selected[begin + i] + ": payload width " +
                         std::to_string(frame.payload.cols()) + ", expected " +
                         std::to_string(width));
      }
      if (to_probs) {
        Matrix logits = cosine_logits(frame.payload, bank);
        class_probabilities_inplace(logits, logit_scale, config.probability_mode);
        frame.payload = std::move(logits);
      }
      clouds[i] = backproject(frame, BackprojectOptions{config.max_depth});
    });
    for (const auto& cloud : clouds) {
      map.integrate(cloud);
      points += cloud.size();
    }
  }
  if (map.total_hits() != points) {
    throw InvariantError("voxel hit count disagrees with integrated point count");
  }
  if (summary) {
    summary->frames_used = selected.size();
    summary->voxels = map.size();
    summary->points = points;
  }
  return map;
}

Map3dSummary map3d(const RunConfig& config, const fs::path& frames_dir, const fs::path& out_dir) {
  if (config.bundle.empty()) throw InputError("run config names no bundle");
  const WeightBundle bundle = load_bundle(config.bundle);
  const TextBank bank = text_bank_from(bundle);
  const float scale = config.logit_scale.value_or(bundle.logit_scale);
  Map3dSummary summary;
  const VoxelMap map =
      build_voxel_map(config, bank, scale, frames_dir, resolve_workers(config.workers), &summary);
  const VoxelExport ex = map.export_sorted();
  const VoxelLabels labels = query_map(map, bank, config.lift_mode);

  fs::create_directories(out_dir);
  const std::uint64_t n = ex.keys.size();
  if (n == 0) throw InputError("no valid depth points were integrated");
  write_tensor(out_dir / "keys.rstf", Tensor::from_u64({n}, ex.keys));
  write_tensor(out_dir / "means.rstf", Tensor::from_f32({n, ex.means.cols()}, ex.means.values()));
  write_tensor(out_dir / "counts.rstf", Tensor::from_u64({n}, ex.counts));
  write_tensor(out_dir / "labels.rstf", Tensor::from_i32({n}, labels.labels));
  json doc = {{"frames_used", summary.frames_used},
              {"voxels", summary.voxels},
              {"points", summary.points},
              {"voxel_size", config.voxel_size},
              {"frame_skip", config.frame_skip},
              {"lift_mode", config.lift_mode == LiftMode::kFeature ? "feature" : "probability"},
              {"class_names", bank.class_names}};
  write_text(out_dir / "map.json", doc.dump(2));
  return summary;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

std::vector<std::string> rstf_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError(dir.string() + " is not a directory");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".rstf") {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::size_t infer_classes(const EvalOptions& options,
                          const std::vector<std::vector<std::int32_t>>& label_sets) {
  if (options.num_classes) return *options.num_classes;
  if (!options.class_names.empty()) return options.class_names.size();
  std::int32_t top = -1;
  for (const auto& labels : label_sets) {
    for (auto v : labels) {
      if (!options.ignore.count(v)) top = std::max(top, v);
    }
  }
  if (top < 0) throw InputError("cannot infer class count from empty labels");
  return static_cast<std::size_t>(top) + 1;
}

}  // namespace

EvalResult evaluate(const fs::path& pred_dir, const fs::path& gt_dir,
                    const EvalOptions& options) {
  const bool voxel_mode = fs::exists(gt_dir / "keys.rstf") && fs::exists(pred_dir / "keys.rstf");
  std::vector<std::vector<std::int32_t>> gts;
  std::vector<std::vector<std::int32_t>> preds;
  EvalResult result{ConfusionMatrix(1), 0, 0};

  if (voxel_mode) {
    const auto gt_keys = read_tensor(gt_dir / "keys.rstf").to_u64();
    const auto gt_labels = read_tensor(gt_dir / "labels.rstf").to_i32();
    const auto pred_keys = read_tensor(pred_dir / "keys.rstf").to_u64();
    const auto pred_labels = read_tensor(pred_dir / "labels.rstf").to_i32();
    if (gt_keys.size() != gt_labels.size() || pred_keys.size() != pred_labels.size()) {
      throw ShapeError("voxel keys and labels differ in length");
    }
    std::unordered_map<std::uint64_t, std::int32_t> predicted;
    predicted.reserve(pred_keys.size());
    for (std::size_t i = 0; i < pred_keys.size(); ++i) predicted[pred_keys[i]] = pred_labels[i];
    std::vector<std::int32_t> g;
    std::vector<std::int32_t> p;
    for (std::size_t i = 0; i < gt_keys.size(); ++i) {
      const auto it = predicted.find(gt_keys[i]);
      if (it == predicted.end()) {
        ++result.unmatched_voxels;
        continue;
      }
      g.push_back(gt_labels[i]);
      p.push_back(it->second);
    }
    gts.push_back(std::move(g));
    preds.push_back(std::move(p));
    result.files = 1;
  } else {
    const auto gt_names = rstf_files(gt_dir);
    const auto pred_names = rstf_files(pred_dir);
    if (gt_names.empty()) throw InputError("no ground-truth tensors in " + gt_dir.string());
    if (gt_names != pred_names) {
      throw InputError("prediction and ground-truth file sets differ");
    }
    for (const auto& name : gt_names) {
      const Tensor g = read_tensor(gt_dir / name);
      const Tensor p = read_tensor(pred_dir / name);
      if (g.dims != p.dims) throw ShapeError(name + ": prediction shape differs from ground truth");
      gts.push_back(g.to_i32());
      preds.push_back(p.to_i32());
    }
    result.files = gt_names.size();
  }

  std::vector<std::vector<std::int32_t>> all = gts;
  all.insert(all.end(), preds.begin(), preds.end());
  result.confusion = ConfusionMatrix(infer_classes(options, all), options.ignore);
  for (std::size_t i = 0; i < gts.size(); ++i) result.confusion.accumulate(gts[i], preds[i]);
  return result;
}

// ---------------------------------------------------------------------------
// Golden cross-check

double max_relative_error(const Matrix& actual, const Matrix& expected) {
  if (actual.rows() != expected.rows() || actual.cols() != expected.cols()) {
    throw ShapeError("golden comparison shape mismatch");
  }
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    diff = std::max(diff, std::abs(static_cast<double>(actual.values()[i]) - expected.values()[i]));
    scale = std::max(scale, std::abs(static_cast<double>(expected.values()[i])));
  }
  return scale > 0.0 ? diff / scale : diff;
}

std::vector<GoldenCase> compare_golden(const WeightBundle& bundle, const fs::path& golden_dir) {
  if (!fs::is_directory(golden_dir)) throw InputError(golden_dir.string() + " is not a directory");
  std::vector<fs::path> cases;
  for (const auto& entry : fs::directory_iterator(golden_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) cases.push_back(entry.path());
  }
  std::sort(cases.begin(), cases.end());
  if (cases.empty()) throw InputError("no golden cases under " + golden_dir.string());
  std::vector<GoldenCase> out;
  for (const auto& dir : cases) {
    TokenMatrix window;
    float tau = kDefaultScraTemperature;
    try {
      const json meta = json::parse(read_text(dir / "meta.json"));
      window.num_special = meta.at("num_special").get<std::size_t>();
      window.grid = {meta.at("grid").at(0).get<std::size_t>(), meta.at("grid").at(1).get<std::size_t>()};
      tau = meta.value("tau", tau);
    } catch (const json::exception& e) {
      throw InputError(dir.string() + "/meta.json: " + e.what());
    }
    window.tokens = read_tensor(dir / "window.rstf").to_matrix();
    const TokenMatrix refined = scra(window, bundle, tau);
    const Matrix adapted = cls_adaptor(window.patch_tokens(), bundle);
    out.push_back({dir.filename().string(),
                   max_relative_error(refined.tokens, read_tensor(dir / "scra.rstf").to_matrix()),
                   max_relative_error(adapted, read_tensor(dir / "adaptor.rstf").to_matrix())});
  }
  return out;
}

}  // namespace radseg
