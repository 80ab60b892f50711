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
// radseg command-line front end.
//
//   radseg segment2d --config C --features DIR --out DIR
//   radseg map3d     --config C --frames DIR --out DIR
//   radseg eval      --pred DIR --gt DIR [--num-classes K] [--ignore 0,255]
//   radseg inspect   FILE
//   radseg golden    --bundle MANIFEST --dir DIR
//
// Exit codes: 0 success, 1 input error, 2 internal invariant violation.
#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "radseg/errors.hpp"
#include "radseg/pipeline.hpp"
#include "radseg/tensor_store.hpp"

namespace {

namespace fs = std::filesystem;
using namespace radseg;

struct CommonFlags {
  std::string config;
  std::string bundle;
  std::optional<std::size_t> threads;
  std::optional<float> logit_scale;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "Run configuration (JSON)");
  cmd->add_option("--bundle", flags.bundle, "Bundle manifest; overrides the config");
  cmd->add_option("--threads", flags.threads, "Worker count (default: RADSEG_THREADS or cores)");
  cmd->add_option("--logit-scale", flags.logit_scale, "Probability softmax scale");
}

RunConfig make_config(const CommonFlags& flags) {
  RunConfig config = flags.config.empty() ? RunConfig{} : load_config(flags.config);
  if (!flags.bundle.empty()) config.bundle = flags.bundle;
  if (flags.threads) config.workers = flags.threads;
  if (flags.logit_scale) config.logit_scale = flags.logit_scale;
  return config;
}

std::set<std::int32_t> parse_ignore(const std::string& list,
                                    const std::vector<std::string>& names) {
  std::set<std::int32_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto it = std::find(names.begin(), names.end(), item);
    if (it != names.end()) {
      out.insert(static_cast<std::int32_t>(it - names.begin()));
      continue;
    }
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.insert(v);
    } catch (const std::exception&) {
      throw InputError("ignore entry '" + item + "' is neither a class index nor a known name");
    }
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"radseg: open-vocabulary dense segmentation engine"};
  app.require_subcommand(1);

  CommonFlags seg_flags;
  std::string features_dir;
  std::string seg_out;
  std::optional<float> tau_scra;
  std::optional<float> tau_scga;
  bool no_scra = false;
  bool no_scga = false;
  bool refine = false;
  std::string refine_masks;
  auto* seg = app.add_subcommand("segment2d", "Segment exported window tokens");
  add_common(seg, seg_flags);
  seg->add_option("--features", features_dir, "Exported features directory")->required();
  seg->add_option("--out", seg_out, "Output directory")->required();
  seg->add_option("--tau-scra", tau_scra, "SCRA temperature");
  seg->add_option("--tau-scga", tau_scga, "SCGA temperature");
  seg->add_flag("--no-scra", no_scra, "Disable recursive self-correlating attention");
  seg->add_flag("--no-scga", no_scga, "Disable global self-correlating aggregation");
  seg->add_flag("--refine", refine, "Write mask-refinement prompts");
  seg->add_option("--refine-masks", refine_masks, "Directory of decoder masks to fuse");

  CommonFlags map_flags;
  std::string frames_dir;
  std::string map_out;
  std::string mode;
  std::optional<double> voxel_size;
  std::optional<std::size_t> frame_skip;
  std::optional<double> max_depth;
  auto* map = app.add_subcommand("map3d", "Fuse posed frames into a semantic voxel map");
  add_common(map, map_flags);
  map->add_option("--frames", frames_dir, "Frames directory")->required();
  map->add_option("--out", map_out, "Output directory")->required();
  map->add_option("--mode", mode, "Lifting space")->check(CLI::IsMember({"feature", "probability"}));
  map->add_option("--voxel-size", voxel_size, "Voxel edge in meters");
  map->add_option("--frame-skip", frame_skip, "Integrate every n-th frame");
  map->add_option("--max-depth", max_depth, "Ignore depth beyond this range (m)");

  std::string pred_dir;
  std::string gt_dir;
  std::optional<std::size_t> num_classes;
  std::string ignore_list;
  std::string class_names_path;
  bool scannet_ignore = false;
  std::string report_path;
  auto* ev = app.add_subcommand("eval", "Score predictions against ground truth");
  ev->add_option("--pred", pred_dir, "Prediction directory")->required();
  ev->add_option("--gt", gt_dir, "Ground-truth directory")->required();
  ev->add_option("--num-classes", num_classes, "Class count (default: inferred)");
  ev->add_option("--ignore", ignore_list, "Comma-separated ignore classes (ids or names)");
  ev->add_option("--class-names", class_names_path, "JSON list of class names");
  ev->add_flag("--scannet-ignore", scannet_ignore, "Ignore otherprop/otherstructure/otherfurniture");
  ev->add_option("--report", report_path, "Write the JSON report here");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Print a tensor file header");
  inspect->add_option("file", inspect_path, "RSTF file")->required();

  std::string golden_bundle;
  std::string golden_dir;
  double golden_tol = 1e-3;
  auto* golden = app.add_subcommand("golden", "Compare against exporter reference vectors");
  golden->add_option("--bundle", golden_bundle, "Bundle manifest")->required();
  golden->add_option("--dir", golden_dir, "Golden directory")->required();
  golden->add_option("--tolerance", golden_tol, "Relative tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*seg) {
    RunConfig config = make_config(seg_flags);
    if (tau_scra) config.tau_scra = *tau_scra;
    if (tau_scga) config.tau_scga = *tau_scga;
    if (no_scra) config.enable_scra = false;
    if (no_scga) config.enable_scga = false;
    if (refine) config.enable_refine = true;
    if (!refine_masks.empty()) config.refine_masks_dir = refine_masks;
    const auto summary = segment2d(config, features_dir, seg_out);
    std::cout << "segmented " << summary.images.size() << " image(s)";
    if (config.enable_refine) std::cout << ", fused masks for " << summary.refined_images;
    std::cout << " -> " << seg_out << "\n";
    return 0;
  }
  if (*map) {
    RunConfig config = make_config(map_flags);
    if (!mode.empty()) {
      config.lift_mode = mode == "feature" ? LiftMode::kFeature : LiftMode::kProbability;
    }
    if (voxel_size) config.voxel_size = *voxel_size;
    if (frame_skip) config.frame_skip = *frame_skip;
    if (max_depth) config.max_depth = *max_depth;
    if (config.frame_skip == 0) throw InputError("--frame-skip must be >= 1");
    const auto summary = map3d(config, frames_dir, map_out);
    std::cout << "integrated " << summary.frames_used << " frame(s), " << summary.points
              << " points into " << summary.voxels << " voxels -> " << map_out << "\n";
    return 0;
  }
  if (*ev) {
    EvalOptions options;
    options.num_classes = num_classes;
    if (!class_names_path.empty()) {
      std::ifstream in(class_names_path);
      if (!in) throw InputError("cannot open " + class_names_path);
      try {
        options.class_names = nlohmann::json::parse(in).get<std::vector<std::string>>();
      } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("class names file: ") + e.what());
      }
    }
    options.ignore = parse_ignore(ignore_list, options.class_names);
    if (scannet_ignore) {
      for (auto name : kScanNetIgnoreClasses) {
        const auto it = std::find(options.class_names.begin(), options.class_names.end(), name);
        if (it == options.class_names.end()) {
          throw InputError("--scannet-ignore needs class names containing " + std::string(name));
        }
        options.ignore.insert(static_cast<std::int32_t>(it - options.class_names.begin()));
      }
    }
    const EvalResult result = evaluate(pred_dir, gt_dir, options);
    std::cout << metrics_report_text(result.confusion, options.class_names);
    if (result.unmatched_voxels) {
      std::cout << "unmatched ground-truth voxels " << result.unmatched_voxels << "\n";
    }
    if (!report_path.empty()) {
      auto doc = nlohmann::json::parse(metrics_report_json(result.confusion, options.class_names));
      doc["files"] = result.files;
      doc["unmatched_voxels"] = result.unmatched_voxels;
      std::ofstream out(report_path);
      if (!out) throw InputError("cannot write " + report_path);
      out << doc.dump(2) << "\n";
    }
    return 0;
  }
  if (*inspect) {
    std::cout << describe_header(read_tensor_header(inspect_path)) << "\n";
    return 0;
  }
  if (*golden) {
    const auto cases = compare_golden(load_bundle(golden_bundle), golden_dir);
    bool ok = true;
    for (const auto& c : cases) {
      const bool pass = c.scra_rel_error <= golden_tol && c.adaptor_rel_error <= golden_tol;
      ok = ok && pass;
      std::cout << (pass ? "PASS " : "FAIL ") << c.name << " scra_rel=" << c.scra_rel_error
                << " adaptor_rel=" << c.adaptor_rel_error << "\n";
    }
    return ok ? 0 : 1;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const radseg::InputError& e) {
    std::cerr << "radseg: " << e.what() << "\n";
    return 1;
  } catch (const radseg::InvariantError& e) {
    std::cerr << "radseg: internal invariant violated: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "radseg: internal error: " << e.what() << "\n";
    return 2;
  }
}
