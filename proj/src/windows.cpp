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
#include "radseg/windows.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "radseg/errors.hpp"

namespace radseg {

using nlohmann::json;

std::string plan_to_json(const WindowPlan& plan) {
  json windows = json::array();
  for (const auto& w : plan.windows) windows.push_back({w.top, w.left});
  json doc = {{"image_size", {plan.image.height, plan.image.width}},
              {"crop", plan.crop},
              {"stride", plan.stride},
              {"patch_size", plan.patch_size},
              {"windows", windows}};
  return doc.dump(2);
}

WindowPlan plan_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    WindowPlan plan;
    plan.image = {doc.at("image_size").at(0).get<std::size_t>(),
                  doc.at("image_size").at(1).get<std::size_t>()};
    plan.crop = doc.at("crop").get<std::size_t>();
    plan.stride = doc.at("stride").get<std::size_t>();
    plan.patch_size = doc.at("patch_size").get<std::size_t>();
    for (const auto& w : doc.at("windows")) {
      plan.windows.push_back({w.at(0).get<std::size_t>(), w.at(1).get<std::size_t>()});
    }
    return plan;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed window plan: ") + e.what());
  }
}

ResolutionPreset resolution_preset(DatasetFamily family, Resolution level) {
  // {shorter side, crop, stride}
  static constexpr ResolutionPreset kTable[4][3] = {
      {{336, 224, 112}, {336, 336, 112}, {672, 336, 336}},    // VOC
      {{336, 224, 112}, {448, 336, 224}, {896, 336, 336}},    // COCO-Stuff
      {{336, 224, 112}, {576, 336, 224}, {672, 336, 336}},    // Context / ADE
      {{560, 224, 112}, {688, 336, 224}, {1344, 336, 336}},   // Cityscapes
  };
  return kTable[static_cast<int>(family)][static_cast<int>(level)];
}

DatasetFamily parse_dataset_family(std::string_view name) {
  if (name == "voc") return DatasetFamily::kVoc;
  if (name == "stuff" || name == "coco-stuff") return DatasetFamily::kStuff;
  if (name == "context" || name == "ade" || name == "ctx-ade") {
    return DatasetFamily::kContextAde;
  }
  if (name == "city" || name == "cityscapes") return DatasetFamily::kCityscapes;
  throw InputError("unknown dataset family '" + std::string(name) + "'");
}

Resolution parse_resolution(std::string_view name) {
  if (name == "low") return Resolution::kLow;
  if (name == "mid") return Resolution::kMid;
  if (name == "high") return Resolution::kHigh;
  throw InputError("unknown resolution preset '" + std::string(name) + "'");
}

std::string_view to_string(DatasetFamily family) {
  switch (family) {
    case DatasetFamily::kVoc: return "voc";
    case DatasetFamily::kStuff: return "stuff";
    case DatasetFamily::kContextAde: return "ctx-ade";
    case DatasetFamily::kCityscapes: return "city";
  }
  return "?";
}

std::string_view to_string(Resolution level) {
  switch (level) {
    case Resolution::kLow: return "low";
    case Resolution::kMid: return "mid";
    case Resolution::kHigh: return "high";
  }
  return "?";
}

ImageSize resize_shorter_side(ImageSize original, std::size_t shorter_side,
                              std::size_t multiple) {
  if (original.height == 0 || original.width == 0 || shorter_side == 0 || multiple == 0) {
    throw InputError("resize_shorter_side: sizes must be positive");
  }
  const bool tall = original.height >= original.width;
  const double shorter = static_cast<double>(tall ? original.width : original.height);
  const double longer = static_cast<double>(tall ? original.height : original.width);
  const double scaled = longer * static_cast<double>(shorter_side) / shorter;
  auto rounded = static_cast<std::size_t>(std::llround(scaled / static_cast<double>(multiple))) *
                 multiple;
  rounded = std::max(rounded, shorter_side);
  return tall ? ImageSize{rounded, shorter_side} : ImageSize{shorter_side, rounded};
}

std::vector<std::size_t> window_offsets(std::size_t length, std::size_t crop,
                                        std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t o = 0;; o += stride) {
    const std::size_t clamped = std::min(o, length - crop);
    if (out.empty() || out.back() != clamped) out.push_back(clamped);
    if (o + crop >= length) break;
  }
  return out;
}

WindowPlan plan_windows(ImageSize image, std::size_t crop, std::size_t stride,
                        std::size_t patch_size) {
  if (crop == 0 || stride == 0 || patch_size == 0) {
    throw InputError("crop, stride and patch size must be positive");
  }
  if (stride > crop) {
    throw InputError("stride " + std::to_string(stride) + " exceeds crop " +
                     std::to_string(crop) + " and would leave gaps");
  }
  if (crop > image.height || crop > image.width) {
    throw InputError("crop " + std::to_string(crop) + " exceeds image side " +
                     std::to_string(std::min(image.height, image.width)));
  }
  if (crop % patch_size || stride % patch_size || image.height % patch_size ||
      image.width % patch_size) {
    throw InputError("crop, stride and image size must be multiples of patch size " +
                     std::to_string(patch_size));
  }
  WindowPlan plan{image, crop, stride, patch_size, {}};
  const auto tops = window_offsets(image.height, crop, stride);
  const auto lefts = window_offsets(image.width, crop, stride);
  for (auto t : tops) {
    for (auto l : lefts) plan.windows.push_back({t, l});
  }
  return plan;
}

FeatureMap aggregate_windows(const WindowPlan& plan,
                             std::span<const Matrix> window_features) {
  if (window_features.size() != plan.windows.size()) {
    throw ShapeError("plan has " + std::to_string(plan.windows.size()) +
                     " windows but " + std::to_string(window_features.size()) +
                     " feature grids were given");
  }
  if (window_features.empty()) throw ShapeError("no window features to aggregate");
  const GridShape global = plan.patch_grid();
  const GridShape local = plan.window_grid();
  const std::size_t d = window_features.front().cols();

  std::vector<double> sums(global.cells() * d, 0.0);
  std::vector<std::uint32_t> counts(global.cells(), 0);
  for (std::size_t w = 0; w < window_features.size(); ++w) {
    const Matrix& f = window_features[w];
    if (f.cols() != d) throw ShapeError("window feature width mismatch");
    if (f.rows() != local.cells()) {
      throw ShapeError("window " + std::to_string(w) + " has " + std::to_string(f.rows()) +
                       " cells, expected " + std::to_string(local.cells()));
    }
    const std::size_t top = plan.windows[w].top / plan.patch_size;
    const std::size_t left = plan.windows[w].left / plan.patch_size;
    for (std::size_t r = 0; r < local.rows; ++r) {
      for (std::size_t c = 0; c < local.cols; ++c) {
        const std::size_t cell = (top + r) * global.cols + (left + c);
        const auto src = f.row(r * local.cols + c);
        double* dst = sums.data() + cell * d;
        for (std::size_t k = 0; k < d; ++k) dst[k] += src[k];
        ++counts[cell];
      }
    }
  }

  FeatureMap out{global, Matrix(global.cells(), d), std::move(counts)};
  for (std::size_t cell = 0; cell < global.cells(); ++cell) {
    if (out.counts[cell] == 0) {
      throw InvariantError("window plan leaves patch cell " + std::to_string(cell) +
                           " uncovered");
    }
    auto dst = out.features.row(cell);
    const double n = out.counts[cell];
    for (std::size_t k = 0; k < d; ++k) {
      dst[k] = static_cast<float>(sums[cell * d + k] / n);
    }
  }
  return out;
}

FeatureMap scga(const FeatureMap& map, float tau, const ScgaOptions& options) {
  if (!(tau > 0.0f)) throw InputError("scga temperature must be positive");
  const std::size_t cells = map.features.rows();
  if (cells != map.grid.cells()) throw ShapeError("feature map rows disagree with grid");
  const Matrix normalized = normalize_rows(map.features, kMinTokenNorm, "scga");

  FeatureMap out{map.grid, Matrix(), map.counts};
  if (cells <= options.dense_cell_cap) {
    Matrix weights = masked_cosine_rows(normalized, 0, cells);
    masked_softmax_rows_inplace(weights, tau);
    out.features = matmul(weights, map.features);
    return out;
  }
  if (!options.allow_tiling) {
    throw InputError("feature map has " + std::to_string(cells) +
                     " cells, above the dense cap of " +
                     std::to_string(options.dense_cell_cap) + " with tiling disabled");
  }
  const std::size_t tile = std::max<std::size_t>(1, options.tile_rows);
  out.features = Matrix(cells, map.channels());
  for (std::size_t begin = 0; begin < cells; begin += tile) {
    const std::size_t end = std::min(cells, begin + tile);
    Matrix weights = masked_cosine_rows(normalized, begin, end);
    masked_softmax_rows_inplace(weights, tau);
    const Matrix rows = matmul(weights, map.features);
    std::copy(rows.values().begin(), rows.values().end(),
              out.features.values().begin() +
                  static_cast<std::ptrdiff_t>(begin * map.channels()));
  }
  return out;
}

}  // namespace radseg
