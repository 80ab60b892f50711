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
// Sliding-window planning, feature-space window fusion and self-correlating
// global aggregation over the fused map.
#ifndef RADSEG_WINDOWS_HPP_
#define RADSEG_WINDOWS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "radseg/attention.hpp"
#include "radseg/matrix.hpp"

namespace radseg {

struct ImageSize {
  std::size_t height = 0;
  std::size_t width = 0;
  bool operator==(const ImageSize&) const = default;
};

struct WindowOffset {
  std::size_t top = 0;
  std::size_t left = 0;
  bool operator==(const WindowOffset&) const = default;
};

struct WindowPlan {
  ImageSize image;
  std::size_t crop = 0;
  std::size_t stride = 0;
  std::size_t patch_size = 0;
  std::vector<WindowOffset> windows;

  GridShape patch_grid() const {
    return {image.height / patch_size, image.width / patch_size};
  }
  GridShape window_grid() const { return {crop / patch_size, crop / patch_size}; }
  bool operator==(const WindowPlan&) const = default;
};

std::string plan_to_json(const WindowPlan& plan);
WindowPlan plan_from_json(std::string_view text);

enum class Resolution { kLow, kMid, kHigh };
enum class DatasetFamily { kVoc, kStuff, kContextAde, kCityscapes };

// Shorter side, crop and stride in pixels.
struct ResolutionPreset {
  std::size_t shorter_side = 0;
  std::size_t crop = 0;
  std::size_t stride = 0;
  bool operator==(const ResolutionPreset&) const = default;
};

// Benchmark sliding-window standards: low, mid and high per dataset family.
ResolutionPreset resolution_preset(DatasetFamily family, Resolution level);
// "voc", "stuff", "context"/"ade"/"ctx-ade", "city"/"cityscapes".
DatasetFamily parse_dataset_family(std::string_view name);
// "low", "mid", "high".
Resolution parse_resolution(std::string_view name);
std::string_view to_string(DatasetFamily family);
std::string_view to_string(Resolution level);

// Aspect-preserving size with the shorter side set to `shorter_side` and the
// longer side rounded to the nearest multiple of `multiple` (>= shorter_side).
ImageSize resize_shorter_side(ImageSize original, std::size_t shorter_side,
                              std::size_t multiple);

// Offsets along one axis: 0, stride, 2*stride, ... with the last window
// clamped to end at the edge, duplicates removed.
std::vector<std::size_t> window_offsets(std::size_t length, std::size_t crop,
                                        std::size_t stride);

// Throws InputError if crop exceeds an image side, crop/stride are not
// positive, stride exceeds crop, or crop, stride or either image side is not
// a multiple of patch_size.
WindowPlan plan_windows(ImageSize image, std::size_t crop, std::size_t stride,
                        std::size_t patch_size);

// Patch-feature grid of a whole image, one row of `features` per cell in
// raster order.
struct FeatureMap {
  GridShape grid;
  Matrix features;
  std::vector<std::uint32_t> counts;

  std::size_t channels() const { return features.cols(); }
};

// Each global cell becomes the mean of every window feature covering it.
// window_features[w] has window_grid().cells() rows in raster order. Sums are
// accumulated in window order so the result is reproducible bit for bit.
FeatureMap aggregate_windows(const WindowPlan& plan,
                             std::span<const Matrix> window_features);

inline constexpr float kDefaultScgaTemperature = 10.0f;
inline constexpr std::size_t kDefaultScgaCellCap = 16384;

struct ScgaOptions {
  // Maps with more cells than this take the row-tiled path.
  std::size_t dense_cell_cap = kDefaultScgaCellCap;
  bool allow_tiling = true;
  std::size_t tile_rows = 256;
};

// features <- softmax_tau(masked_cos(features)) * features. The tiled path
// evaluates the same rows of the similarity matrix in blocks and matches the
// dense path exactly.
FeatureMap scga(const FeatureMap& map, float tau = kDefaultScgaTemperature,
                const ScgaOptions& options = {});

}  // namespace radseg

#endif  // RADSEG_WINDOWS_HPP_
