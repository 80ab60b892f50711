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
// Prompt generation for an external promptable mask decoder and fusion of the
// masks it returns.
//
// Interchange directory:
//   prompts.json        image size and one entry per prompt (class, box, points)
//   prompts/NNN.rstf    f32 [G, G] low-resolution mask logits for prompt NNN
//   masks/NNN.rstf      u8 [H, W] binary mask returned for prompt NNN
//   masks.json          {"confidences": [...]} one value in [0, 1] per mask
#ifndef RADSEG_REFINE_HPP_
#define RADSEG_REFINE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "radseg/lang_align.hpp"
#include "radseg/matrix.hpp"

namespace radseg {

// Inclusive pixel bounds.
struct Box {
  std::int32_t top = 0;
  std::int32_t left = 0;
  std::int32_t bottom = 0;
  std::int32_t right = 0;
  bool contains(std::int32_t x, std::int32_t y) const {
    return y >= top && y <= bottom && x >= left && x <= right;
  }
  bool operator==(const Box&) const = default;
};

struct Component {
  std::int32_t class_id = 0;
  std::vector<std::uint32_t> pixels;  // linear indices, ascending
  Box box;

  std::size_t area() const { return pixels.size(); }
};

// 4-connected regions of equal label, seeded in raster order; regions smaller
// than min_region_area are dropped.
std::vector<Component> extract_components(const LabelMap& labels,
                                          std::size_t min_region_area);

struct PromptPoint {
  std::int32_t x = 0;
  std::int32_t y = 0;
  bool positive = true;
  bool operator==(const PromptPoint&) const = default;
};

struct PromptOptions {
  std::size_t num_points = 3;
  // Accepted points are at least this far apart (pixels).
  double dedup_radius = 8.0;
  std::size_t mask_grid = 256;
  float inside_logit = 4.0f;
  float outside_logit = -4.0f;
};

struct Prompt {
  std::int32_t class_id = 0;
  Box box;
  std::vector<PromptPoint> points;
  Matrix mask_logits;  // mask_grid x mask_grid
};

struct PromptSet {
  ImageSize image;
  std::vector<Prompt> prompts;
};

// Box is the tight bound; points are the highest-scoring component pixels
// (ties by raster order) kept at least dedup_radius apart; mask logits are the
// component indicator sampled at cell centers of a mask_grid square.
PromptSet make_prompts(std::span<const Component> components, ImageSize image,
                       std::span<const float> scores, const PromptOptions& options = {});

struct RefinedMask {
  std::vector<std::uint8_t> mask;  // H * W, nonzero = inside
  float confidence = 0.0f;
};

struct RefinedMasks {
  ImageSize image;
  std::vector<RefinedMask> masks;
};

// Pixels covered by at least one mask take the class with the largest summed
// confidence among covering masks (ties: larger single confidence, then lower
// class id); other pixels keep the base label. component_classes[i] is the
// class of masks[i].
LabelMap fuse_masks(const LabelMap& base, const RefinedMasks& refined,
                    std::span<const std::int32_t> component_classes);

void write_prompts(const std::filesystem::path& dir, const PromptSet& prompts);
PromptSet read_prompts(const std::filesystem::path& dir);
void write_refined_masks(const std::filesystem::path& dir, const RefinedMasks& masks);
// Reads masks/NNN.rstf for NNN in [0, count) plus masks.json.
RefinedMasks read_refined_masks(const std::filesystem::path& dir, ImageSize image,
                                std::size_t count);

}  // namespace radseg

#endif  // RADSEG_REFINE_HPP_
