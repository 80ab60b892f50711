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
// Dense language alignment: patch features pass through the summary-token
// adaptor MLP into the text embedding space and are scored against a bank of
// class embeddings by cosine similarity.
#ifndef RADSEG_LANG_ALIGN_HPP_
#define RADSEG_LANG_ALIGN_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radseg/bundle.hpp"
#include "radseg/matrix.hpp"
#include "radseg/windows.hpp"

namespace radseg {

// K x D_t class embeddings with unit-norm rows.
struct TextBank {
  Matrix embeddings;
  std::vector<std::string> class_names;
  std::optional<int> ignore_index;

  std::size_t num_classes() const { return embeddings.rows(); }
};

// Normalizes rows. Throws InputError on K < 2, a zero row or a name count
// mismatch (names may be empty).
TextBank make_text_bank(const Matrix& raw, std::vector<std::string> class_names = {},
                        std::optional<int> ignore_index = std::nullopt);
TextBank text_bank_from(const WeightBundle& bundle);

// y = gelu(x W1 + b1) W2 + b2 per row.
Matrix cls_adaptor(const Matrix& features, const WeightBundle& weights);
FeatureMap apply_cls_adaptor(const FeatureMap& map, const WeightBundle& weights);

// cells x K cosine similarities.
struct ClassLogits {
  GridShape grid;
  Matrix values;

  std::size_t num_classes() const { return values.cols(); }
};

ClassLogits similarity_logits(const FeatureMap& aligned, const TextBank& bank);
// Same for a plain row set (voxels, pixels).
Matrix cosine_logits(const Matrix& rows, const TextBank& bank);

struct LabelMap {
  ImageSize size;
  std::vector<std::int32_t> labels;
  std::vector<float> scores;

  std::int32_t at(std::size_t y, std::size_t x) const { return labels[y * size.width + x]; }
};

// First index of the maximum.
std::size_t argmax_lowest(std::span<const float> values);

// Bilinear upsampling of every class channel to `target`, then per-pixel
// argmax with lowest-index tie-breaking. Throws ShapeError if the target is
// smaller than the logit grid.
LabelMap segment(const ClassLogits& logits, ImageSize target);

enum class ProbabilityMode { kSoftmax, kOneHot };

struct ProbabilityMap {
  GridShape grid;
  Matrix probs;  // cells x K
};

// softmax(logit_scale * cos) per row, or one-hot of the argmax.
void class_probabilities_inplace(Matrix& logits, float logit_scale, ProbabilityMode mode);
ProbabilityMap probabilities(const ClassLogits& logits, float logit_scale,
                             ProbabilityMode mode = ProbabilityMode::kSoftmax);

}  // namespace radseg

#endif  // RADSEG_LANG_ALIGN_HPP_
