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
#include "radseg/lang_align.hpp"

#include <cmath>
#include <limits>

#include "radseg/errors.hpp"
#include "radseg/resample.hpp"

namespace radseg {

TextBank make_text_bank(const Matrix& raw, std::vector<std::string> class_names,
                        std::optional<int> ignore_index) {
  if (raw.rows() < 2) throw InputError("text bank needs at least 2 classes");
  if (!class_names.empty() && class_names.size() != raw.rows()) {
    throw InputError("text bank class name count mismatch");
  }
  if (ignore_index && (*ignore_index < 0 ||
                       static_cast<std::size_t>(*ignore_index) >= raw.rows())) {
    throw InputError("text bank ignore_index out of range");
  }
  return {normalize_rows(raw, 0.0, "text bank"), std::move(class_names), ignore_index};
}

TextBank text_bank_from(const WeightBundle& bundle) {
  return make_text_bank(bundle.text_bank, bundle.meta.class_names, bundle.meta.ignore_index);
}

Matrix cls_adaptor(const Matrix& features, const WeightBundle& weights) {
  if (features.cols() != weights.model_dim()) {
    throw ShapeError("adaptor input width " + std::to_string(features.cols()) +
                     " does not match bundle dim " + std::to_string(weights.model_dim()));
  }
  Matrix hidden = affine(features, weights.adaptor_w1, weights.adaptor_b1);
  gelu_inplace(hidden);
  return affine(hidden, weights.adaptor_w2, weights.adaptor_b2);
}

FeatureMap apply_cls_adaptor(const FeatureMap& map, const WeightBundle& weights) {
  return {map.grid, cls_adaptor(map.features, weights), map.counts};
}

Matrix cosine_logits(const Matrix& rows, const TextBank& bank) {
  if (rows.cols() != bank.embeddings.cols()) {
    throw ShapeError("feature width " + std::to_string(rows.cols()) +
                     " does not match text bank width " +
                     std::to_string(bank.embeddings.cols()));
  }
  const Matrix normalized = normalize_rows(rows, kMinTokenNorm, "similarity logits");
  Matrix out(rows.rows(), bank.num_classes());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto f = normalized.row(i);
    auto dst = out.row(i);
    for (std::size_t k = 0; k < bank.num_classes(); ++k) {
      dst[k] = static_cast<float>(dot(f, bank.embeddings.row(k)));
    }
  }
  return out;
}

ClassLogits similarity_logits(const FeatureMap& aligned, const TextBank& bank) {
  return {aligned.grid, cosine_logits(aligned.features, bank)};
}

std::size_t argmax_lowest(std::span<const float> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

LabelMap segment(const ClassLogits& logits, ImageSize target) {
  if (logits.values.rows() != logits.grid.cells()) {
    throw ShapeError("logit rows disagree with grid");
  }
  if (target.height < logits.grid.rows || target.width < logits.grid.cols) {
    throw ShapeError("segment target is smaller than the logit grid");
  }
  LabelMap out{target, std::vector<std::int32_t>(target.height * target.width),
               std::vector<float>(target.height * target.width)};
  std::vector<float> pixel(logits.num_classes());
  for (std::size_t y = 0; y < target.height; ++y) {
    for (std::size_t x = 0; x < target.width; ++x) {
      bilinear_sample(logits.values, logits.grid, target.height, target.width, y, x, pixel);
      const std::size_t k = argmax_lowest(pixel);
      out.labels[y * target.width + x] = static_cast<std::int32_t>(k);
      out.scores[y * target.width + x] = pixel[k];
    }
  }
  return out;
}

void class_probabilities_inplace(Matrix& logits, float logit_scale, ProbabilityMode mode) {
  if (!(logit_scale > 0.0f)) throw InputError("logit_scale must be positive");
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    if (mode == ProbabilityMode::kOneHot) {
      const std::size_t k = argmax_lowest(row);
      std::fill(row.begin(), row.end(), 0.0f);
      row[k] = 1.0f;
      continue;
    }
    double peak = -std::numeric_limits<double>::infinity();
    for (float v : row) peak = std::max(peak, static_cast<double>(v));
    double total = 0.0;
    std::vector<double> w(row.size());
    for (std::size_t k = 0; k < row.size(); ++k) {
      w[k] = std::exp(static_cast<double>(logit_scale) * (row[k] - peak));
      total += w[k];
    }
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = static_cast<float>(w[k] / total);
  }
}

ProbabilityMap probabilities(const ClassLogits& logits, float logit_scale,
                             ProbabilityMode mode) {
  ProbabilityMap out{logits.grid, logits.values};
  class_probabilities_inplace(out.probs, logit_scale, mode);
  return out;
}

}  // namespace radseg
