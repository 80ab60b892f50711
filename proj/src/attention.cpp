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
#include "radseg/attention.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "radseg/errors.hpp"

namespace radseg {

void TokenMatrix::check_shape() const {
  if (tokens.rows() < num_special) {
    throw ShapeError("token matrix has fewer rows than special tokens");
  }
  if (grid.cells() != num_patch()) {
    throw ShapeError("token matrix holds " + std::to_string(num_patch()) +
                     " patch rows but grid is " + std::to_string(grid.rows) + "x" +
                     std::to_string(grid.cols));
  }
}

Matrix masked_cosine_rows(const Matrix& normalized, std::size_t row_begin,
                          std::size_t row_end) {
  const std::size_t m = normalized.rows();
  Matrix block(row_end - row_begin, m);
  for (std::size_t i = row_begin; i < row_end; ++i) {
    const auto ti = normalized.row(i);
    auto out = block.row(i - row_begin);
    for (std::size_t j = 0; j < m; ++j) {
      const double c = dot(ti, normalized.row(j));
      // The diagonal is a self-similarity and stays unmasked.
      out[j] = (c < 0.0 && i != j) ? kMaskSentinel : static_cast<float>(c);
    }
  }
  return block;
}

void masked_softmax_rows_inplace(Matrix& block, float tau) {
  if (!(tau > 0.0f)) throw InputError("softmax temperature must be positive");
  std::vector<double> w(block.cols());
  for (std::size_t r = 0; r < block.rows(); ++r) {
    auto row = block.row(r);
    double peak = -std::numeric_limits<double>::infinity();
    for (float v : row) {
      if (!is_masked(v)) peak = std::max(peak, static_cast<double>(v));
    }
    if (!std::isfinite(peak)) {
      throw InvariantError("softmax row " + std::to_string(r) + " is fully masked");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      w[j] = is_masked(row[j]) ? 0.0 : std::exp(tau * (row[j] - peak));
      total += w[j];
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double p = w[j] / total;
      row[j] = p < 1e-45 ? 0.0f : static_cast<float>(p);
    }
  }
}

SimilarityMatrix cosine_similarity_matrix(const Matrix& tokens) {
  const Matrix normalized = normalize_rows(tokens, kMinTokenNorm, "cosine similarity");
  return {masked_cosine_rows(normalized, 0, normalized.rows())};
}

Matrix masked_temperature_softmax(const SimilarityMatrix& sim, float tau) {
  Matrix weights = sim.values;
  masked_softmax_rows_inplace(weights, tau);
  return weights;
}

Matrix scra_attention_weights(const TokenMatrix& window, float tau) {
  window.check_shape();
  if (!(tau > 0.0f)) throw InputError("scra temperature must be positive");
  return masked_temperature_softmax(cosine_similarity_matrix(window.patch_tokens()), tau);
}

TokenMatrix scra(const TokenMatrix& window, const WeightBundle& weights, float tau) {
  window.check_shape();
  const std::size_t d = weights.model_dim();
  if (window.tokens.cols() != d) {
    throw ShapeError("window token width " + std::to_string(window.tokens.cols()) +
                     " does not match bundle dim " + std::to_string(d));
  }
  const Matrix patches = window.patch_tokens();
  const Matrix attn = scra_attention_weights(window, tau);

  // Every head shares `attn`, so aggregating each D/num_heads slice of V and
  // concatenating is the same product as attn * V over the full width.
  const Matrix values = affine(patches, weights.attn_value_weight, weights.attn_value_bias);
  const Matrix mixed = matmul(attn, values);

  Matrix hidden = affine(mixed, weights.attn_out_weight, weights.attn_out_bias);
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    hidden.values()[i] += patches.values()[i];
  }

  Matrix ffn = affine(layer_norm(hidden, weights.ln2_gamma, weights.ln2_beta,
                                 weights.meta.layer_norm_eps),
                      weights.ffn_w1, weights.ffn_b1);
  gelu_inplace(ffn);
  const Matrix ffn_out = affine(ffn, weights.ffn_w2, weights.ffn_b2);

  TokenMatrix out = window;
  for (std::size_t r = 0; r < patches.rows(); ++r) {
    const auto h = hidden.row(r);
    const auto f = ffn_out.row(r);
    auto dst = out.tokens.row(window.num_special + r);
    for (std::size_t c = 0; c < d; ++c) dst[c] = h[c] + f[c];
  }
  return out;
}

}  // namespace radseg
