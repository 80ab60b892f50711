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
// Self-correlating recursive attention.
//
// The last transformer block is re-run with its query/key attention replaced
// by a cosine self-similarity of the block's own output patch tokens. Pairs
// with negative cosine are masked out and the remaining scores are sharpened
// by a temperature before the softmax.
#ifndef RADSEG_ATTENTION_HPP_
#define RADSEG_ATTENTION_HPP_

#include <cstddef>

#include "radseg/bundle.hpp"
#include "radseg/matrix.hpp"

namespace radseg {

// Finite stand-in for -inf in masked similarity cells.
inline constexpr float kMaskSentinel = -1e30f;
// Norms at or below this make cosine similarity undefined.
inline constexpr double kMinTokenNorm = 1e-12;
inline constexpr float kDefaultScraTemperature = 10.0f;

inline bool is_masked(float v) { return v <= kMaskSentinel; }

struct GridShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t cells() const { return rows * cols; }
  bool operator==(const GridShape&) const = default;
};

// Tokens of one window: `num_special` CLS/register rows followed by the patch
// rows in raster order over `grid`.
struct TokenMatrix {
  Matrix tokens;
  std::size_t num_special = 0;
  GridShape grid;

  std::size_t num_patch() const { return tokens.rows() - num_special; }
  Matrix patch_tokens() const { return tokens.slice_rows(num_special, tokens.rows()); }
  // Throws ShapeError if the row count disagrees with num_special + grid.
  void check_shape() const;
};

// M x M cosine similarities, negatives replaced by kMaskSentinel.
struct SimilarityMatrix {
  Matrix values;
  std::size_t size() const { return values.rows(); }
};

// Rows [row_begin, row_end) of the masked cosine matrix of already
// row-normalized vectors. Shared by the dense and tiled paths so both produce
// identical bits.
Matrix masked_cosine_rows(const Matrix& normalized, std::size_t row_begin,
                          std::size_t row_end);

// Row-wise masked softmax of tau * sim, computed in place on a block of rows.
void masked_softmax_rows_inplace(Matrix& block, float tau);

// Throws InputError on a row with norm <= kMinTokenNorm.
SimilarityMatrix cosine_similarity_matrix(const Matrix& tokens);

// Row-stochastic weights; masked cells are exactly 0. Throws InputError if
// tau <= 0.
Matrix masked_temperature_softmax(const SimilarityMatrix& sim, float tau);

// Recomputes the patch rows of `window` through the last block with the
// self-similarity attention; special tokens are returned unchanged.
//
//   A   = softmax_tau(masked_cos(P))          shared by every head
//   V   = P * Wv + bv                         split into num_heads slices
//   H   = concat_h(A * V_h) * Wo + bo + P
//   out = H + FFN(LN2(H))                     FFN = W2 gelu(W1 x + b1) + b2
TokenMatrix scra(const TokenMatrix& window, const WeightBundle& weights,
                 float tau = kDefaultScraTemperature);

// Attention weights SCRA would use for the window's patch tokens.
Matrix scra_attention_weights(const TokenMatrix& window, float tau);

}  // namespace radseg

#endif  // RADSEG_ATTENTION_HPP_
