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
#ifndef RADSEG_MATRIX_HPP_
#define RADSEG_MATRIX_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace radseg {

// Dense row-major f32 matrix. All kernels in this project compute in f32 with
// f64 accumulators.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<float> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const float> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  const std::vector<float>& storage() const { return data_; }

  // Rows [begin, end) copied out.
  Matrix slice_rows(std::size_t begin, std::size_t end) const;
  // Columns [begin, end) copied out.
  Matrix slice_cols(std::size_t begin, std::size_t end) const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

// a (M x K) times b (K x N).
Matrix matmul(const Matrix& a, const Matrix& b);

// x * w + bias, bias broadcast over rows. w is [in x out].
Matrix affine(const Matrix& x, const Matrix& w, std::span<const float> bias);

// Exact erf-based GELU.
float gelu(float x);
void gelu_inplace(Matrix& m);

// Per-row layer norm with affine gamma/beta.
Matrix layer_norm(const Matrix& x, std::span<const float> gamma,
                  std::span<const float> beta, float eps);

double dot(std::span<const float> a, std::span<const float> b);
double l2_norm(std::span<const float> v);

// Row-normalized copy; throws InputError naming `what` if a row norm is at or
// below min_norm.
Matrix normalize_rows(const Matrix& m, double min_norm, const char* what);

}  // namespace radseg

#endif  // RADSEG_MATRIX_HPP_
