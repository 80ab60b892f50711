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
#include "radseg/matrix.hpp"

#include <cmath>
#include <string>

#include "radseg/errors.hpp"

namespace radseg {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data has " + std::to_string(data_.size()) +
                     " elements, expected " + std::to_string(rows_ * cols_));
  }
}

Matrix Matrix::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) throw ShapeError("row slice out of range");
  Matrix out(end - begin, cols_);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>(end * cols_),
            out.data_.begin());
  return out;
}

Matrix Matrix::slice_cols(std::size_t begin, std::size_t end) const {
  if (begin > end || end > cols_) throw ShapeError("column slice out of range");
  Matrix out(rows_, end - begin);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = (*this)(r, c);
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()));
  }
  Matrix out(a.rows(), b.cols());
  std::vector<double> acc(b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < brow.size(); ++j) acc[j] += aik * brow[j];
    }
    auto orow = out.row(i);
    for (std::size_t j = 0; j < orow.size(); ++j) {
      orow[j] = static_cast<float>(acc[j]);
    }
  }
  return out;
}

Matrix affine(const Matrix& x, const Matrix& w, std::span<const float> bias) {
  if (bias.size() != w.cols()) throw ShapeError("affine: bias width mismatch");
  Matrix out = matmul(x, w);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
  return out;
}

float gelu(float x) {
  const double xd = x;
  return static_cast<float>(0.5 * xd * (1.0 + std::erf(xd / std::sqrt(2.0))));
}

void gelu_inplace(Matrix& m) {
  for (float& v : m.values()) v = gelu(v);
}

Matrix layer_norm(const Matrix& x, std::span<const float> gamma,
                  std::span<const float> beta, float eps) {
  if (gamma.size() != x.cols() || beta.size() != x.cols()) {
    throw ShapeError("layer_norm: affine parameter width mismatch");
  }
  Matrix out(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double mean = 0.0;
    for (float v : row) mean += v;
    mean /= n;
    double var = 0.0;
    for (float v : row) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    auto orow = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      orow[c] = static_cast<float>((row[c] - mean) * inv * gamma[c] + beta[c]);
    }
  }
  return out;
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

double l2_norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

Matrix normalize_rows(const Matrix& m, double min_norm, const char* what) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double norm = l2_norm(m.row(r));
    if (!(norm > min_norm)) {
      throw InputError(std::string(what) + ": row " + std::to_string(r) +
                       " has zero norm");
    }
    const auto src = m.row(r);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < src.size(); ++c) {
      dst[c] = static_cast<float>(src[c] / norm);
    }
  }
  return out;
}

}  // namespace radseg
