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
#include "radseg/resample.hpp"

#include <algorithm>
#include <cmath>

#include "radseg/errors.hpp"

namespace radseg {

BilinearTap bilinear_tap(std::size_t out_index, std::size_t out_size,
                         std::size_t in_size) {
  const double scale = static_cast<double>(in_size) / static_cast<double>(out_size);
  double src = (static_cast<double>(out_index) + 0.5) * scale - 0.5;
  src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
  BilinearTap tap;
  tap.lo = static_cast<std::size_t>(std::floor(src));
  tap.hi = std::min(tap.lo + 1, in_size - 1);
  tap.weight_hi = src - static_cast<double>(tap.lo);
  return tap;
}

void bilinear_sample(const Matrix& grid_values, GridShape grid, std::size_t out_h,
                     std::size_t out_w, std::size_t y, std::size_t x,
                     std::span<float> out) {
  const BilinearTap ty = bilinear_tap(y, out_h, grid.rows);
  const BilinearTap tx = bilinear_tap(x, out_w, grid.cols);
  const auto a = grid_values.row(ty.lo * grid.cols + tx.lo);
  const auto b = grid_values.row(ty.lo * grid.cols + tx.hi);
  const auto c = grid_values.row(ty.hi * grid.cols + tx.lo);
  const auto d = grid_values.row(ty.hi * grid.cols + tx.hi);
  const double wy = ty.weight_hi;
  const double wx = tx.weight_hi;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double top = a[k] * (1.0 - wx) + b[k] * wx;
    const double bottom = c[k] * (1.0 - wx) + d[k] * wx;
    out[k] = static_cast<float>(top * (1.0 - wy) + bottom * wy);
  }
}

Matrix bilinear_resize(const Matrix& grid_values, GridShape grid, std::size_t out_h,
                       std::size_t out_w) {
  if (grid_values.rows() != grid.cells()) throw ShapeError("grid rows disagree with shape");
  if (out_h == 0 || out_w == 0 || grid.rows == 0 || grid.cols == 0) {
    throw ShapeError("bilinear_resize: empty grid");
  }
  Matrix out(out_h * out_w, grid_values.cols());
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      bilinear_sample(grid_values, grid, out_h, out_w, y, x, out.row(y * out_w + x));
    }
  }
  return out;
}

}  // namespace radseg
