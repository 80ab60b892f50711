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
#ifndef RADSEG_RESAMPLE_HPP_
#define RADSEG_RESAMPLE_HPP_

#include <cstddef>
#include <span>

#include "radseg/attention.hpp"
#include "radseg/matrix.hpp"

namespace radseg {

// Source taps for one output coordinate under half-pixel-center bilinear
// sampling with edge clamping (align_corners = false).
struct BilinearTap {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double weight_hi = 0.0;  // weight of `hi`; `lo` gets 1 - weight_hi
};

BilinearTap bilinear_tap(std::size_t out_index, std::size_t out_size,
                         std::size_t in_size);

// Interpolates every channel of a grid (one row per cell) at output pixel
// (y, x) of an out_h x out_w target into `out`.
void bilinear_sample(const Matrix& grid_values, GridShape grid, std::size_t out_h,
                     std::size_t out_w, std::size_t y, std::size_t x,
                     std::span<float> out);

// Whole-grid resize; returns out_h * out_w rows.
Matrix bilinear_resize(const Matrix& grid_values, GridShape grid, std::size_t out_h,
                       std::size_t out_w);

}  // namespace radseg

#endif  // RADSEG_RESAMPLE_HPP_
