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
#include "radseg/mapper3d.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "radseg/errors.hpp"
#include "radseg/resample.hpp"

namespace radseg {
namespace {

constexpr std::int64_t kKeyOffset = 1 << 20;
constexpr std::uint64_t kKeyMask = (1u << 21) - 1;

}  // namespace

Pose identity_pose() {
  return {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += a[i * 4 + k] * b[k * 4 + j];
      out[i * 4 + j] = s;
    }
  }
  return out;
}

std::array<double, 3> transform_point(const Pose& m, const std::array<double, 3>& p) {
  return {m[0] * p[0] + m[1] * p[1] + m[2] * p[2] + m[3],
          m[4] * p[0] + m[5] * p[1] + m[6] * p[2] + m[7],
          m[8] * p[0] + m[9] * p[1] + m[10] * p[2] + m[11]};
}

void validate_pose(const Pose& m) {
  constexpr double kTol = 1e-5;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += m[i * 4 + k] * m[j * 4 + k];
      if (std::abs(s - (i == j ? 1.0 : 0.0)) > kTol) {
        throw InputError("pose rotation block is not orthonormal");
      }
    }
  }
  const double det = m[0] * (m[5] * m[10] - m[6] * m[9]) -
                     m[1] * (m[4] * m[10] - m[6] * m[8]) +
                     m[2] * (m[4] * m[9] - m[5] * m[8]);
  if (std::abs(det - 1.0) > kTol) throw InputError("pose rotation has determinant != +1");
  if (m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0) {
    throw InputError("pose last row must be (0, 0, 0, 1)");
  }
}

void CameraFrame::validate() const {
  validate_pose(pose);
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0)) {
    throw InputError("camera focal lengths must be positive");
  }
  if (depth.size() != size.height * size.width) throw ShapeError("depth size mismatch");
  if (payload.rows() != payload_grid.cells()) throw ShapeError("payload grid mismatch");
  if (payload_grid.rows == 0 || payload_grid.cols == 0) throw ShapeError("empty payload grid");
}

PointCloud backproject(const CameraFrame& frame, const BackprojectOptions& options) {
  frame.validate();
  const std::size_t h = frame.size.height;
  const std::size_t w = frame.size.width;
  const bool same_grid = frame.payload_grid.rows == h && frame.payload_grid.cols == w;
  const Matrix resized =
      same_grid ? Matrix() : bilinear_resize(frame.payload, frame.payload_grid, h, w);
  const Matrix& payload = same_grid ? frame.payload : resized;

  PointCloud cloud;
  std::vector<std::size_t> kept;
  const auto& k = frame.intrinsics;
  for (std::size_t v = 0; v < h; ++v) {
    for (std::size_t u = 0; u < w; ++u) {
      const double d = frame.depth[v * w + u];
      if (!(d > 0.0) || d > options.max_depth) continue;  // also rejects NaN
      const std::array<double, 3> cam = {(static_cast<double>(u) - k.cx) * d / k.fx,
                                         (static_cast<double>(v) - k.cy) * d / k.fy, d};
      cloud.positions.push_back(transform_point(frame.pose, cam));
      kept.push_back(v * w + u);
    }
  }
  cloud.payload = Matrix(kept.size(), payload.cols());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto src = payload.row(kept[i]);
    std::copy(src.begin(), src.end(), cloud.payload.row(i).begin());
  }
  return cloud;
}

VoxelKey voxel_key(const std::array<double, 3>& p, double voxel_size) {
  return {static_cast<std::int32_t>(std::floor(p[0] / voxel_size)),
          static_cast<std::int32_t>(std::floor(p[1] / voxel_size)),
          static_cast<std::int32_t>(std::floor(p[2] / voxel_size))};
}

std::uint64_t pack_key(VoxelKey key) {
  auto axis = [](std::int32_t v) {
    const std::int64_t shifted = static_cast<std::int64_t>(v) + kKeyOffset;
    if (shifted < 0 || shifted > static_cast<std::int64_t>(kKeyMask)) {
      throw InputError("voxel coordinate " + std::to_string(v) + " outside packable range");
    }
    return static_cast<std::uint64_t>(shifted);
  };
  return (axis(key.x) << 42) | (axis(key.y) << 21) | axis(key.z);
}

VoxelKey unpack_key(std::uint64_t packed) {
  auto axis = [](std::uint64_t bits) {
    return static_cast<std::int32_t>(static_cast<std::int64_t>(bits & kKeyMask) - kKeyOffset);
  };
  return {axis(packed >> 42), axis(packed >> 21), axis(packed)};
}

VoxelMap::VoxelMap(double voxel_size, std::size_t channels)
    : voxel_size_(voxel_size), channels_(channels) {
  if (!(voxel_size > 0.0)) throw InputError("voxel size must be positive");
  if (channels == 0) throw InputError("voxel payload must have at least one channel");
}

void VoxelMap::fold(std::uint64_t key, std::span<const double> local_mean,
                    std::uint64_t hits) {
  auto [it, inserted] = cells_.try_emplace(key);
  Cell& cell = it->second;
  if (inserted) {
    cell.mean.assign(local_mean.begin(), local_mean.end());
    cell.hits = hits;
  } else {
    const double w = static_cast<double>(hits) / static_cast<double>(cell.hits + hits);
    for (std::size_t c = 0; c < channels_; ++c) {
      cell.mean[c] += (local_mean[c] - cell.mean[c]) * w;
    }
    cell.hits += hits;
  }
  total_hits_ += hits;
}

void VoxelMap::integrate(const PointCloud& cloud) {
  if (cloud.payload.rows() != cloud.positions.size()) {
    throw ShapeError("point cloud payload rows disagree with positions");
  }
  if (cloud.size() == 0) return;
  if (cloud.payload.cols() != channels_) {
    throw ShapeError("point payload width " + std::to_string(cloud.payload.cols()) +
                     " does not match map width " + std::to_string(channels_));
  }
  struct Local {
    std::vector<double> sum;
    std::uint64_t hits = 0;
  };
  // Ordered so folding into the global map is deterministic.
  std::map<std::uint64_t, Local> local;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Local& l = local[pack_key(voxel_key(cloud.positions[i], voxel_size_))];
    if (l.sum.empty()) l.sum.assign(channels_, 0.0);
    const auto f = cloud.payload.row(i);
    for (std::size_t c = 0; c < channels_; ++c) l.sum[c] += f[c];
    ++l.hits;
  }
  std::vector<double> mean(channels_);
  for (auto& [key, l] : local) {
    for (std::size_t c = 0; c < channels_; ++c) {
      mean[c] = l.sum[c] / static_cast<double>(l.hits);
    }
    fold(key, mean, l.hits);
  }
}

const VoxelMap::Cell* VoxelMap::find(std::uint64_t packed_key) const {
  const auto it = cells_.find(packed_key);
  return it == cells_.end() ? nullptr : &it->second;
}

std::vector<std::uint64_t> VoxelMap::sorted_keys() const {
  std::vector<std::uint64_t> keys;
  keys.reserve(cells_.size());
  for (const auto& [k, _] : cells_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

VoxelExport VoxelMap::export_sorted() const {
  VoxelExport out;
  out.keys = sorted_keys();
  out.means = Matrix(out.keys.size(), channels_);
  out.counts.reserve(out.keys.size());
  for (std::size_t i = 0; i < out.keys.size(); ++i) {
    const Cell& cell = cells_.at(out.keys[i]);
    auto dst = out.means.row(i);
    for (std::size_t c = 0; c < channels_; ++c) dst[c] = static_cast<float>(cell.mean[c]);
    out.counts.push_back(cell.hits);
  }
  return out;
}

VoxelMap integrate_frame(VoxelMap map, const PointCloud& cloud) {
  map.integrate(cloud);
  return map;
}

VoxelLabels query_map(const VoxelMap& map, const TextBank& bank, LiftMode mode) {
  const std::size_t expected =
      mode == LiftMode::kFeature ? bank.embeddings.cols() : bank.num_classes();
  if (map.channels() != expected) {
    throw InputError(std::string(mode == LiftMode::kFeature ? "feature" : "probability") +
                     " mode expects payload width " + std::to_string(expected) +
                     ", map holds " + std::to_string(map.channels()));
  }
  VoxelExport ex = map.export_sorted();
  VoxelLabels out{std::move(ex.keys), {}};
  out.labels.reserve(out.keys.size());
  if (mode == LiftMode::kFeature) {
    const Matrix logits = cosine_logits(ex.means, bank);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      out.labels.push_back(static_cast<std::int32_t>(argmax_lowest(logits.row(i))));
    }
    return out;
  }
  for (std::size_t i = 0; i < ex.means.rows(); ++i) {
    auto row = ex.means.row(i);
    double total = 0.0;
    for (float v : row) total += v;
    if (total > 0.0) {
      for (float& v : row) v = static_cast<float>(v / total);
    }
    out.labels.push_back(static_cast<std::int32_t>(argmax_lowest(row)));
  }
  return out;
}

}  // namespace radseg
