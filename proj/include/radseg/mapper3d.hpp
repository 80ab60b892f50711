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
// Lifting per-frame feature or probability maps into a sparse voxel map.
//
// Depth pixels are back-projected through a pinhole model and the camera pose.
// Points falling in the same voxel are averaged with their hit counts as
// weights, so every voxel holds the mean payload of all observations it has
// received and the number of those observations.
#ifndef RADSEG_MAPPER3D_HPP_
#define RADSEG_MAPPER3D_HPP_

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "radseg/lang_align.hpp"
#include "radseg/matrix.hpp"
#include "radseg/windows.hpp"

namespace radseg {

inline constexpr double kDefaultVoxelSize = 0.05;
inline constexpr double kDefaultMaxDepth = 10.0;

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

// Row-major 4x4 camera-to-world rigid transform.
using Pose = std::array<double, 16>;

Pose identity_pose();
Pose compose(const Pose& a, const Pose& b);
std::array<double, 3> transform_point(const Pose& pose, const std::array<double, 3>& p);
// Throws InputError unless the rotation block is orthonormal within 1e-5 with
// determinant +1 and the last row is (0, 0, 0, 1).
void validate_pose(const Pose& pose);

struct CameraFrame {
  Pose pose = identity_pose();
  Intrinsics intrinsics;
  ImageSize size;             // depth resolution
  std::vector<float> depth;   // meters; <= 0, NaN or > max_depth are invalid
  GridShape payload_grid;     // may be coarser than depth
  Matrix payload;             // payload_grid.cells() x C

  void validate() const;
};

struct PointCloud {
  std::vector<std::array<double, 3>> positions;
  Matrix payload;

  std::size_t size() const { return positions.size(); }
};

struct BackprojectOptions {
  double max_depth = kDefaultMaxDepth;
};

// Payload is bilinearly resampled to depth resolution when the grids differ.
PointCloud backproject(const CameraFrame& frame, const BackprojectOptions& options = {});

struct VoxelKey {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;
  bool operator==(const VoxelKey&) const = default;
};

// floor(p / voxel_size) per axis.
VoxelKey voxel_key(const std::array<double, 3>& p, double voxel_size);
// 21 bits per axis, offset by 2^20; throws InputError outside that range.
std::uint64_t pack_key(VoxelKey key);
VoxelKey unpack_key(std::uint64_t packed);

struct VoxelExport {
  std::vector<std::uint64_t> keys;  // ascending
  Matrix means;
  std::vector<std::uint64_t> counts;
};

class VoxelMap {
 public:
  struct Cell {
    std::vector<double> mean;
    std::uint64_t hits = 0;
  };

  VoxelMap(double voxel_size, std::size_t channels);

  double voxel_size() const { return voxel_size_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return cells_.size(); }
  std::uint64_t total_hits() const { return total_hits_; }

  // Voxelizes the cloud locally, then folds each local voxel into the map as a
  // hit-count-weighted running mean. Throws ShapeError on payload width
  // mismatch.
  void integrate(const PointCloud& cloud);

  const Cell* find(std::uint64_t packed_key) const;
  std::vector<std::uint64_t> sorted_keys() const;
  VoxelExport export_sorted() const;

 private:
  void fold(std::uint64_t key, std::span<const double> local_mean, std::uint64_t hits);

  double voxel_size_;
  std::size_t channels_;
  std::uint64_t total_hits_ = 0;
  std::unordered_map<std::uint64_t, Cell> cells_;
};

VoxelMap integrate_frame(VoxelMap map, const PointCloud& cloud);

enum class LiftMode { kFeature, kProbability };

struct VoxelLabels {
  std::vector<std::uint64_t> keys;  // ascending
  std::vector<std::int32_t> labels;
};

// Feature mode: cosine argmax against the bank (payload width D_t). Probability
// mode: argmax of the renormalized fused class vector (payload width K).
VoxelLabels query_map(const VoxelMap& map, const TextBank& bank, LiftMode mode);

}  // namespace radseg

#endif  // RADSEG_MAPPER3D_HPP_
