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
// Random data and synthetic on-disk fixtures for tests.
#ifndef RADSEG_TESTS_SUPPORT_FIXTURES_HPP_
#define RADSEG_TESTS_SUPPORT_FIXTURES_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "radseg/bundle.hpp"
#include "radseg/mapper3d.hpp"
#include "radseg/matrix.hpp"
#include "radseg/windows.hpp"

namespace radseg::testing {

using Rng = std::mt19937_64;

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                     double hi = 1.0);
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double sigma = 1.0);
std::vector<float> random_vector(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0);
Matrix identity(std::size_t n);
// K orthonormal rows in R^D (K <= D) by Gram-Schmidt on Gaussian draws.
Matrix orthonormal_rows(std::size_t k, std::size_t d, Rng& rng);

struct BundleDims {
  std::size_t d = 8;
  std::size_t ffn = 16;
  std::size_t adaptor = 8;
  std::size_t text = 6;
  std::size_t classes = 4;
  int heads = 2;
  int num_special = 1;
  int patch_size = 16;
};

// Small random bundle with weights of magnitude ~0.3.
WeightBundle random_bundle(const BundleDims& dims, Rng& rng);

// Bundle over D = D_t = bank.cols(): value/out projections are identities,
// the FFN is zero and the adaptor is gelu(x + 3) - 3 (W1 = W2 = I).
WeightBundle identity_bundle(const Matrix& bank, int patch_size, int num_special);

// Element-wise inverse of the identity bundle's adaptor, by bisection.
std::vector<float> adaptor_preimage(std::span<const float> target);

struct Synthetic2d {
  std::filesystem::path root;
  std::filesystem::path manifest;
  std::filesystem::path features;
  std::filesystem::path ground_truth;  // labels/<name>.rstf, i32 [H, W]
  std::vector<std::string> images;
  Matrix bank;
};

struct Synthetic2dOptions {
  std::size_t classes = 8;
  std::size_t dims = 16;
  double noise = 0.05;
  std::size_t patch_size = 16;
  std::size_t num_special = 1;
  std::size_t crop = 336;
  std::size_t stride = 224;
  std::vector<ImageSize> sizes = {{448, 448}, {448, 560}};
  std::uint64_t seed = 7;
};

// Planted Voronoi label images on the patch grid; every window token is the
// adaptor preimage of its class embedding plus Gaussian noise.
Synthetic2d make_synthetic_2d(const std::filesystem::path& root,
                              const Synthetic2dOptions& options = {});

struct Synthetic3d {
  std::filesystem::path root;
  std::filesystem::path manifest;
  std::filesystem::path frames;
  std::filesystem::path ground_truth;  // keys.rstf + labels.rstf
  Matrix bank;
  double voxel_size = 0.05;
};

struct Synthetic3dOptions {
  double noise = 0.05;
  double voxel_size = 0.05;
  std::size_t frames = 8;
  std::size_t width = 96;
  std::size_t height = 72;
  std::uint64_t seed = 11;
};

// Three spheres of distinct classes ray-cast from cameras on a ring. Payloads
// are class embeddings plus noise at depth resolution. Ground truth labels the
// voxels of densely sampled sphere surfaces.
Synthetic3d make_synthetic_3d(const std::filesystem::path& root,
                              const Synthetic3dOptions& options = {});

// Camera-to-world pose at `eye` looking at `target` (camera z forward, y down).
Pose look_at(const std::array<double, 3>& eye, const std::array<double, 3>& target);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

// All regular files under dir, as relative path -> bytes.
std::vector<std::pair<std::string, std::string>> read_tree(const std::filesystem::path& dir);

}  // namespace radseg::testing

#endif  // RADSEG_TESTS_SUPPORT_FIXTURES_HPP_
