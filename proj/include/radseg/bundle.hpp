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
#ifndef RADSEG_BUNDLE_HPP_
#define RADSEG_BUNDLE_HPP_

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radseg/matrix.hpp"

namespace radseg {

inline constexpr float kDefaultLogitScale = 100.0f;

// Role names in the manifest "tensors" object. logit_scale is optional.
inline constexpr std::array<std::string_view, 15> kRequiredRoles = {
    "attn_value_weight", "attn_value_bias", "attn_out_weight", "attn_out_bias",
    "ln2_gamma",         "ln2_beta",        "ffn_w1",          "ffn_b1",
    "ffn_w2",            "ffn_b2",          "adaptor_w1",      "adaptor_b1",
    "adaptor_w2",        "adaptor_b2",      "text_bank"};

struct BundleMetadata {
  std::string model;
  std::string activation = "gelu";
  int patch_size = 16;
  int num_special_tokens = 0;
  int num_heads = 1;
  float layer_norm_eps = 1e-6f;
  std::vector<std::string> class_names;
  std::optional<int> ignore_index;
  std::vector<std::string> templates;
};

// Exported weights of the last transformer block, the language adaptor and the
// text bank. Weight matrices are [in x out]: y = x * W + b for row vectors x.
struct WeightBundle {
  Matrix attn_value_weight;           // D x D
  std::vector<float> attn_value_bias; // D
  Matrix attn_out_weight;             // D x D
  std::vector<float> attn_out_bias;   // D
  std::vector<float> ln2_gamma;       // D
  std::vector<float> ln2_beta;        // D
  Matrix ffn_w1;                      // D x D_ff
  std::vector<float> ffn_b1;          // D_ff
  Matrix ffn_w2;                      // D_ff x D
  std::vector<float> ffn_b2;          // D
  Matrix adaptor_w1;                  // D x D_a
  std::vector<float> adaptor_b1;      // D_a
  Matrix adaptor_w2;                  // D_a x D_t
  std::vector<float> adaptor_b2;      // D_t
  Matrix text_bank;                   // K x D_t, not necessarily normalized
  float logit_scale = kDefaultLogitScale;
  BundleMetadata meta;

  std::size_t model_dim() const { return attn_value_weight.rows(); }
  std::size_t ffn_dim() const { return ffn_w1.cols(); }
  std::size_t adaptor_dim() const { return adaptor_w1.cols(); }
  std::size_t text_dim() const { return text_bank.cols(); }
  std::size_t num_classes() const { return text_bank.rows(); }

  // Throws InputError on missing data or inconsistent dims.
  void validate() const;
};

// Reads a JSON manifest; tensor paths are relative to the manifest directory.
WeightBundle load_bundle(const std::filesystem::path& manifest_path);

// Writes every role as f32 plus manifest.json into `dir`; returns the manifest
// path.
std::filesystem::path write_bundle(const std::filesystem::path& dir,
                                   const WeightBundle& bundle);

}  // namespace radseg

#endif  // RADSEG_BUNDLE_HPP_
