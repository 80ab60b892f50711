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
#include "radseg/bundle.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "radseg/errors.hpp"
#include "radseg/tensor_store.hpp"

namespace radseg {
namespace {

using nlohmann::json;

std::string dims_str(std::size_t r, std::size_t c) {
  return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}

void expect_matrix(const Matrix& m, std::size_t rows, std::size_t cols,
                   const char* role) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InputError(std::string("bundle role ") + role + " has shape " +
                     dims_str(m.rows(), m.cols()) + ", expected " +
                     dims_str(rows, cols));
  }
}

void expect_vector(const std::vector<float>& v, std::size_t n, const char* role) {
  if (v.size() != n) {
    throw InputError(std::string("bundle role ") + role + " has length " +
                     std::to_string(v.size()) + ", expected " + std::to_string(n));
  }
}

Matrix load_matrix(const Tensor& t, const std::string& role) {
  if (t.dims.size() != 2) {
    throw InputError("bundle role " + role + " must be rank 2");
  }
  return t.to_matrix();
}

std::vector<float> load_vector(const Tensor& t, const std::string& role) {
  if (t.dims.size() != 1) {
    throw InputError("bundle role " + role + " must be rank 1");
  }
  return t.to_f32();
}

}  // namespace

void WeightBundle::validate() const {
  const std::size_t d = model_dim();
  if (d == 0) throw InputError("bundle has an empty model dimension");
  expect_matrix(attn_value_weight, d, d, "attn_value_weight");
  expect_vector(attn_value_bias, d, "attn_value_bias");
  expect_matrix(attn_out_weight, d, d, "attn_out_weight");
  expect_vector(attn_out_bias, d, "attn_out_bias");
  expect_vector(ln2_gamma, d, "ln2_gamma");
  expect_vector(ln2_beta, d, "ln2_beta");
  const std::size_t dff = ffn_dim();
  expect_matrix(ffn_w1, d, dff, "ffn_w1");
  expect_vector(ffn_b1, dff, "ffn_b1");
  expect_matrix(ffn_w2, dff, d, "ffn_w2");
  expect_vector(ffn_b2, d, "ffn_b2");
  const std::size_t da = adaptor_dim();
  expect_matrix(adaptor_w1, d, da, "adaptor_w1");
  expect_vector(adaptor_b1, da, "adaptor_b1");
  const std::size_t dt = adaptor_w2.cols();
  expect_matrix(adaptor_w2, da, dt, "adaptor_w2");
  expect_vector(adaptor_b2, dt, "adaptor_b2");
  if (text_bank.cols() != dt) {
    throw InputError("bundle role text_bank has width " +
                     std::to_string(text_bank.cols()) +
                     ", adaptor output width is " + std::to_string(dt));
  }
  if (text_bank.rows() < 2) throw InputError("text_bank needs at least 2 classes");
  for (std::size_t k = 0; k < text_bank.rows(); ++k) {
    const double n = l2_norm(text_bank.row(k));
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw InputError("text_bank row " + std::to_string(k) + " has zero norm");
    }
  }
  if (meta.num_heads <= 0 || d % static_cast<std::size_t>(meta.num_heads) != 0) {
    throw InputError("num_heads " + std::to_string(meta.num_heads) +
                     " does not divide model dim " + std::to_string(d));
  }
  if (meta.patch_size <= 0) throw InputError("patch_size must be positive");
  if (meta.num_special_tokens < 0) throw InputError("num_special_tokens must be >= 0");
  if (meta.activation != "gelu") {
    throw InputError("unsupported adaptor activation '" + meta.activation + "'");
  }
  if (!(meta.layer_norm_eps > 0.0f)) throw InputError("layer_norm_eps must be positive");
  if (meta.class_names.size() != text_bank.rows()) {
    throw InputError("class_names lists " + std::to_string(meta.class_names.size()) +
                     " names for " + std::to_string(text_bank.rows()) + " bank rows");
  }
  if (meta.ignore_index &&
      (*meta.ignore_index < 0 ||
       static_cast<std::size_t>(*meta.ignore_index) >= text_bank.rows())) {
    throw InputError("ignore_index out of range");
  }
  if (!(logit_scale > 0.0f) || !std::isfinite(logit_scale)) {
    throw InputError("logit_scale must be positive and finite");
  }
}

WeightBundle load_bundle(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw InputError("cannot open bundle manifest " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("malformed bundle manifest: " + std::string(e.what()));
  }
  const auto base = manifest_path.parent_path();

  WeightBundle b;
  try {
    if (doc.value("format", "") != "radseg-bundle") {
      throw InputError("manifest format tag must be \"radseg-bundle\"");
    }
    if (doc.value("version", 0) != 1) throw InputError("unsupported manifest version");
    auto& m = b.meta;
    m.model = doc.value("model", "");
    m.activation = doc.at("activation").get<std::string>();
    m.patch_size = doc.at("patch_size").get<int>();
    m.num_special_tokens = doc.at("num_special_tokens").get<int>();
    m.num_heads = doc.at("num_heads").get<int>();
    m.layer_norm_eps = doc.value("layer_norm_eps", 1e-6f);
    m.class_names = doc.at("class_names").get<std::vector<std::string>>();
    if (doc.contains("ignore_index") && !doc["ignore_index"].is_null()) {
      m.ignore_index = doc["ignore_index"].get<int>();
    }
    m.templates = doc.value("templates", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw InputError("bundle manifest metadata: " + std::string(e.what()));
  }

  const json tensors = doc.value("tensors", json::object());
  auto load = [&](std::string_view role) {
    const std::string key(role);
    if (!tensors.contains(key)) throw InputError("bundle manifest missing role " + key);
    try {
      return read_tensor(base / tensors[key].get<std::string>());
    } catch (const InputError& e) {
      throw InputError("bundle role " + key + ": " + e.what());
    }
  };

  b.attn_value_weight = load_matrix(load("attn_value_weight"), "attn_value_weight");
  b.attn_value_bias = load_vector(load("attn_value_bias"), "attn_value_bias");
  b.attn_out_weight = load_matrix(load("attn_out_weight"), "attn_out_weight");
  b.attn_out_bias = load_vector(load("attn_out_bias"), "attn_out_bias");
  b.ln2_gamma = load_vector(load("ln2_gamma"), "ln2_gamma");
  b.ln2_beta = load_vector(load("ln2_beta"), "ln2_beta");
  b.ffn_w1 = load_matrix(load("ffn_w1"), "ffn_w1");
  b.ffn_b1 = load_vector(load("ffn_b1"), "ffn_b1");
  b.ffn_w2 = load_matrix(load("ffn_w2"), "ffn_w2");
  b.ffn_b2 = load_vector(load("ffn_b2"), "ffn_b2");
  b.adaptor_w1 = load_matrix(load("adaptor_w1"), "adaptor_w1");
  b.adaptor_b1 = load_vector(load("adaptor_b1"), "adaptor_b1");
  b.adaptor_w2 = load_matrix(load("adaptor_w2"), "adaptor_w2");
  b.adaptor_b2 = load_vector(load("adaptor_b2"), "adaptor_b2");
  b.text_bank = load_matrix(load("text_bank"), "text_bank");
  if (tensors.contains("logit_scale")) {
    const auto scale = load("logit_scale");
    if (scale.numel() != 1) throw InputError("logit_scale must hold one element");
    b.logit_scale = scale.to_f32().front();
  }
  b.validate();
  return b;
}

std::filesystem::path write_bundle(const std::filesystem::path& dir,
                                   const WeightBundle& bundle) {
  bundle.validate();
  std::filesystem::create_directories(dir);
  json tensors = json::object();
  auto put_matrix = [&](const char* role, const Matrix& m) {
    const std::string file = std::string(role) + ".rstf";
    write_tensor(dir / file, Tensor::from_matrix(m));
    tensors[role] = file;
  };
  auto put_vector = [&](const char* role, std::span<const float> v) {
    const std::string file = std::string(role) + ".rstf";
    write_tensor(dir / file, Tensor::from_f32({v.size()}, v));
    tensors[role] = file;
  };
  put_matrix("attn_value_weight", bundle.attn_value_weight);
  put_vector("attn_value_bias", bundle.attn_value_bias);
  put_matrix("attn_out_weight", bundle.attn_out_weight);
  put_vector("attn_out_bias", bundle.attn_out_bias);
  put_vector("ln2_gamma", bundle.ln2_gamma);
  put_vector("ln2_beta", bundle.ln2_beta);
  put_matrix("ffn_w1", bundle.ffn_w1);
  put_vector("ffn_b1", bundle.ffn_b1);
  put_matrix("ffn_w2", bundle.ffn_w2);
  put_vector("ffn_b2", bundle.ffn_b2);
  put_matrix("adaptor_w1", bundle.adaptor_w1);
  put_vector("adaptor_b1", bundle.adaptor_b1);
  put_matrix("adaptor_w2", bundle.adaptor_w2);
  put_vector("adaptor_b2", bundle.adaptor_b2);
  put_matrix("text_bank", bundle.text_bank);
  const float scale[1] = {bundle.logit_scale};
  put_vector("logit_scale", scale);

  const auto& m = bundle.meta;
  json doc = {
      {"format", "radseg-bundle"},
      {"version", 1},
      {"model", m.model},
      {"activation", m.activation},
      {"patch_size", m.patch_size},
      {"num_special_tokens", m.num_special_tokens},
      {"num_heads", m.num_heads},
      {"layer_norm_eps", m.layer_norm_eps},
      {"class_names", m.class_names},
      {"templates", m.templates},
      {"tensors", tensors},
  };
  doc["ignore_index"] = m.ignore_index ? json(*m.ignore_index) : json(nullptr);
  const auto path = dir / "manifest.json";
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
  return path;
}

}  // namespace radseg
