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
#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "radseg/pipeline.hpp"
#include "radseg/tensor_store.hpp"

namespace radseg::testing {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string indexed(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%03zu.rstf", i);
  return buf;
}

std::array<double, 3> sub(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

std::array<double, 3> unit(const std::array<double, 3>& a) {
  const double n = std::sqrt(dot3(a, a));
  return {a[0] / n, a[1] / n, a[2] / n};
}

std::vector<std::string> class_names(std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < k; ++i) names.push_back("class" + std::to_string(i));
  return names;
}

}  // namespace

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (float& v : m.values()) v = static_cast<float>(u(rng));
  return m;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double sigma) {
  std::normal_distribution<double> g(0.0, sigma);
  Matrix m(rows, cols);
  for (float& v : m.values()) v = static_cast<float>(g(rng));
  return m;
}

std::vector<float> random_vector(std::size_t n, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(u(rng));
  return v;
}

Matrix identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

Matrix orthonormal_rows(std::size_t k, std::size_t d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> basis;
  while (basis.size() < k) {
    std::vector<double> v(d);
    for (double& x : v) x = g(rng);
    for (const auto& b : basis) {
      double p = 0.0;
      for (std::size_t i = 0; i < d; ++i) p += v[i] * b[i];
      for (std::size_t i = 0; i < d; ++i) v[i] -= p * b[i];
    }
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-6) continue;
    for (double& x : v) x /= n;
    basis.push_back(std::move(v));
  }
  Matrix m(k, d);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < d; ++c) m(r, c) = static_cast<float>(basis[r][c]);
  }
  return m;
}

WeightBundle random_bundle(const BundleDims& dims, Rng& rng) {
  const double s = 0.3;
  WeightBundle b;
  b.attn_value_weight = random_matrix(dims.d, dims.d, rng, -s, s);
  b.attn_value_bias = random_vector(dims.d, rng, -s, s);
  b.attn_out_weight = random_matrix(dims.d, dims.d, rng, -s, s);
  b.attn_out_bias = random_vector(dims.d, rng, -s, s);
  b.ln2_gamma = random_vector(dims.d, rng, 0.5, 1.5);
  b.ln2_beta = random_vector(dims.d, rng, -s, s);
  b.ffn_w1 = random_matrix(dims.d, dims.ffn, rng, -s, s);
  b.ffn_b1 = random_vector(dims.ffn, rng, -s, s);
  b.ffn_w2 = random_matrix(dims.ffn, dims.d, rng, -s, s);
  b.ffn_b2 = random_vector(dims.d, rng, -s, s);
  b.adaptor_w1 = random_matrix(dims.d, dims.adaptor, rng, -s, s);
  b.adaptor_b1 = random_vector(dims.adaptor, rng, -s, s);
  b.adaptor_w2 = random_matrix(dims.adaptor, dims.text, rng, -s, s);
  b.adaptor_b2 = random_vector(dims.text, rng, -s, s);
  b.text_bank = random_matrix(dims.classes, dims.text, rng, -1.0, 1.0);
  b.meta.model = "random-test";
  b.meta.patch_size = dims.patch_size;
  b.meta.num_special_tokens = dims.num_special;
  b.meta.num_heads = dims.heads;
  b.meta.class_names = class_names(dims.classes);
  return b;
}

WeightBundle identity_bundle(const Matrix& bank, int patch_size, int num_special) {
  const std::size_t d = bank.cols();
  WeightBundle b;
  b.attn_value_weight = identity(d);
  b.attn_value_bias.assign(d, 0.0f);
  b.attn_out_weight = identity(d);
  b.attn_out_bias.assign(d, 0.0f);
  b.ln2_gamma.assign(d, 1.0f);
  b.ln2_beta.assign(d, 0.0f);
  b.ffn_w1 = Matrix(d, d);
  b.ffn_b1.assign(d, 0.0f);
  b.ffn_w2 = Matrix(d, d);
  b.ffn_b2.assign(d, 0.0f);
  b.adaptor_w1 = identity(d);
  b.adaptor_b1.assign(d, 3.0f);
  b.adaptor_w2 = identity(d);
  b.adaptor_b2.assign(d, -3.0f);
  b.text_bank = bank;
  b.meta.model = "identity-test";
  b.meta.patch_size = patch_size;
  b.meta.num_special_tokens = num_special;
  b.meta.num_heads = 2;
  b.meta.class_names = class_names(bank.rows());
  return b;
}

std::vector<float> adaptor_preimage(std::span<const float> target) {
  auto f = [](double x) {
    const double z = x + 3.0;
    return 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0))) - 3.0;
  };
  std::vector<float> out(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    // f is increasing on [-2.2, inf), which covers targets in [-3, 3].
    double lo = -2.2;
    double hi = 4.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) < target[i] ? lo : hi) = mid;
    }
    out[i] = static_cast<float>(0.5 * (lo + hi));
  }
  return out;
}

Synthetic2d make_synthetic_2d(const fs::path& root, const Synthetic2dOptions& o) {
  Rng rng(o.seed);
  Synthetic2d fx;
  fx.root = root;
  fx.bank = orthonormal_rows(o.classes, o.dims, rng);
  const WeightBundle bundle = identity_bundle(fx.bank, static_cast<int>(o.patch_size),
                                              static_cast<int>(o.num_special));
  fx.manifest = write_bundle(root / "bundle", bundle);
  fx.features = root / "features";
  fx.ground_truth = root / "gt";
  fs::create_directories(fx.ground_truth);

  std::vector<std::vector<float>> preimages;
  for (std::size_t k = 0; k < o.classes; ++k) preimages.push_back(adaptor_preimage(fx.bank.row(k)));

  std::normal_distribution<double> noise(0.0, o.noise);
  for (std::size_t n = 0; n < o.sizes.size(); ++n) {
    const ImageSize size = o.sizes[n];
    char name[32];
    std::snprintf(name, sizeof(name), "img%03zu", n);
    fx.images.emplace_back(name);
    const WindowPlan plan = plan_windows(size, o.crop, o.stride, o.patch_size);
    const GridShape g = plan.patch_grid();

    // Two Voronoi seeds per class.
    std::uniform_real_distribution<double> uy(0.0, static_cast<double>(g.rows));
    std::uniform_real_distribution<double> ux(0.0, static_cast<double>(g.cols));
    std::vector<std::array<double, 2>> seeds;
    for (std::size_t s = 0; s < 2 * o.classes; ++s) seeds.push_back({uy(rng), ux(rng)});
    std::vector<std::int32_t> cell_label(g.cells());
    for (std::size_t r = 0; r < g.rows; ++r) {
      for (std::size_t c = 0; c < g.cols; ++c) {
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
          const double dy = seeds[s][0] - (r + 0.5);
          const double dx = seeds[s][1] - (c + 0.5);
          if (dy * dy + dx * dx < best_d) {
            best_d = dy * dy + dx * dx;
            best = s;
          }
        }
        cell_label[r * g.cols + c] = static_cast<std::int32_t>(best % o.classes);
      }
    }
    std::vector<std::int32_t> pixels(size.height * size.width);
    for (std::size_t y = 0; y < size.height; ++y) {
      for (std::size_t x = 0; x < size.width; ++x) {
        pixels[y * size.width + x] =
            cell_label[(y / o.patch_size) * g.cols + (x / o.patch_size)];
      }
    }
    write_tensor(fx.ground_truth / (std::string(name) + ".rstf"),
                 Tensor::from_i32({size.height, size.width}, pixels));

    const fs::path dir = fx.features / name;
    fs::create_directories(dir / "windows");
    json plan_doc = json::parse(plan_to_json(plan));
    plan_doc["num_special"] = o.num_special;
    std::ofstream(dir / "plan.json") << plan_doc.dump(2) << "\n";

    const GridShape local = plan.window_grid();
    for (std::size_t w = 0; w < plan.windows.size(); ++w) {
      Matrix tokens(o.num_special + local.cells(), o.dims);
      for (std::size_t s = 0; s < o.num_special; ++s) {
        for (float& v : tokens.row(s)) v = static_cast<float>(0.5 + noise(rng));
      }
      const std::size_t top = plan.windows[w].top / o.patch_size;
      const std::size_t left = plan.windows[w].left / o.patch_size;
      for (std::size_t r = 0; r < local.rows; ++r) {
        for (std::size_t c = 0; c < local.cols; ++c) {
          const auto label = cell_label[(top + r) * g.cols + (left + c)];
          auto row = tokens.row(o.num_special + r * local.cols + c);
          for (std::size_t k = 0; k < o.dims; ++k) {
            row[k] = static_cast<float>(preimages[label][k] + noise(rng));
          }
        }
      }
      write_tensor(dir / "windows" / indexed(w), Tensor::from_matrix(tokens));
    }
  }
  return fx;
}

Pose look_at(const std::array<double, 3>& eye, const std::array<double, 3>& target) {
  const auto z = unit(sub(target, eye));
  const auto x = unit(cross(z, {0.0, 0.0, 1.0}));
  const auto y = cross(z, x);
  return {x[0], y[0], z[0], eye[0], x[1], y[1], z[1], eye[1],
          x[2], y[2], z[2], eye[2], 0.0,  0.0,  0.0,  1.0};
}

Synthetic3d make_synthetic_3d(const fs::path& root, const Synthetic3dOptions& o) {
  Rng rng(o.seed);
  Synthetic3d fx;
  fx.root = root;
  fx.voxel_size = o.voxel_size;
  constexpr std::size_t kClasses = 4;  // three objects plus an unused distractor
  constexpr std::size_t kDims = 8;
  fx.bank = orthonormal_rows(kClasses, kDims, rng);
  fx.manifest = write_bundle(root / "bundle", identity_bundle(fx.bank, 16, 0));
  fx.frames = root / "frames";
  fx.ground_truth = root / "gt";

  struct Sphere {
    std::array<double, 3> c;
    double r;
  };
  const std::array<Sphere, 3> spheres = {
      Sphere{{-0.8, 0.0, 0.0}, 0.35}, Sphere{{0.8, 0.0, 0.0}, 0.35},
      Sphere{{0.0, 0.8, 0.0}, 0.35}};

  std::normal_distribution<double> noise(0.0, o.noise);
  const Intrinsics k{0.9 * o.width, 0.9 * o.width, (o.width - 1) / 2.0, (o.height - 1) / 2.0};
  for (std::size_t f = 0; f < o.frames; ++f) {
    const double a = 2.0 * M_PI * static_cast<double>(f) / static_cast<double>(o.frames) + 0.3;
    const std::array<double, 3> eye = {2.6 * std::cos(a), 2.6 * std::sin(a), 1.0};
    CameraFrame frame;
    frame.pose = look_at(eye, {0.0, 0.2, 0.0});
    frame.intrinsics = k;
    frame.size = {o.height, o.width};
    frame.depth.assign(o.height * o.width, 0.0f);
    frame.payload_grid = {o.height, o.width};
    frame.payload = Matrix(o.height * o.width, kDims);
    const Pose& m = frame.pose;
    for (std::size_t v = 0; v < o.height; ++v) {
      for (std::size_t u = 0; u < o.width; ++u) {
        const std::array<double, 3> dc = {(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0};
        const std::array<double, 3> d = {m[0] * dc[0] + m[1] * dc[1] + m[2],
                                         m[4] * dc[0] + m[5] * dc[1] + m[6],
                                         m[8] * dc[0] + m[9] * dc[1] + m[10]};
        double best = 1e300;
        std::size_t hit = kClasses - 1;
        for (std::size_t s = 0; s < spheres.size(); ++s) {
          const auto oc = sub(eye, spheres[s].c);
          const double qa = dot3(d, d);
          const double qb = 2.0 * dot3(oc, d);
          const double qc = dot3(oc, oc) - spheres[s].r * spheres[s].r;
          const double disc = qb * qb - 4 * qa * qc;
          if (disc < 0) continue;
          const double t = (-qb - std::sqrt(disc)) / (2 * qa);
          if (t > 0 && t < best) {
            best = t;
            hit = s;
          }
        }
        const std::size_t i = v * o.width + u;
        if (hit < spheres.size()) frame.depth[i] = static_cast<float>(best);
        auto row = frame.payload.row(i);
        for (std::size_t c = 0; c < kDims; ++c) {
          row[c] = static_cast<float>(fx.bank(hit, c) + noise(rng));
        }
      }
    }
    char name[32];
    std::snprintf(name, sizeof(name), "frame%04zu", f);
    write_frame(fx.frames / name, frame);
  }

  // Ground truth: surface samples on a Fibonacci lattice per sphere.
  std::map<std::uint64_t, std::int32_t> gt;
  constexpr std::size_t kSamples = 40000;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (std::size_t s = 0; s < spheres.size(); ++s) {
    for (std::size_t i = 0; i < kSamples; ++i) {
      const double zz = 1.0 - 2.0 * (i + 0.5) / kSamples;
      const double rr = std::sqrt(1.0 - zz * zz);
      const double th = golden * static_cast<double>(i);
      const std::array<double, 3> p = {spheres[s].c[0] + spheres[s].r * rr * std::cos(th),
                                       spheres[s].c[1] + spheres[s].r * rr * std::sin(th),
                                       spheres[s].c[2] + spheres[s].r * zz};
      gt[pack_key(voxel_key(p, o.voxel_size))] = static_cast<std::int32_t>(s);
    }
  }
  fs::create_directories(fx.ground_truth);
  std::vector<std::uint64_t> keys;
  std::vector<std::int32_t> labels;
  for (const auto& [key, label] : gt) {
    keys.push_back(key);
    labels.push_back(label);
  }
  write_tensor(fx.ground_truth / "keys.rstf", Tensor::from_u64({keys.size()}, keys));
  write_tensor(fx.ground_truth / "labels.rstf", Tensor::from_i32({labels.size()}, labels));
  return fx;
}

fs::path scratch_dir(const std::string& tag) {
  std::random_device rd;
  const fs::path dir = fs::temp_directory_path() /
                       ("radseg_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::pair<std::string, std::string>> read_tree(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    out.emplace_back(fs::relative(entry.path(), dir).string(), os.str());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace radseg::testing
