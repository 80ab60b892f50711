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
#include "radseg/refine.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "radseg/errors.hpp"
#include "radseg/tensor_store.hpp"

namespace radseg {
namespace {

using nlohmann::json;

std::string indexed_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%03zu.rstf", i);
  return buf;
}

void check_label_map(const LabelMap& m) {
  if (m.labels.size() != m.size.height * m.size.width) {
    throw ShapeError("label map size disagrees with its dimensions");
  }
}

}  // namespace

std::vector<Component> extract_components(const LabelMap& labels,
                                          std::size_t min_region_area) {
  check_label_map(labels);
  const std::size_t h = labels.size.height;
  const std::size_t w = labels.size.width;
  std::vector<bool> seen(h * w, false);
  std::vector<Component> out;
  std::vector<std::uint32_t> stack;
  for (std::size_t seed = 0; seed < h * w; ++seed) {
    if (seen[seed]) continue;
    const std::int32_t cls = labels.labels[seed];
    Component comp;
    comp.class_id = cls;
    seen[seed] = true;
    stack.assign(1, static_cast<std::uint32_t>(seed));
    while (!stack.empty()) {
      const std::uint32_t p = stack.back();
      stack.pop_back();
      comp.pixels.push_back(p);
      const std::size_t y = p / w;
      const std::size_t x = p % w;
      auto visit = [&](std::size_t q) {
        if (!seen[q] && labels.labels[q] == cls) {
          seen[q] = true;
          stack.push_back(static_cast<std::uint32_t>(q));
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    if (comp.area() < min_region_area) continue;
    std::sort(comp.pixels.begin(), comp.pixels.end());
    Box box{std::numeric_limits<std::int32_t>::max(), std::numeric_limits<std::int32_t>::max(),
            -1, -1};
    for (auto p : comp.pixels) {
      const auto y = static_cast<std::int32_t>(p / w);
      const auto x = static_cast<std::int32_t>(p % w);
      box.top = std::min(box.top, y);
      box.bottom = std::max(box.bottom, y);
      box.left = std::min(box.left, x);
      box.right = std::max(box.right, x);
    }
    comp.box = box;
    out.push_back(std::move(comp));
  }
  return out;
}

PromptSet make_prompts(std::span<const Component> components, ImageSize image,
                       std::span<const float> scores, const PromptOptions& options) {
  if (scores.size() != image.height * image.width) {
    throw ShapeError("score grid size disagrees with the image");
  }
  if (options.mask_grid == 0) throw InputError("mask_grid must be positive");
  PromptSet set{image, {}};
  const std::size_t w = image.width;
  const std::size_t g = options.mask_grid;
  const double r2 = options.dedup_radius * options.dedup_radius;
  for (const auto& comp : components) {
    Prompt prompt;
    prompt.class_id = comp.class_id;
    prompt.box = comp.box;

    std::vector<std::uint32_t> ranked = comp.pixels;
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::uint32_t a, std::uint32_t b) {
      return scores[a] > scores[b];
    });
    for (auto p : ranked) {
      if (prompt.points.size() >= options.num_points) break;
      const auto x = static_cast<std::int32_t>(p % w);
      const auto y = static_cast<std::int32_t>(p / w);
      const bool far = std::all_of(prompt.points.begin(), prompt.points.end(),
                                   [&](const PromptPoint& q) {
                                     const double dx = q.x - x;
                                     const double dy = q.y - y;
                                     return dx * dx + dy * dy >= r2;
                                   });
      if (far) prompt.points.push_back({x, y, true});
    }

    std::vector<bool> inside(image.height * image.width, false);
    for (auto p : comp.pixels) inside[p] = true;
    prompt.mask_logits = Matrix(g, g, options.outside_logit);
    for (std::size_t i = 0; i < g; ++i) {
      const auto y = static_cast<std::size_t>((i + 0.5) * static_cast<double>(image.height) /
                                              static_cast<double>(g));
      for (std::size_t j = 0; j < g; ++j) {
        const auto x = static_cast<std::size_t>((j + 0.5) * static_cast<double>(image.width) /
                                                static_cast<double>(g));
        if (inside[y * w + x]) prompt.mask_logits(i, j) = options.inside_logit;
      }
    }
    set.prompts.push_back(std::move(prompt));
  }
  return set;
}

LabelMap fuse_masks(const LabelMap& base, const RefinedMasks& refined,
                    std::span<const std::int32_t> component_classes) {
  check_label_map(base);
  if (refined.masks.size() != component_classes.size()) {
    throw ShapeError("one class id is required per refined mask");
  }
  if (refined.masks.empty()) return base;
  if (!(refined.image == base.size)) {
    throw ShapeError("refined masks resolution differs from the base label map");
  }
  const std::size_t n = base.labels.size();
  for (const auto& m : refined.masks) {
    if (m.mask.size() != n) throw ShapeError("refined mask has the wrong pixel count");
    if (!(m.confidence >= 0.0f && m.confidence <= 1.0f)) {
      throw InputError("refined mask confidence outside [0, 1]");
    }
  }

  LabelMap out = base;
  struct Vote {
    std::int32_t cls;
    double total;
    float best;
  };
  std::vector<Vote> votes;
  for (std::size_t p = 0; p < n; ++p) {
    votes.clear();
    for (std::size_t i = 0; i < refined.masks.size(); ++i) {
      const auto& m = refined.masks[i];
      if (!m.mask[p]) continue;
      auto it = std::find_if(votes.begin(), votes.end(),
                             [&](const Vote& v) { return v.cls == component_classes[i]; });
      if (it == votes.end()) {
        votes.push_back({component_classes[i], m.confidence, m.confidence});
      } else {
        it->total += m.confidence;
        it->best = std::max(it->best, m.confidence);
      }
    }
    if (votes.empty()) continue;
    const Vote* win = &votes.front();
    for (const auto& v : votes) {
      if (v.total > win->total ||
          (v.total == win->total &&
           (v.best > win->best || (v.best == win->best && v.cls < win->cls)))) {
        win = &v;
      }
    }
    out.labels[p] = win->cls;
  }
  return out;
}

void write_prompts(const std::filesystem::path& dir, const PromptSet& prompts) {
  std::filesystem::create_directories(dir / "prompts");
  json entries = json::array();
  for (std::size_t i = 0; i < prompts.prompts.size(); ++i) {
    const auto& p = prompts.prompts[i];
    json points = json::array();
    for (const auto& q : p.points) points.push_back({q.x, q.y, q.positive ? 1 : 0});
    entries.push_back({{"class_id", p.class_id},
                       {"box", {p.box.top, p.box.left, p.box.bottom, p.box.right}},
                       {"points", points},
                       {"mask_logits", "prompts/" + indexed_name(i)}});
    write_tensor(dir / "prompts" / indexed_name(i), Tensor::from_matrix(p.mask_logits));
  }
  json doc = {{"image_size", {prompts.image.height, prompts.image.width}},
              {"prompts", entries}};
  std::ofstream out(dir / "prompts.json");
  if (!out) throw InputError("cannot write " + (dir / "prompts.json").string());
  out << doc.dump(2) << "\n";
}

PromptSet read_prompts(const std::filesystem::path& dir) {
  std::ifstream in(dir / "prompts.json");
  if (!in) throw InputError("cannot open " + (dir / "prompts.json").string());
  PromptSet set;
  try {
    const json doc = json::parse(in);
    set.image = {doc.at("image_size").at(0).get<std::size_t>(),
                 doc.at("image_size").at(1).get<std::size_t>()};
    for (const auto& e : doc.at("prompts")) {
      Prompt p;
      p.class_id = e.at("class_id").get<std::int32_t>();
      const auto& b = e.at("box");
      p.box = {b.at(0).get<std::int32_t>(), b.at(1).get<std::int32_t>(),
               b.at(2).get<std::int32_t>(), b.at(3).get<std::int32_t>()};
      for (const auto& q : e.at("points")) {
        p.points.push_back({q.at(0).get<std::int32_t>(), q.at(1).get<std::int32_t>(),
                            q.at(2).get<int>() != 0});
      }
      p.mask_logits = read_tensor(dir / e.at("mask_logits").get<std::string>()).to_matrix();
      set.prompts.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed prompts.json: ") + e.what());
  }
  return set;
}

void write_refined_masks(const std::filesystem::path& dir, const RefinedMasks& masks) {
  std::filesystem::create_directories(dir / "masks");
  json conf = json::array();
  for (std::size_t i = 0; i < masks.masks.size(); ++i) {
    write_tensor(dir / "masks" / indexed_name(i),
                 Tensor::from_u8({masks.image.height, masks.image.width}, masks.masks[i].mask));
    conf.push_back(masks.masks[i].confidence);
  }
  std::ofstream out(dir / "masks.json");
  if (!out) throw InputError("cannot write " + (dir / "masks.json").string());
  out << json{{"confidences", conf}}.dump(2) << "\n";
}

RefinedMasks read_refined_masks(const std::filesystem::path& dir, ImageSize image,
                                std::size_t count) {
  std::ifstream in(dir / "masks.json");
  if (!in) throw InputError("cannot open " + (dir / "masks.json").string());
  std::vector<float> conf;
  try {
    conf = json::parse(in).at("confidences").get<std::vector<float>>();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed masks.json: ") + e.what());
  }
  if (conf.size() != count) {
    throw InputError("masks.json lists " + std::to_string(conf.size()) +
                     " confidences for " + std::to_string(count) + " prompts");
  }
  RefinedMasks out{image, {}};
  for (std::size_t i = 0; i < count; ++i) {
    const Tensor t = read_tensor(dir / "masks" / indexed_name(i));
    if (t.dims.size() != 2 || t.dims[0] != image.height || t.dims[1] != image.width) {
      throw ShapeError("refined mask " + indexed_name(i) + " has the wrong resolution");
    }
    out.masks.push_back({t.to_u8(), conf[i]});
  }
  return out;
}

}  // namespace radseg
