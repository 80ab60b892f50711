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
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "json.hpp"
#include "radseg/errors.hpp"
#include "radseg/pipeline.hpp"
#include "radseg/tensor_store.hpp"

namespace radseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

testing::Synthetic2dOptions small_2d() {
  testing::Synthetic2dOptions o;
  o.classes = 4;
  o.dims = 8;
  o.crop = 64;
  o.stride = 32;
  o.sizes = {{96, 128}, {128, 96}};
  return o;
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = testing::scratch_dir("pipeline"); }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST(Config, DefaultsAndOverrides) {
  const RunConfig c = config_from_json(R"({"bundle": "b/manifest.json", "tau_scra": 5,
                                           "enable_scga": false, "lift_mode": "probability"})",
                                       "/base");
  EXPECT_EQ(c.bundle, fs::path("/base/b/manifest.json"));
  EXPECT_FLOAT_EQ(c.tau_scra, 5.0f);
  EXPECT_FLOAT_EQ(c.tau_scga, 10.0f);
  EXPECT_TRUE(c.enable_scra);
  EXPECT_FALSE(c.enable_scga);
  EXPECT_EQ(c.lift_mode, LiftMode::kProbability);
  EXPECT_DOUBLE_EQ(c.voxel_size, 0.05);
  EXPECT_EQ(c.frame_skip, 10u);
  EXPECT_FALSE(c.geometry().has_value());
}

TEST(Config, PresetGeometry) {
  const RunConfig c = config_from_json(R"({"dataset": "stuff", "resolution": "mid"})");
  EXPECT_EQ(*c.geometry(), (ResolutionPreset{448, 336, 224}));
  EXPECT_NO_THROW(config_from_json(R"({"dataset": "voc", "resolution": "mid", "crop": 336})"));
  EXPECT_THROW(config_from_json(R"({"dataset": "voc", "resolution": "mid", "crop": 224})"),
               InputError);
  EXPECT_THROW(config_from_json(R"({"dataset": "voc"})"), InputError);
  EXPECT_THROW(config_from_json(R"({"crop": 224})"), InputError);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(config_from_json(R"({"tau_scra": 0})"), InputError);
  EXPECT_THROW(config_from_json(R"({"frame_skip": 0})"), InputError);
  EXPECT_THROW(config_from_json(R"({"lift_mode": "both"})"), InputError);
  EXPECT_THROW(config_from_json(R"({"probability_mode": "hard"})"), InputError);
  EXPECT_THROW(config_from_json("[1, 2"), InputError);
}

TEST(Config, JsonRoundTrip) {
  RunConfig c = config_from_json(R"({"bundle": "/x/m.json", "dataset": "city",
                                     "resolution": "high", "enable_refine": true})");
  const RunConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(back.bundle, c.bundle);
  EXPECT_EQ(back.dataset, c.dataset);
  EXPECT_EQ(back.enable_refine, true);
  EXPECT_EQ(*back.geometry(), (ResolutionPreset{1344, 336, 336}));
}

TEST_F(PipelineTest, Segment2dRecoversPlantedLabels) {
  testing::Synthetic2dOptions o = small_2d();
  o.sizes = {{192, 256}, {256, 192}};
  const auto fx = testing::make_synthetic_2d(dir_, o);
  RunConfig c;
  c.bundle = fx.manifest;
  c.workers = 2;
  const auto summary = segment2d(c, fx.features, dir_ / "out");
  EXPECT_EQ(summary.images, fx.images);
  const EvalResult r = evaluate(dir_ / "out" / "labels", fx.ground_truth, {});
  EXPECT_EQ(r.files, 2u);
  EXPECT_GE(miou(r.confusion), 0.95);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "run.json"));
  const Tensor scores = read_tensor(dir_ / "out" / "scores" / "img000.rstf");
  EXPECT_EQ(scores.dims, (std::vector<std::uint64_t>{192, 256}));

  // Pixels next to a patch center sample their own cell with weight > 0.9.
  const auto labels = read_tensor(dir_ / "out" / "labels" / "img000.rstf").to_i32();
  const auto planted = read_tensor(fx.ground_truth / "img000.rstf").to_i32();
  for (std::size_t y = 7; y < 192; y += 16) {
    for (std::size_t x = 7; x < 256; x += 16) EXPECT_EQ(labels[y * 256 + x], planted[y * 256 + x]);
  }
}

TEST_F(PipelineTest, AblationMatchesManualComposition) {
  const auto fx = testing::make_synthetic_2d(dir_, small_2d());
  RunConfig c;
  c.bundle = fx.manifest;
  c.enable_scra = false;
  c.enable_scga = false;
  const WeightBundle bundle = load_bundle(fx.manifest);
  const TextBank bank = text_bank_from(bundle);
  const ImageWindows img = load_image_windows(fx.features, "img000");
  const ImageResult r = segment_image(c, bundle, bank, img, 1);

  std::vector<Matrix> patches;
  for (const auto& w : img.windows) patches.push_back(w.slice_rows(img.num_special, w.rows()));
  const FeatureMap raw = aggregate_windows(img.plan, patches);
  const LabelMap manual =
      segment(similarity_logits(apply_cls_adaptor(raw, bundle), bank), img.output_size);
  EXPECT_EQ(r.labels.labels, manual.labels);
  EXPECT_EQ(r.labels.scores, manual.scores);
}

TEST_F(PipelineTest, RerunIsBitIdentical) {
  const auto fx = testing::make_synthetic_2d(dir_, small_2d());
  RunConfig c;
  c.bundle = fx.manifest;
  c.write_probabilities = true;
  c.workers = 1;
  segment2d(c, fx.features, dir_ / "a");
  c.workers = 4;
  segment2d(c, fx.features, dir_ / "b");
  EXPECT_EQ(testing::read_tree(dir_ / "a"), testing::read_tree(dir_ / "b"));
}

TEST_F(PipelineTest, PlanValidation) {
  const auto fx = testing::make_synthetic_2d(dir_, small_2d());
  RunConfig c;
  c.bundle = fx.manifest;
  c.dataset = "voc";
  c.resolution = "mid";
  EXPECT_THROW(segment2d(c, fx.features, dir_ / "o1"), InputError);

  RunConfig plain;
  plain.bundle = fx.manifest;
  const fs::path plan_path = fx.features / "img001" / "plan.json";
  json plan = json::parse(std::ifstream(plan_path));
  plan["num_special"] = 0;
  std::ofstream(plan_path) << plan.dump();
  EXPECT_THROW(segment2d(plain, fx.features, dir_ / "o2"), InputError);
  plan["num_special"] = 1;
  plan["windows"].erase(0);
  std::ofstream(plan_path) << plan.dump();
  EXPECT_THROW(segment2d(plain, fx.features, dir_ / "o3"), InputError);
  EXPECT_THROW(list_images(dir_ / "nothing"), InputError);
}

TEST_F(PipelineTest, RefinePromptsThenFuseMasks) {
  const auto fx = testing::make_synthetic_2d(dir_, small_2d());
  RunConfig c;
  c.bundle = fx.manifest;
  c.enable_refine = true;
  c.min_region_area = 16;
  auto s = segment2d(c, fx.features, dir_ / "first");
  EXPECT_EQ(s.refined_images, 0u);
  const PromptSet prompts = read_prompts(dir_ / "first" / "refine" / "img000");
  ASSERT_FALSE(prompts.prompts.empty());
  for (const auto& p : prompts.prompts) {
    for (const auto& q : p.points) EXPECT_TRUE(p.box.contains(q.x, q.y));
  }

  // A decoder that answers the first prompt with a full-image mask.
  RefinedMasks masks{prompts.image, {}};
  const std::size_t n = prompts.image.height * prompts.image.width;
  for (std::size_t i = 0; i < prompts.prompts.size(); ++i) {
    masks.masks.push_back({std::vector<std::uint8_t>(n, i == 0 ? 1 : 0), 0.9f});
  }
  write_refined_masks(dir_ / "decoded" / "img000", masks);
  c.refine_masks_dir = dir_ / "decoded";
  s = segment2d(c, fx.features, dir_ / "second");
  EXPECT_EQ(s.refined_images, 1u);
  const auto fused = read_tensor(dir_ / "second" / "labels" / "img000.rstf").to_i32();
  for (auto l : fused) EXPECT_EQ(l, prompts.prompts[0].class_id);
  EXPECT_TRUE(fs::exists(dir_ / "second" / "coarse" / "img000.rstf"));
  EXPECT_EQ(read_tensor(dir_ / "second" / "labels" / "img001.rstf"),
            read_tensor(dir_ / "first" / "labels" / "img001.rstf"));
}

CameraFrame tiny_frame(const Matrix& bank_rows) {
  CameraFrame f;
  f.intrinsics = {10.0, 10.0, 1.5, 1.5};
  f.size = {4, 4};
  f.depth.assign(16, 1.0f);
  f.depth[5] = 0.0f;
  f.payload_grid = {2, 2};
  f.payload = Matrix(4, bank_rows.cols());
  for (std::size_t i = 0; i < 4; ++i) {
    const auto e = bank_rows.row(i % bank_rows.rows());
    std::copy(e.begin(), e.end(), f.payload.row(i).begin());
  }
  return f;
}

TEST_F(PipelineTest, Map3dSingleFrameMatchesQuantizedCloud) {
  testing::Rng rng(81);
  const Matrix bank = testing::orthonormal_rows(3, 4, rng);
  const fs::path manifest = write_bundle(dir_ / "bundle", testing::identity_bundle(bank, 16, 0));
  const CameraFrame f = tiny_frame(bank);
  write_frame(dir_ / "frames" / "f0", f);
  RunConfig c;
  c.bundle = manifest;
  c.frame_skip = 1;
  c.voxel_size = 0.02;
  const Map3dSummary s = map3d(c, dir_ / "frames", dir_ / "map");
  EXPECT_EQ(s.frames_used, 1u);
  EXPECT_EQ(s.points, 15u);

  const PointCloud cloud = backproject(load_frame(dir_ / "frames" / "f0"));
  std::set<std::uint64_t> keys;
  for (const auto& p : cloud.positions) keys.insert(pack_key(voxel_key(p, 0.02)));
  const auto written = read_tensor(dir_ / "map" / "keys.rstf").to_u64();
  EXPECT_EQ(std::vector<std::uint64_t>(keys.begin(), keys.end()), written);
  std::uint64_t total = 0;
  for (auto n : read_tensor(dir_ / "map" / "counts.rstf").to_u64()) total += n;
  EXPECT_EQ(total, 15u);
  EXPECT_EQ(read_tensor(dir_ / "map" / "labels.rstf").numel(), written.size());
}

TEST_F(PipelineTest, Map3dDuplicateFrameDoublesCounts) {
  testing::Rng rng(82);
  const Matrix bank = testing::orthonormal_rows(3, 4, rng);
  const fs::path manifest = write_bundle(dir_ / "bundle", testing::identity_bundle(bank, 16, 0));
  const CameraFrame f = tiny_frame(bank);
  write_frame(dir_ / "once" / "f0", f);
  write_frame(dir_ / "twice" / "f0", f);
  write_frame(dir_ / "twice" / "f1", f);
  RunConfig c;
  c.bundle = manifest;
  c.frame_skip = 1;
  c.voxel_size = 0.02;
  map3d(c, dir_ / "once", dir_ / "m1");
  map3d(c, dir_ / "twice", dir_ / "m2");
  EXPECT_EQ(read_tensor(dir_ / "m1" / "keys.rstf"), read_tensor(dir_ / "m2" / "keys.rstf"));
  const auto a = read_tensor(dir_ / "m1" / "means.rstf").to_f32();
  const auto b = read_tensor(dir_ / "m2" / "means.rstf").to_f32();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
  const auto ca = read_tensor(dir_ / "m1" / "counts.rstf").to_u64();
  const auto cb = read_tensor(dir_ / "m2" / "counts.rstf").to_u64();
  for (std::size_t i = 0; i < ca.size(); ++i) EXPECT_EQ(cb[i], 2 * ca[i]);
}

TEST_F(PipelineTest, Map3dFrameSkipAndPayloadKinds) {
  testing::Rng rng(83);
  const Matrix bank = testing::orthonormal_rows(3, 4, rng);
  const fs::path manifest = write_bundle(dir_ / "bundle", testing::identity_bundle(bank, 16, 0));
  for (int i = 0; i < 5; ++i) write_frame(dir_ / "frames" / ("f" + std::to_string(i)), tiny_frame(bank));
  RunConfig c;
  c.bundle = manifest;
  c.frame_skip = 2;
  EXPECT_EQ(map3d(c, dir_ / "frames", dir_ / "m").frames_used, 3u);
  c.lift_mode = LiftMode::kProbability;
  EXPECT_EQ(read_tensor(dir_ / "m" / "means.rstf").dims[1], 4u);
  map3d(c, dir_ / "frames", dir_ / "p");
  EXPECT_EQ(read_tensor(dir_ / "p" / "means.rstf").dims[1], 3u);

  std::ofstream(dir_ / "frames" / "meta.json") << R"({"payload": "probability"})";
  c.lift_mode = LiftMode::kFeature;
  EXPECT_THROW(map3d(c, dir_ / "frames", dir_ / "x"), InputError);
}

TEST_F(PipelineTest, EvaluatePixelAndVoxelModes) {
  fs::create_directories(dir_ / "gt");
  fs::create_directories(dir_ / "pred");
  const std::vector<std::int32_t> gt = {0, 1, 1, 2, 255, 2};
  const std::vector<std::int32_t> same = {0, 1, 1, 2, 0, 2};
  write_tensor(dir_ / "gt" / "a.rstf", Tensor::from_i32({2, 3}, gt));
  write_tensor(dir_ / "pred" / "a.rstf", Tensor::from_i32({2, 3}, same));
  EvalOptions opt;
  opt.ignore = {255};
  EXPECT_DOUBLE_EQ(miou(evaluate(dir_ / "pred", dir_ / "gt", opt).confusion), 1.0);

  const std::vector<std::int32_t> off = {1, 2, 2, 0, 0, 0};
  write_tensor(dir_ / "pred" / "a.rstf", Tensor::from_i32({2, 3}, off));
  EXPECT_DOUBLE_EQ(miou(evaluate(dir_ / "pred", dir_ / "gt", opt).confusion), 0.0);

  write_tensor(dir_ / "pred" / "b.rstf", Tensor::from_i32({2, 3}, off));
  EXPECT_THROW(evaluate(dir_ / "pred", dir_ / "gt", opt), InputError);
  fs::remove(dir_ / "pred" / "b.rstf");
  write_tensor(dir_ / "pred" / "a.rstf", Tensor::from_i32({3, 2}, off));
  EXPECT_THROW(evaluate(dir_ / "pred", dir_ / "gt", opt), ShapeError);

  fs::create_directories(dir_ / "vgt");
  fs::create_directories(dir_ / "vpred");
  write_tensor(dir_ / "vgt" / "keys.rstf", Tensor::from_u64({3}, std::vector<std::uint64_t>{5, 9, 12}));
  write_tensor(dir_ / "vgt" / "labels.rstf", Tensor::from_i32({3}, std::vector<std::int32_t>{0, 1, 1}));
  write_tensor(dir_ / "vpred" / "keys.rstf", Tensor::from_u64({3}, std::vector<std::uint64_t>{1, 5, 12}));
  write_tensor(dir_ / "vpred" / "labels.rstf", Tensor::from_i32({3}, std::vector<std::int32_t>{1, 0, 1}));
  const EvalResult v = evaluate(dir_ / "vpred", dir_ / "vgt", {});
  EXPECT_EQ(v.unmatched_voxels, 1u);
  EXPECT_EQ(v.confusion.total(), 2u);
  EXPECT_DOUBLE_EQ(miou(v.confusion), 1.0);
}

TEST_F(PipelineTest, GoldenSelfConsistency) {
  testing::Rng rng(84);
  const WeightBundle w = testing::random_bundle({}, rng);
  const TokenMatrix window{testing::random_matrix(1 + 6, 8, rng), 1, {2, 3}};
  const fs::path c = dir_ / "golden" / "case0";
  fs::create_directories(c);
  std::ofstream(c / "meta.json") << R"({"num_special": 1, "grid": [2, 3], "tau": 10})";
  write_tensor(c / "window.rstf", Tensor::from_matrix(window.tokens));
  write_tensor(c / "scra.rstf", Tensor::from_matrix(scra(window, w, 10.0f).tokens));
  Matrix adapted = cls_adaptor(window.patch_tokens(), w);
  write_tensor(c / "adaptor.rstf", Tensor::from_matrix(adapted));
  auto cases = compare_golden(w, dir_ / "golden");
  ASSERT_EQ(cases.size(), 1u);
  EXPECT_EQ(cases[0].scra_rel_error, 0.0);
  EXPECT_EQ(cases[0].adaptor_rel_error, 0.0);

  for (float& v : adapted.values()) v *= 1.01f;
  write_tensor(c / "adaptor.rstf", Tensor::from_matrix(adapted));
  cases = compare_golden(w, dir_ / "golden");
  EXPECT_GT(cases[0].adaptor_rel_error, 1e-3);
  EXPECT_THROW(compare_golden(w, dir_ / "missing"), InputError);
}

}  // namespace
}  // namespace radseg
