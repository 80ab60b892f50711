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
#ifndef RADSEG_METRICS_HPP_
#define RADSEG_METRICS_HPP_

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace radseg {

// Classes treated as ignore when evaluating NYU40-mapped ScanNet scenes.
inline constexpr std::array<std::string_view, 3> kScanNetIgnoreClasses = {
    "otherprop", "otherstructure", "otherfurniture"};

// Rows are ground truth, columns predictions.
class ConfusionMatrix {
 public:
  // `ignore` may contain values >= num_classes (e.g. 255 void labels).
  explicit ConfusionMatrix(std::size_t num_classes, std::set<std::int32_t> ignore = {});

  std::size_t num_classes() const { return k_; }
  const std::set<std::int32_t>& ignore() const { return ignore_; }
  std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts_[gt * k_ + pred]; }
  std::uint64_t total() const;

  // Samples whose ground truth is ignored are skipped. Throws ShapeError on
  // length mismatch and InputError on labels outside [0, K) that are not
  // ignored (predictions must always be in range).
  void accumulate(std::span<const std::int32_t> gt, std::span<const std::int32_t> pred);
  void merge(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_;
  std::set<std::int32_t> ignore_;
  std::vector<std::uint64_t> counts_;
};

struct ClassIoU {
  std::int32_t class_id = 0;
  std::uint64_t intersection = 0;  // TP
  std::uint64_t union_ = 0;        // TP + FP + FN
  std::uint64_t gt_count = 0;      // TP + FN

  double iou() const { return static_cast<double>(intersection) / static_cast<double>(union_); }
};

// Non-ignored classes with a nonzero union, ascending by id.
std::vector<ClassIoU> per_class_iou(const ConfusionMatrix& cm);

// Mean IoU over classes with nonzero union. Throws InputError if the matrix
// is empty.
double miou(const ConfusionMatrix& cm);
// Sum over classes of (gt_count / total gt) * IoU.
double fmiou(const ConfusionMatrix& cm);

// JSON report: per-class table plus summary.
std::string metrics_report_json(const ConfusionMatrix& cm,
                                std::span<const std::string> class_names = {});
std::string metrics_report_text(const ConfusionMatrix& cm,
                                std::span<const std::string> class_names = {});

}  // namespace radseg

#endif  // RADSEG_METRICS_HPP_
