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
#include "radseg/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "radseg/errors.hpp"

namespace radseg {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes, std::set<std::int32_t> ignore)
    : k_(num_classes), ignore_(std::move(ignore)), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw InputError("confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

void ConfusionMatrix::accumulate(std::span<const std::int32_t> gt,
                                 std::span<const std::int32_t> pred) {
  if (gt.size() != pred.size()) {
    throw ShapeError("ground truth has " + std::to_string(gt.size()) +
                     " samples, prediction has " + std::to_string(pred.size()));
  }
  const auto k = static_cast<std::int32_t>(k_);
  // Validate first so a bad sample leaves the matrix untouched.
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (ignore_.count(gt[i])) continue;
    if (gt[i] < 0 || gt[i] >= k) {
      throw InputError("ground-truth label " + std::to_string(gt[i]) + " out of range");
    }
    if (pred[i] < 0 || pred[i] >= k) {
      throw InputError("predicted label " + std::to_string(pred[i]) + " out of range");
    }
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (ignore_.count(gt[i])) continue;
    ++counts_[static_cast<std::size_t>(gt[i]) * k_ + static_cast<std::size_t>(pred[i])];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_ || other.ignore_ != ignore_) {
    throw InputError("cannot merge confusion matrices with different class setups");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::vector<ClassIoU> per_class_iou(const ConfusionMatrix& cm) {
  const std::size_t k = cm.num_classes();
  std::vector<ClassIoU> out;
  for (std::size_t c = 0; c < k; ++c) {
    if (cm.ignore().count(static_cast<std::int32_t>(c))) continue;
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += cm.at(c, j);
      col += cm.at(j, c);
    }
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t uni = row + col - tp;
    if (uni == 0) continue;
    out.push_back({static_cast<std::int32_t>(c), tp, uni, row});
  }
  return out;
}

double miou(const ConfusionMatrix& cm) {
  const auto classes = per_class_iou(cm);
  if (cm.total() == 0 || classes.empty()) {
    throw InputError("mIoU of an empty confusion matrix");
  }
  double sum = 0.0;
  for (const auto& c : classes) sum += c.iou();
  return sum / static_cast<double>(classes.size());
}

double fmiou(const ConfusionMatrix& cm) {
  const auto classes = per_class_iou(cm);
  std::uint64_t total_gt = 0;
  for (const auto& c : classes) total_gt += c.gt_count;
  if (cm.total() == 0 || total_gt == 0) {
    throw InputError("f-mIoU of an empty confusion matrix");
  }
  double sum = 0.0;
  for (const auto& c : classes) {
    sum += static_cast<double>(c.gt_count) / static_cast<double>(total_gt) * c.iou();
  }
  return sum;
}

namespace {

std::string class_label(std::span<const std::string> names, std::int32_t id) {
  if (id >= 0 && static_cast<std::size_t>(id) < names.size()) return names[id];
  return std::to_string(id);
}

}  // namespace

std::string metrics_report_json(const ConfusionMatrix& cm,
                                std::span<const std::string> class_names) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : per_class_iou(cm)) {
    classes.push_back({{"class_id", c.class_id},
                       {"name", class_label(class_names, c.class_id)},
                       {"intersection", c.intersection},
                       {"union", c.union_},
                       {"gt_count", c.gt_count},
                       {"iou", c.iou()}});
  }
  nlohmann::json doc = {{"num_classes", cm.num_classes()},
                        {"ignore", std::vector<std::int32_t>(cm.ignore().begin(),
                                                             cm.ignore().end())},
                        {"samples", cm.total()},
                        {"classes", classes},
                        {"miou", miou(cm)},
                        {"fmiou", fmiou(cm)}};
  return doc.dump(2);
}

std::string metrics_report_text(const ConfusionMatrix& cm,
                                std::span<const std::string> class_names) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-6s %-24s %14s %14s %8s\n", "id", "class", "intersection",
                "union", "IoU");
  os << line;
  for (const auto& c : per_class_iou(cm)) {
    std::snprintf(line, sizeof(line), "%-6d %-24s %14llu %14llu %8.4f\n", c.class_id,
                  class_label(class_names, c.class_id).c_str(),
                  static_cast<unsigned long long>(c.intersection),
                  static_cast<unsigned long long>(c.union_), c.iou());
    os << line;
  }
  std::snprintf(line, sizeof(line), "mIoU   %.4f\nf-mIoU %.4f\nsamples %llu\n", miou(cm),
                fmiou(cm), static_cast<unsigned long long>(cm.total()));
  os << line;
  return os.str();
}

}  // namespace radseg
