#include "mason/metrics.hpp"

#include <algorithm>

namespace mason {

namespace {

void check_threshold(double t) {
  if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidThreshold, "IoU threshold must lie in (0,1]");
}

bool matched(const BoundingBox& gt, std::span<const BoundingBox> proposals, double t) {
  return std::any_of(proposals.begin(), proposals.end(), [&](const BoundingBox& p) { return box_iou(p, gt) >= t; });
}

}  // namespace

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  if (!a.valid() || !b.valid()) throw Error(ErrorCode::InvalidArgument, "IoU of a degenerate box");
  const auto inter = intersect(a, b);
  if (!inter) return 0.0;
  const long long i = inter->area();
  const long long u = a.area() + b.area() - i;
  return static_cast<double>(i) / static_cast<double>(u);
}

double mask_iou(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::DimMismatch, "masks differ in size");
  std::size_t inter = 0;
  std::size_t uni = 0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const bool fa = va[i] != 0;
    const bool fb = vb[i] != 0;
    inter += fa && fb;
    uni += fa || fb;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double mean_iou(std::span<const std::pair<Mask, Mask>> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "mean IoU of no pairs");
  double sum = 0.0;
  for (const auto& [a, b] : pairs) sum += mask_iou(a, b);
  return sum / static_cast<double>(pairs.size());
}

double recall_at(std::span<const BoundingBox> proposals, std::span<const BoundingBox> ground_truth,
                 double iou_threshold) {
  check_threshold(iou_threshold);
  if (ground_truth.empty()) return 1.0;
  const auto hits = std::count_if(ground_truth.begin(), ground_truth.end(),
                                  [&](const BoundingBox& gt) { return matched(gt, proposals, iou_threshold); });
  return static_cast<double>(hits) / static_cast<double>(ground_truth.size());
}

void accumulate_recall(std::span<const BoundingBox> proposals, const AnnotationSet& ground_truth,
                       double iou_threshold, RecallReport& report) {
  check_threshold(iou_threshold);
  for (const auto& a : ground_truth.boxes) {
    const bool hit = matched(a.box, proposals, iou_threshold);
    auto& per = report.per_label[a.label];
    ++report.overall.total;
    ++per.total;
    report.overall.matched += hit;
    per.matched += hit;
  }
}

}  // namespace mason
