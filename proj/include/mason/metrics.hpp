#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mason/common.hpp"

namespace mason {

double box_iou(const BoundingBox& a, const BoundingBox& b);

/// IoU of the foreground sets; 1.0 when both masks are empty.
/// Throws DimMismatch when the masks differ in size.
double mask_iou(const Mask& a, const Mask& b);

/// Mean of per-pair mask IoU. Throws EmptyInput on an empty list.
double mean_iou(std::span<const std::pair<Mask, Mask>> pairs);

/// Fraction of ground-truth boxes matched by some proposal with IoU >= threshold.
/// A proposal may match several ground-truth boxes. 1.0 when there is no ground truth.
double recall_at(std::span<const BoundingBox> proposals, std::span<const BoundingBox> ground_truth,
                 double iou_threshold);

struct RecallTally {
  std::size_t matched = 0;
  std::size_t total = 0;

  double recall() const noexcept { return total == 0 ? 1.0 : static_cast<double>(matched) / total; }
};

struct RecallReport {
  RecallTally overall;
  std::map<std::string, RecallTally> per_label;
};

/// Tallies matches for one image, adding into `report`.
void accumulate_recall(std::span<const BoundingBox> proposals, const AnnotationSet& ground_truth,
                       double iou_threshold, RecallReport& report);

}  // namespace mason
