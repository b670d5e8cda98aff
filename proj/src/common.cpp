#include "mason/common.hpp"

#include <algorithm>
#include <cmath>

namespace mason {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::UnsupportedLayout: return "UnsupportedLayout";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidAnnotation: return "InvalidAnnotation";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::DegenerateTrimap: return "DegenerateTrimap";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

std::optional<BoundingBox> intersect(const BoundingBox& a, const BoundingBox& b) noexcept {
  BoundingBox r{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
  if (!r.valid()) return std::nullopt;
  return r;
}

void validate_annotations(const AnnotationSet& set, std::optional<std::pair<int, int>> image_hw) {
  for (std::size_t i = 0; i < set.boxes.size(); ++i) {
    const auto& a = set.boxes[i];
    const auto& b = a.box;
    const std::string where = "box " + std::to_string(i);
    if (!b.valid() || b.x0 < 0 || b.y0 < 0) {
      throw Error(ErrorCode::InvalidAnnotation, where + " violates 0 <= x0 < x1, 0 <= y0 < y1");
    }
    if (image_hw && (b.y1 > image_hw->first || b.x1 > image_hw->second)) {
      throw Error(ErrorCode::InvalidAnnotation, where + " extends outside the image");
    }
    if (a.score && !(*a.score >= 0.0 && *a.score <= 1.0)) {
      throw Error(ErrorCode::InvalidAnnotation, where + " has a score outside [0,1]");
    }
  }
}

}  // namespace mason
