#pragma once

#include <optional>
#include <vector>

#include "mason/common.hpp"

namespace mason {

struct Pixel {
  int y = 0;
  int x = 0;

  bool operator==(const Pixel&) const = default;
};

/// One connected blob of foreground pixels.
struct Region {
  std::size_t area = 0;
  BoundingBox bbox;
  std::vector<Pixel> pixels;
};

enum class Connectivity { Four = 4, Eight = 8 };

/// 1 where value > threshold. Threshold must lie in [0,255].
Mask binarize(const Heatmap& heatmap, double threshold);

/// Maximal connected regions of the 1-pixels, largest first; equal areas are
/// ordered by bbox top edge, then left edge, then discovery order.
std::vector<Region> connected_components(const Mask& mask, Connectivity connectivity = Connectivity::Eight);

/// Tight box of the largest 8-connected above-mean region, or nullopt when nothing
/// exceeds the mean.
std::optional<BoundingBox> largest_region_bbox(const Heatmap& heatmap);

}  // namespace mason
