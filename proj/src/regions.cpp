#include "mason/regions.hpp"

#include <algorithm>

#include "mason/objectness.hpp"

namespace mason {

Mask binarize(const Heatmap& heatmap, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 255.0)) {
    throw Error(ErrorCode::InvalidThreshold, "binarization threshold must lie in [0,255]");
  }
  Mask out(heatmap.height(), heatmap.width());
  std::transform(heatmap.values().begin(), heatmap.values().end(), out.values().begin(),
                 [threshold](double v) { return static_cast<std::uint8_t>(v > threshold); });
  return out;
}

std::vector<Region> connected_components(const Mask& mask, Connectivity connectivity) {
  const int h = mask.height();
  const int w = mask.width();
  std::vector<Region> regions;
  Grid<std::uint8_t> seen(h, w, 0);
  std::vector<Pixel> stack;

  const bool eight = connectivity == Connectivity::Eight;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!mask(y0, x0) || seen(y0, x0)) continue;
      Region r;
      r.bbox = {x0, y0, x0 + 1, y0 + 1};
      seen(y0, x0) = 1;
      stack.push_back({y0, x0});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        r.pixels.push_back(p);
        r.bbox.x0 = std::min(r.bbox.x0, p.x);
        r.bbox.y0 = std::min(r.bbox.y0, p.y);
        r.bbox.x1 = std::max(r.bbox.x1, p.x + 1);
        r.bbox.y1 = std::max(r.bbox.y1, p.y + 1);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dy == 0 && dx == 0) || (!eight && dy != 0 && dx != 0)) continue;
            const int ny = p.y + dy;
            const int nx = p.x + dx;
            if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
            if (!mask(ny, nx) || seen(ny, nx)) continue;
            seen(ny, nx) = 1;
            stack.push_back({ny, nx});
          }
        }
      }
      r.area = r.pixels.size();
      regions.push_back(std::move(r));
    }
  }
  std::stable_sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) {
    if (a.area != b.area) return a.area > b.area;
    if (a.bbox.y0 != b.bbox.y0) return a.bbox.y0 < b.bbox.y0;
    return a.bbox.x0 < b.bbox.x0;
  });
  return regions;
}

std::optional<BoundingBox> largest_region_bbox(const Heatmap& heatmap) {
  if (heatmap.empty()) return std::nullopt;
  const auto regions = connected_components(binarize(heatmap, std::clamp(mean_intensity(heatmap), 0.0, 255.0)));
  if (regions.empty()) return std::nullopt;
  return regions.front().bbox;
}

}  // namespace mason
