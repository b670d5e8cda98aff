#include "mason/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "mason/objectness.hpp"
#include "mason/regions.hpp"

namespace mason {

namespace {

// Feature-resolution span [lo, hi) covering pixels [p0, p1) of an axis of length
// `pixels` mapped onto `cells` cells, trimmed to at most `limit` cells.
std::pair<int, int> cell_span(int p0, int p1, int pixels, int cells, int limit) {
  const long long c = cells;
  int lo = static_cast<int>((p0 * c) / pixels);
  int hi = static_cast<int>((p1 * c + pixels - 1) / pixels);
  lo = std::clamp(lo, 0, cells - 1);
  hi = std::clamp(hi, lo + 1, cells);
  if (hi - lo > limit) {
    lo += (hi - lo - limit) / 2;
    hi = lo + limit;
  }
  return {lo, hi};
}

template <class T, class Tag>
Grid<T, Tag> crop(const Grid<T, Tag>& g, const BoundingBox& box) {
  if (!box.inside(g.height(), g.width())) throw Error(ErrorCode::InvalidAnnotation, "crop box outside the raster");
  Grid<T, Tag> out(box.height(), box.width());
  for (int y = 0; y < box.height(); ++y) {
    for (int x = 0; x < box.width(); ++x) out(y, x) = g(box.y0 + y, box.x0 + x);
  }
  return out;
}

Mask segment_box(const RasterImage& image, const BoundingBox& box, const Heatmap& heat, const GrabCutParams& params) {
  try {
    return grabcut(crop_image(image, box), stratify(heat), params);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateTrimap) throw;
    return Mask(box.height(), box.width(), 0);
  }
}

void check_detections(const RasterImage& image, const AnnotationSet& detections) {
  validate_annotations(detections, std::pair{image.height(), image.width()});
  if (detections.boxes.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, "too many detections for a 16-bit instance map");
  }
}

}  // namespace

Mask localize(const RasterImage& image, const FeatureMapStack& stack, const GrabCutParams& params) {
  return grabcut(image, stratify(objectness(stack, image.height(), image.width())), params);
}

RasterImage crop_image(const RasterImage& image, const BoundingBox& box) { return crop(image, box); }

Heatmap crop_heatmap(const Heatmap& heatmap, const BoundingBox& box) { return crop(heatmap, box); }

Heatmap box_heatmap(const RawMap& full_raw, int image_height, int image_width, const BoundingBox& box) {
  if (!box.inside(image_height, image_width)) throw Error(ErrorCode::InvalidAnnotation, "box outside the image");
  if (full_raw.empty()) throw Error(ErrorCode::InvalidArgument, "empty activation map");
  const auto [cy0, cy1] = cell_span(box.y0, box.y1, image_height, full_raw.height(), box.height());
  const auto [cx0, cx1] = cell_span(box.x0, box.x1, image_width, full_raw.width(), box.width());
  const RawMap cells = crop(full_raw, BoundingBox{cx0, cy0, cx1, cy1});
  return bicubic_upscale(normalize(cells), box.height(), box.width());
}

InstanceMap compose_instances(int image_height, int image_width, const AnnotationSet& detections,
                              std::span<const Mask> box_masks) {
  if (box_masks.size() != detections.boxes.size()) {
    throw Error(ErrorCode::DimMismatch, "one mask per detection is required");
  }
  std::vector<std::size_t> areas(box_masks.size());
  for (std::size_t i = 0; i < box_masks.size(); ++i) {
    const auto& b = detections.boxes[i].box;
    if (box_masks[i].height() != b.height() || box_masks[i].width() != b.width()) {
      throw Error(ErrorCode::DimMismatch, "mask " + std::to_string(i) + " does not match its box");
    }
    areas[i] = static_cast<std::size_t>(
        std::count_if(box_masks[i].values().begin(), box_masks[i].values().end(), [](auto v) { return v != 0; }));
  }
  std::vector<std::size_t> order(box_masks.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (areas[a] != areas[b]) return areas[a] > areas[b];
    const auto ba = detections.boxes[a].box.area();
    const auto bb = detections.boxes[b].box.area();
    if (ba != bb) return ba > bb;
    return a > b;
  });

  InstanceMap map{Grid<std::uint16_t>(image_height, image_width, 0), {}};
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t i = order[rank];
    const auto& det = detections.boxes[i];
    const auto id = static_cast<std::uint16_t>(rank + 1);
    const Mask& m = box_masks[i];
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        if (m(y, x)) map.ids(det.box.y0 + y, det.box.x0 + x) = id;
      }
    }
    map.instances.push_back({id, i, det.label, det.box, det.score, areas[i]});
  }
  return map;
}

InstanceMap segment_instances(const RasterImage& image, const FeatureMapStack& full_stack,
                              const AnnotationSet& detections, const GrabCutParams& params) {
  check_detections(image, detections);
  const RawMap raw = sum_activations(full_stack);
  std::vector<Mask> masks;
  masks.reserve(detections.boxes.size());
  for (const auto& det : detections.boxes) {
    const Heatmap heat = box_heatmap(raw, image.height(), image.width(), det.box);
    masks.push_back(segment_box(image, det.box, heat, params));
  }
  return compose_instances(image.height(), image.width(), detections, masks);
}

InstanceMap segment_instances(const RasterImage& image, std::span<const FeatureMapStack> per_box_stacks,
                              const AnnotationSet& detections, const GrabCutParams& params) {
  check_detections(image, detections);
  if (per_box_stacks.size() != detections.boxes.size()) {
    throw Error(ErrorCode::DimMismatch, "one feature stack per detection is required");
  }
  std::vector<Mask> masks;
  masks.reserve(detections.boxes.size());
  for (std::size_t i = 0; i < per_box_stacks.size(); ++i) {
    const auto& box = detections.boxes[i].box;
    const Heatmap heat = objectness(per_box_stacks[i], box.height(), box.width());
    masks.push_back(segment_box(image, box, heat, params));
  }
  return compose_instances(image.height(), image.width(), detections, masks);
}

std::string instance_table_json(const InstanceMap& map, const std::string& image_ref) {
  nlohmann::ordered_json j;
  j["image"] = image_ref;
  j["instances"] = nlohmann::ordered_json::array();
  for (const auto& inst : map.instances) {
    nlohmann::ordered_json e;
    e["id"] = inst.id;
    e["detection"] = inst.detection_index;
    e["label"] = inst.label;
    e["x0"] = inst.box.x0;
    e["y0"] = inst.box.y0;
    e["x1"] = inst.box.x1;
    e["y1"] = inst.box.y1;
    if (inst.score) e["score"] = *inst.score;
    e["mask_area"] = inst.mask_area;
    j["instances"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

void write_instance_map(const InstanceMap& map, const std::string& image_ref, const std::filesystem::path& pgm_path,
                        const std::filesystem::path& json_path) {
  write_gray16(map.ids, pgm_path);
  write_text_file(json_path, instance_table_json(map, image_ref));
}

CleansingReport clean_annotations(std::span<const Heatmap> heatmaps, const AnnotationSet& annotations,
                                  double intensity_threshold) {
  if (!(intensity_threshold >= 0.0 && intensity_threshold <= 255.0)) {
    throw Error(ErrorCode::InvalidThreshold, "drop threshold must lie in [0,255]");
  }
  validate_annotations(annotations);
  if (heatmaps.size() != annotations.boxes.size()) {
    throw Error(ErrorCode::DimMismatch, "one heatmap per annotation is required");
  }
  CleansingReport report;
  report.kept.image = annotations.image;
  report.dropped.image = annotations.image;
  for (std::size_t i = 0; i < heatmaps.size(); ++i) {
    const Annotation& a = annotations.boxes[i];
    const Heatmap& h = heatmaps[i];
    if (h.height() != a.box.height() || h.width() != a.box.width()) {
      throw Error(ErrorCode::DimMismatch, "heatmap " + std::to_string(i) + " does not match its box");
    }
    const double peak = *std::max_element(h.values().begin(), h.values().end());
    if (peak < intensity_threshold) {
      report.dropped.boxes.push_back(a);
      continue;
    }
    Annotation out = a;
    if (const auto r = largest_region_bbox(h)) {
      const BoundingBox moved{a.box.x0 + r->x0, a.box.y0 + r->y0, a.box.x0 + r->x1, a.box.y0 + r->y1};
      if (const auto tight = intersect(moved, a.box)) out.box = *tight;
    }
    if (out.box != a.box) ++report.tightened_count;
    report.kept.boxes.push_back(std::move(out));
  }
  return report;
}

std::vector<BoundingBox> generate_proposals(const Heatmap& heatmap, std::span<const double> scales) {
  if (scales.empty()) throw Error(ErrorCode::InvalidArgument, "at least one proposal scale is required");
  for (double s : scales) {
    if (!(s >= 1.0) || !std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "proposal scales must be >= 1");
  }
  std::vector<double> sorted(scales.begin(), scales.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<BoundingBox> out;
  if (heatmap.empty()) return out;
  const auto blobs = connected_components(binarize(heatmap, std::clamp(mean_intensity(heatmap), 0.0, 255.0)));
  for (const auto& blob : blobs) {
    const BoundingBox& b = blob.bbox;
    for (double s : sorted) {
      const double w = b.width() * s;
      const double h = b.height() * s;
      const double cx2 = b.x0 + b.x1;
      const double cy2 = b.y0 + b.y1;
      BoundingBox p{static_cast<int>(std::floor((cx2 - w) / 2)), static_cast<int>(std::floor((cy2 - h) / 2)),
                    static_cast<int>(std::ceil((cx2 + w) / 2)), static_cast<int>(std::ceil((cy2 + h) / 2))};
      p.x0 = std::max(p.x0, 0);
      p.y0 = std::max(p.y0, 0);
      p.x1 = std::min(p.x1, heatmap.width());
      p.y1 = std::min(p.y1, heatmap.height());
      if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
  }
  return out;
}

}  // namespace mason
