#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mason/array_io.hpp"
#include "mason/common.hpp"
#include "mason/grabcut.hpp"

namespace mason {

inline constexpr double kDefaultDropThreshold = 20.0;
inline constexpr double kDefaultProposalScales[] = {1.0, 1.5, 2.0};

/// Foreground segmentation of a whole image seeded by its objectness heatmap.
Mask localize(const RasterImage& image, const FeatureMapStack& stack, const GrabCutParams& params = {});

RasterImage crop_image(const RasterImage& image, const BoundingBox& box);
Heatmap crop_heatmap(const Heatmap& heatmap, const BoundingBox& box);

/// Heatmap for one box when only a full-image stack exists: the raw activation sum
/// is cropped at feature resolution (cells overlapping the box), then normalized
/// and upscaled to the box size.
Heatmap box_heatmap(const RawMap& full_raw, int image_height, int image_width, const BoundingBox& box);

struct InstanceInfo {
  std::uint16_t id = 0;
  std::size_t detection_index = 0;
  std::string label;
  BoundingBox box;
  std::optional<double> score;
  std::size_t mask_area = 0;
};

/// Per-pixel instance ids (0 = background) plus the id table, ordered by id.
struct InstanceMap {
  Grid<std::uint16_t> ids;
  std::vector<InstanceInfo> instances;
};

/// Paints per-detection masks (given in box coordinates) into one id map.
/// Larger masks are painted first so smaller ones stay on top; equal areas put
/// the smaller box on top, then the lower detection index. Ids follow painting order.
InstanceMap compose_instances(int image_height, int image_width, const AnnotationSet& detections,
                              std::span<const Mask> box_masks);

/// Instance segmentation from detections and one full-image feature stack.
/// A detection whose box heatmap is flat yields an empty instance.
InstanceMap segment_instances(const RasterImage& image, const FeatureMapStack& full_stack,
                              const AnnotationSet& detections, const GrabCutParams& params = {});

/// Same, with one feature stack extracted from each detection's crop.
InstanceMap segment_instances(const RasterImage& image, std::span<const FeatureMapStack> per_box_stacks,
                              const AnnotationSet& detections, const GrabCutParams& params = {});

std::string instance_table_json(const InstanceMap& map, const std::string& image_ref);

/// Id map as 16-bit PGM plus its JSON table.
void write_instance_map(const InstanceMap& map, const std::string& image_ref, const std::filesystem::path& pgm_path,
                        const std::filesystem::path& json_path);

struct CleansingReport {
  AnnotationSet kept;
  AnnotationSet dropped;
  std::size_t tightened_count = 0;
};

/// Drops boxes whose heatmap peak is below the threshold and shrinks the rest to
/// their largest above-mean region. heatmaps[i] covers annotations.boxes[i] and
/// must have that box's size.
CleansingReport clean_annotations(std::span<const Heatmap> heatmaps, const AnnotationSet& annotations,
                                  double intensity_threshold = kDefaultDropThreshold);

/// Boxes around above-mean blobs, each scaled about its center by every factor
/// and clipped to the heatmap. Blobs by area, scales ascending, duplicates dropped.
std::vector<BoundingBox> generate_proposals(const Heatmap& heatmap,
                                            std::span<const double> scales = kDefaultProposalScales);

}  // namespace mason
