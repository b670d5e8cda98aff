#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mason/common.hpp"

namespace mason {

/// Activations of one convolutional layer: channels x height x width, row-major.
struct FeatureMapStack {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;
  std::string layer_name = "unknown";
  std::string source_image;

  FeatureMapStack() = default;
  FeatureMapStack(int channels, int height, int width, std::vector<float> data,
                  std::string layer_name = "unknown", std::string source_image = "");

  float at(int channel, int y, int x) const {
    return data[(static_cast<std::size_t>(channel) * height + y) * width + x];
  }

  /// Throws InvalidData on shape/length mismatch or non-finite values.
  void validate() const;

  bool operator==(const FeatureMapStack&) const = default;
};

/// Sidecar metadata path for an array file: dir/name.npy -> dir/name.meta.json.
std::filesystem::path sidecar_path(const std::filesystem::path& array_path);

// NPY v1.0, little-endian float32, C order, 3-D. Metadata comes from the sidecar
// when one exists.
FeatureMapStack read_feature_stack(const std::filesystem::path& path);
void write_feature_stack(const FeatureMapStack& stack, const std::filesystem::path& path);

/// Bytes of the NPY v1.0 header (magic through padding newline) for a float32
/// C-order array of the given shape.
std::string npy_header(std::span<const std::size_t> shape);

RasterImage read_image(const std::filesystem::path& path);
void write_image(const RasterImage& image, const std::filesystem::path& path);

GrayImage read_gray(const std::filesystem::path& path);
void write_gray(const GrayImage& image, const std::filesystem::path& path);

// Masks are stored byte for byte; any nonzero value counts as foreground.
Mask read_mask(const std::filesystem::path& path);
void write_mask(const Mask& mask, const std::filesystem::path& path);

/// Rounds half away from zero to 8 bits.
void write_heatmap(const Heatmap& heatmap, const std::filesystem::path& path);
Heatmap read_heatmap(const std::filesystem::path& path);

/// Stored with raw label values {0,1,2,3}.
void write_trimap(const Trimap& trimap, const std::filesystem::path& path);
Trimap read_trimap(const std::filesystem::path& path);

/// 16-bit PGM (maxval 65535, big-endian samples) used for instance id maps.
void write_gray16(const Grid<std::uint16_t>& image, const std::filesystem::path& path);
Grid<std::uint16_t> read_gray16(const std::filesystem::path& path);

AnnotationSet read_annotations(const std::filesystem::path& path);
void write_annotations(const AnnotationSet& set, const std::filesystem::path& path);

std::string annotations_to_json(const AnnotationSet& set);
AnnotationSet annotations_from_json(const std::string& text);

/// Writes text to a file, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mason
