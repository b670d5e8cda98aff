#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mason {

enum class ErrorCode {
  FormatError,
  UnsupportedLayout,
  InvalidData,
  IoError,
  InvalidAnnotation,
  InvalidTarget,
  InsufficientSamples,
  DegenerateTrimap,
  InvalidThreshold,
  DimMismatch,
  EmptyInput,
  InvalidArgument,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Every failure raised by the library. what() is prefixed with the error name,
/// e.g. "DegenerateTrimap: no background pixels".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Row-major 2-D grid. The tag parameter keeps semantically different grids
/// (heatmaps, trimaps, masks) from being mixed up by accident.
template <class T, class Tag = void>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(int height, int width, T fill = T{})
      : height_(check_dim(height)), width_(check_dim(width)),
        values_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill) {}

  Grid(int height, int width, std::vector<T> values)
      : height_(check_dim(height)), width_(check_dim(width)), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
      throw Error(ErrorCode::DimMismatch, "grid value count does not match its dimensions");
    }
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T& operator()(int y, int x) { return values_[index(y, x)]; }
  const T& operator()(int y, int x) const { return values_[index(y, x)]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  template <class U, class OtherTag>
  bool same_shape(const Grid<U, OtherTag>& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  bool operator==(const Grid&) const = default;

 private:
  static int check_dim(int d) {
    if (d < 0) throw Error(ErrorCode::InvalidArgument, "negative grid dimension");
    return d;
  }

  std::size_t index(int y, int x) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> values_;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

struct HeatmapTag;
struct TrimapTag;
struct MaskTag;

/// Un-normalized activation sums at feature resolution.
using RawMap = Grid<double>;
/// Objectness heatmap, values in [0,255].
using Heatmap = Grid<double, HeatmapTag>;
/// GrabCut stroke labels, see trimap_label.
using Trimap = Grid<std::uint8_t, TrimapTag>;
/// Binary mask, values in {0,1}. Used for thresholded heatmaps and segmentations.
using Mask = Grid<std::uint8_t, MaskTag>;
/// Plain 8-bit gray raster as stored in a PGM file.
using GrayImage = Grid<std::uint8_t>;
using RasterImage = Grid<Rgb>;

namespace trimap_label {
inline constexpr std::uint8_t kSureBackground = 0;
inline constexpr std::uint8_t kSureForeground = 1;
inline constexpr std::uint8_t kProbableBackground = 2;
inline constexpr std::uint8_t kProbableForeground = 3;
}  // namespace trimap_label

/// Axis-aligned box in integer pixels, half-open: columns x0..x1-1, rows y0..y1-1.
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  long long area() const noexcept {
    return valid() ? static_cast<long long>(width()) * height() : 0;
  }
  bool valid() const noexcept { return x0 < x1 && y0 < y1; }
  bool inside(int image_height, int image_width) const noexcept {
    return valid() && x0 >= 0 && y0 >= 0 && x1 <= image_width && y1 <= image_height;
  }

  bool operator==(const BoundingBox&) const = default;
};

/// Intersection of two boxes; nullopt when they do not overlap.
std::optional<BoundingBox> intersect(const BoundingBox& a, const BoundingBox& b) noexcept;

struct Annotation {
  BoundingBox box;
  std::string label;
  std::optional<double> score;

  bool operator==(const Annotation&) const = default;
};

struct AnnotationSet {
  std::string image;
  std::vector<Annotation> boxes;

  bool operator==(const AnnotationSet&) const = default;
};

/// Throws InvalidAnnotation unless every box is non-degenerate, has non-negative
/// origin and (when given) lies inside an image of the stated size.
void validate_annotations(const AnnotationSet& set, std::optional<std::pair<int, int>> image_hw = {});

}  // namespace mason
