#include "mason/objectness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace mason {

namespace {

constexpr double kCatmullRomA = -0.5;

struct Taps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> make_taps(int src_len, int dst_len) {
  std::vector<Taps> taps(static_cast<std::size_t>(dst_len));
  for (int d = 0; d < dst_len; ++d) {
    const double s = source_coordinate(d, src_len, dst_len);
    const int base = static_cast<int>(std::floor(s));
    const double t = s - base;
    auto& tp = taps[static_cast<std::size_t>(d)];
    for (int k = 0; k < 4; ++k) {
      const int i = base - 1 + k;
      tp.index[k] = std::clamp(i, 0, src_len - 1);
      tp.weight[k] = cubic_kernel(t - (k - 1));
    }
  }
  return taps;
}

}  // namespace

RawMap sum_activations(const FeatureMapStack& stack) {
  stack.validate();
  RawMap out(stack.height, stack.width);
  std::vector<double> column(static_cast<std::size_t>(stack.channels));
  for (int y = 0; y < stack.height; ++y) {
    for (int x = 0; x < stack.width; ++x) {
      for (int c = 0; c < stack.channels; ++c) column[static_cast<std::size_t>(c)] = stack.at(c, y, x);
      std::sort(column.begin(), column.end());
      out(y, x) = std::accumulate(column.begin(), column.end(), 0.0);
    }
  }
  return out;
}

Heatmap normalize(const RawMap& raw) {
  Heatmap out(raw.height(), raw.width(), 0.0);
  if (raw.empty()) return out;
  const auto [lo, hi] = std::minmax_element(raw.values().begin(), raw.values().end());
  const double min = *lo;
  const double range = *hi - min;
  if (!(range > 0.0)) return out;
  std::transform(raw.values().begin(), raw.values().end(), out.values().begin(),
                 [&](double v) { return std::clamp((v - min) / range * 255.0, 0.0, 255.0); });
  return out;
}

double cubic_kernel(double x) noexcept {
  const double a = kCatmullRomA;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

double source_coordinate(int dst, int src_len, int dst_len) noexcept {
  return (dst + 0.5) * (static_cast<double>(src_len) / dst_len) - 0.5;
}

Heatmap bicubic_upscale(const Heatmap& map, int target_height, int target_width) {
  if (map.empty()) throw Error(ErrorCode::InvalidTarget, "cannot resample an empty map");
  if (target_height < map.height() || target_width < map.width()) {
    throw Error(ErrorCode::InvalidTarget, "target " + std::to_string(target_height) + "x" +
                                              std::to_string(target_width) + " is smaller than source " +
                                              std::to_string(map.height()) + "x" + std::to_string(map.width()));
  }
  const auto col_taps = make_taps(map.width(), target_width);
  const auto row_taps = make_taps(map.height(), target_height);

  // Taps are accumulated relative to the sample at the floor position. The kernel
  // weights sum to 1 only up to rounding, so this keeps constant runs exact.

  // Horizontal pass: source rows x target columns.
  Grid<double> rows(map.height(), target_width);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < target_width; ++x) {
      const auto& t = col_taps[static_cast<std::size_t>(x)];
      const double ref = map(y, t.index[1]);
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * (map(y, t.index[k]) - ref);
      rows(y, x) = ref + acc;
    }
  }

  Heatmap out(target_height, target_width);
  for (int y = 0; y < target_height; ++y) {
    const auto& t = row_taps[static_cast<std::size_t>(y)];
    for (int x = 0; x < target_width; ++x) {
      const double ref = rows(t.index[1], x);
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * (rows(t.index[k], x) - ref);
      out(y, x) = std::clamp(ref + acc, 0.0, 255.0);
    }
  }
  return out;
}

Heatmap objectness(const FeatureMapStack& stack, int image_height, int image_width) {
  return bicubic_upscale(normalize(sum_activations(stack)), image_height, image_width);
}

double mean_intensity(const Heatmap& heatmap) {
  if (heatmap.empty()) return 0.0;
  return std::accumulate(heatmap.values().begin(), heatmap.values().end(), 0.0) /
         static_cast<double>(heatmap.size());
}

Trimap stratify(const Heatmap& heatmap) {
  using namespace trimap_label;
  const double mu = mean_intensity(heatmap);
  Trimap out(heatmap.height(), heatmap.width());
  std::transform(heatmap.values().begin(), heatmap.values().end(), out.values().begin(), [mu](double v) {
    if (v > mu) return kSureForeground;
    if (v > 0.0) return kProbableForeground;
    return kProbableBackground;
  });
  return out;
}

}  // namespace mason
