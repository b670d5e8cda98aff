#include "mason/grabcut.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace mason {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Neighbor {
  int dy;
  int dx;
  double inv_dist;
};

// Each unordered 8-neighbor pair is visited once.
constexpr std::array<Neighbor, 4> kForwardNeighbors{{
    {0, 1, 1.0},
    {1, 0, 1.0},
    {1, 1, 1.0 / std::numbers::sqrt2},
    {1, -1, 1.0 / std::numbers::sqrt2},
}};

Color to_color(const Rgb& c) { return {double(c.r), double(c.g), double(c.b)}; }

double squared_diff(const Rgb& a, const Rgb& b) {
  const double dr = double(a.r) - b.r;
  const double dg = double(a.g) - b.g;
  const double db = double(a.b) - b.b;
  return dr * dr + dg * dg + db * db;
}

template <class F>
void for_each_pair(int h, int w, F&& f) {
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (const auto& n : kForwardNeighbors) {
        const int ny = y + n.dy;
        const int nx = x + n.dx;
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        f(y, x, ny, nx, n.inv_dist);
      }
    }
  }
}

double nlink_weight(const Rgb& a, const Rgb& b, double inv_dist, double gamma, double beta) {
  return gamma * inv_dist * std::exp(-beta * squared_diff(a, b));
}

// Refits a color model from hard component assignments. Components left without
// pixels keep their parameters with zero weight.
GaussianMixture refit(const GaussianMixture& current, const std::vector<Color>& pixels) {
  const std::size_t k = current.size();
  std::vector<std::size_t> label(pixels.size());
  std::vector<std::size_t> count(k, 0);
  std::vector<Color> sum(k, Color::Zero());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    label[i] = best_component(current, pixels[i]);
    ++count[label[i]];
    sum[label[i]] += pixels[i];
  }
  std::vector<GaussianComponent> comps(current.components());
  std::vector<Eigen::Matrix3d> scatter(k, Eigen::Matrix3d::Zero());
  for (std::size_t j = 0; j < k; ++j) {
    if (count[j]) comps[j].mean = sum[j] / static_cast<double>(count[j]);
  }
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const Color d = pixels[i] - comps[label[i]].mean;
    scatter[label[i]] += d * d.transpose();
  }
  for (std::size_t j = 0; j < k; ++j) {
    comps[j].weight = static_cast<double>(count[j]) / static_cast<double>(pixels.size());
    if (count[j]) {
      comps[j].covariance = scatter[j] / static_cast<double>(count[j]) +
                            kCovarianceRegularization * Eigen::Matrix3d::Identity();
    }
  }
  return GaussianMixture(std::move(comps));
}

std::vector<Color> side_colors(const RasterImage& image, const Mask& labelling, std::uint8_t side) {
  std::vector<Color> out;
  const auto px = image.values();
  const auto lab = labelling.values();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (lab[i] == side) out.push_back(to_color(px[i]));
  }
  return out;
}

}  // namespace

void GrabCutParams::validate() const {
  if (components < 1) throw Error(ErrorCode::InvalidArgument, "GMM component count must be >= 1");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::InvalidArgument, "gamma must be >= 0");
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  if (!(energy_epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "energy_epsilon must be >= 0");
}

double assigned_cost(const GaussianMixture& gmm, std::size_t k, const Color& color) {
  const double w = gmm.component(k).weight;
  if (!(w > 0.0)) return kInf;
  return -std::log(w) - gmm.log_gaussian(k, color) +
         0.5 * kCovarianceRegularization * gmm.inverse_covariance(k).trace();
}

std::size_t best_component(const GaussianMixture& gmm, const Color& color) {
  std::size_t best = 0;
  double best_cost = kInf;
  for (std::size_t k = 0; k < gmm.size(); ++k) {
    const double c = assigned_cost(gmm, k, color);
    if (c < best_cost) {
      best_cost = c;
      best = k;
    }
  }
  return best;
}

double data_cost(const GaussianMixture& gmm, const Color& color) {
  return assigned_cost(gmm, best_component(gmm, color), color);
}

double smoothness_beta(const RasterImage& image) {
  double total = 0.0;
  std::size_t pairs = 0;
  for_each_pair(image.height(), image.width(), [&](int y, int x, int ny, int nx, double) {
    total += squared_diff(image(y, x), image(ny, nx));
    ++pairs;
  });
  if (pairs == 0 || !(total > 0.0)) return 0.0;
  return 1.0 / (2.0 * total / static_cast<double>(pairs));
}

FlowNetwork build_graph(const RasterImage& image, const Trimap& trimap, const GaussianMixture& foreground,
                        const GaussianMixture& background, double gamma) {
  using namespace trimap_label;
  if (!image.same_shape(trimap)) throw Error(ErrorCode::DimMismatch, "image and trimap sizes differ");
  const int h = image.height();
  const int w = image.width();
  const int n = h * w;
  FlowNetwork net(n + 2, n, n + 1);
  net.reserve(static_cast<std::size_t>(n) * 6);

  const auto px = image.values();
  const auto labels = trimap.values();
  std::vector<double> to_source(static_cast<std::size_t>(n));
  std::vector<double> to_sink(static_cast<std::size_t>(n));
  double max_data = 0.0;
  for (int i = 0; i < n; ++i) {
    const Color c = to_color(px[i]);
    const double fg = data_cost(foreground, c);
    const double bg = data_cost(background, c);
    const double base = std::min(fg, bg);
    // Cutting s->p labels p background, cutting p->t labels it foreground.
    to_source[i] = bg - base;
    to_sink[i] = fg - base;
    max_data = std::max({max_data, to_source[i], to_sink[i]});
  }
  const double hard = 1e9 * gamma + max_data + 1.0;
  for (int i = 0; i < n; ++i) {
    double s = to_source[i];
    double t = to_sink[i];
    if (labels[i] == kSureForeground) {
      s = hard;
      t = 0.0;
    } else if (labels[i] == kSureBackground) {
      s = 0.0;
      t = hard;
    }
    if (s > 0.0) net.add_arc(n, i, s);
    if (t > 0.0) net.add_arc(i, n + 1, t);
  }

  const double beta = smoothness_beta(image);
  for_each_pair(h, w, [&](int y, int x, int ny, int nx, double inv_dist) {
    const double wt = nlink_weight(image(y, x), image(ny, nx), inv_dist, gamma, beta);
    if (wt > 0.0) net.add_edge_pair(y * w + x, ny * w + nx, wt, wt);
  });
  return net;
}

double segmentation_energy(const RasterImage& image, const Mask& labelling, const GaussianMixture& foreground,
                           const GaussianMixture& background, double gamma) {
  if (!image.same_shape(labelling)) throw Error(ErrorCode::DimMismatch, "image and labelling sizes differ");
  double energy = 0.0;
  const auto px = image.values();
  const auto lab = labelling.values();
  for (std::size_t i = 0; i < px.size(); ++i) {
    energy += data_cost(lab[i] ? foreground : background, to_color(px[i]));
  }
  const double beta = smoothness_beta(image);
  for_each_pair(image.height(), image.width(), [&](int y, int x, int ny, int nx, double inv_dist) {
    if (labelling(y, x) != labelling(ny, nx)) {
      energy += nlink_weight(image(y, x), image(ny, nx), inv_dist, gamma, beta);
    }
  });
  return energy;
}

GrabCutTrace grabcut_traced(const RasterImage& image, const Trimap& trimap, const GrabCutParams& params) {
  using namespace trimap_label;
  params.validate();
  if (image.empty()) throw Error(ErrorCode::DimMismatch, "empty image");
  if (!image.same_shape(trimap)) throw Error(ErrorCode::DimMismatch, "image and trimap sizes differ");

  GrabCutTrace trace;
  trace.mask = Mask(image.height(), image.width(), 0);
  auto alpha = trace.mask.values();
  const auto labels = trimap.values();
  bool any_fg = false;
  bool any_bg = false;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 3) throw Error(ErrorCode::InvalidArgument, "trimap labels must be in {0,1,2,3}");
    const bool fg = labels[i] == kSureForeground || labels[i] == kProbableForeground;
    alpha[i] = fg;
    any_fg |= fg;
    any_bg |= !fg;
  }
  if (!any_fg) throw Error(ErrorCode::DegenerateTrimap, "trimap has no foreground (1 or 3) pixel");
  if (!any_bg) throw Error(ErrorCode::DegenerateTrimap, "trimap has no background (0 or 2) pixel");

  auto initial_model = [&](std::uint8_t side, std::uint64_t seed) {
    const auto colors = side_colors(image, trace.mask, side);
    const int k = std::min<int>(params.components, static_cast<int>(colors.size()));
    return fit_gmm(colors, k, seed);
  };
  GaussianMixture fg_model = initial_model(1, params.rng_seed);
  GaussianMixture bg_model = initial_model(0, params.rng_seed ^ 0x9E3779B97F4A7C15ULL);

  const int n = static_cast<int>(labels.size());
  for (int it = 0; it < params.max_iters; ++it) {
    if (auto fg = side_colors(image, trace.mask, 1); !fg.empty()) fg_model = refit(fg_model, fg);
    if (auto bg = side_colors(image, trace.mask, 0); !bg.empty()) bg_model = refit(bg_model, bg);

    const CutResult cut = max_flow_min_cut(build_graph(image, trimap, fg_model, bg_model, params.gamma));
    for (int i = 0; i < n; ++i) {
      if (labels[i] == kSureForeground) {
        alpha[i] = 1;
      } else if (labels[i] == kSureBackground) {
        alpha[i] = 0;
      } else {
        alpha[i] = cut.source_side[i];
      }
    }
    const double e = segmentation_energy(image, trace.mask, fg_model, bg_model, params.gamma);
    trace.energy.push_back(e);
    ++trace.iterations;
    if (trace.energy.size() >= 2) {
      const double prev = trace.energy[trace.energy.size() - 2];
      if (prev - e < params.energy_epsilon * std::abs(prev)) {
        trace.converged = true;
        break;
      }
    }
  }
  return trace;
}

Mask grabcut(const RasterImage& image, const Trimap& trimap, const GrabCutParams& params) {
  return grabcut_traced(image, trimap, params).mask;
}

}  // namespace mason
