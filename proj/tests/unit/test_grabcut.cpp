#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mason/grabcut.hpp"
#include "mason/metrics.hpp"
#include "support.hpp"

using namespace mason;
using namespace mason::trimap_label;
using testing::error_of;

namespace {

GaussianMixture unit_model(const Color& mean) {
  return GaussianMixture({{1.0, mean, 100.0 * Eigen::Matrix3d::Identity()}});
}

double arc_capacity(const FlowNetwork& net, int u, int v) {
  double c = 0.0;
  for (const auto& a : net.arcs()) {
    if (a.from == u && a.to == v) c += a.capacity;
    if (a.from == v && a.to == u) c += a.reverse_capacity;
  }
  return c;
}

RasterImage two_color(int n) {
  RasterImage img(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) img(y, x) = x < n / 2 ? Rgb{200, 50, 50} : Rgb{50, 50, 200};
  }
  return img;
}

}  // namespace

TEST_CASE("n-link on identical colors equals gamma") {
  const RasterImage img(1, 2, Rgb{9, 9, 9});
  const Trimap t(1, 2, kProbableForeground);
  CHECK(smoothness_beta(img) == 0.0);
  const FlowNetwork net = build_graph(img, t, unit_model(Color(9, 9, 9)), unit_model(Color(0, 0, 0)), 50.0);
  CHECK(arc_capacity(net, 0, 1) == 50.0);
  CHECK(arc_capacity(net, 1, 0) == 50.0);
}

TEST_CASE("diagonal n-links are scaled by 1/sqrt(2)") {
  const RasterImage img(2, 2, Rgb{1, 2, 3});
  const Trimap t(2, 2, kProbableForeground);
  const FlowNetwork net = build_graph(img, t, unit_model(Color(1, 2, 3)), unit_model(Color(0, 0, 0)), 50.0);
  CHECK(arc_capacity(net, 0, 3) == doctest::Approx(50.0 / std::numbers::sqrt2).epsilon(1e-15));
  CHECK(arc_capacity(net, 1, 2) == doctest::Approx(50.0 / std::numbers::sqrt2).epsilon(1e-15));
  CHECK(arc_capacity(net, 0, 1) == 50.0);
}

TEST_CASE("beta is the inverse of twice the mean squared difference") {
  RasterImage img(1, 2);
  img(0, 0) = Rgb{0, 0, 0};
  img(0, 1) = Rgb{3, 4, 0};
  CHECK(smoothness_beta(img) == 1.0 / 50.0);
  const FlowNetwork net =
      build_graph(img, Trimap(1, 2, kProbableForeground), unit_model(Color::Zero()), unit_model(Color::Zero()), 10);
  CHECK(arc_capacity(net, 0, 1) == doctest::Approx(10.0 * std::exp(-0.5)).epsilon(1e-15));
}

TEST_CASE("sure labels get one-sided terminal links") {
  RasterImage img(1, 2);
  img(0, 0) = Rgb{0, 0, 255};
  img(0, 1) = Rgb{255, 0, 0};
  // The sure-foreground pixel is blue, which the background model explains better.
  Trimap t(1, 2, std::vector<std::uint8_t>{kSureForeground, kSureBackground});
  const auto fg = unit_model(Color(255, 0, 0));
  const auto bg = unit_model(Color(0, 0, 255));
  const FlowNetwork net = build_graph(img, t, fg, bg, 5.0);
  const int s = net.source();
  const int k = net.sink();
  CHECK(arc_capacity(net, 0, k) == 0.0);
  CHECK(arc_capacity(net, s, 1) == 0.0);
  CHECK(arc_capacity(net, s, 0) > 1e9);
  CHECK(arc_capacity(net, 1, k) > 1e9);

  // Enumerating the four labellings: only {0 source, 1 sink} avoids a hard link.
  const CutResult r = max_flow_min_cut(net);
  CHECK(r.source_side[0] == 1);
  CHECK(r.source_side[1] == 0);
  CHECK(r.flow_value == doctest::Approx(arc_capacity(net, 0, 1)));
}

TEST_CASE("probable t-links hold the cost difference") {
  const RasterImage img(1, 1, Rgb{10, 20, 30});
  const auto fg = unit_model(Color(10, 20, 30));
  const auto bg = unit_model(Color(40, 20, 30));
  const FlowNetwork net = build_graph(img, Trimap(1, 1, kProbableBackground), fg, bg, 1.0);
  const Color c(10, 20, 30);
  CHECK(arc_capacity(net, net.source(), 0) == doctest::Approx(data_cost(bg, c) - data_cost(fg, c)).epsilon(1e-12));
  CHECK(arc_capacity(net, 0, net.sink()) == 0.0);
  CHECK(data_cost(bg, c) - data_cost(fg, c) == doctest::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("data cost picks the cheapest component") {
  const GaussianMixture g({{0.5, Color(0, 0, 0), Eigen::Matrix3d::Identity()},
                           {0.5, Color(100, 0, 0), Eigen::Matrix3d::Identity()}});
  CHECK(best_component(g, Color(90, 0, 0)) == 1);
  CHECK(best_component(g, Color(10, 0, 0)) == 0);
  CHECK(data_cost(g, Color(10, 0, 0)) == assigned_cost(g, 0, Color(10, 0, 0)));
  CHECK(assigned_cost(g, 0, Color(0, 0, 0)) ==
        doctest::Approx(std::log(2.0) + 1.5 * std::log(2.0 * std::numbers::pi) + 1.5e-3).epsilon(1e-14));
}

TEST_CASE("two-color image") {
  const RasterImage img = two_color(32);
  Trimap t(32, 32, kProbableForeground);
  t(5, 5) = t(20, 3) = t(10, 12) = t(28, 8) = kSureForeground;
  t(5, 25) = t(20, 30) = t(10, 18) = t(28, 22) = kSureBackground;
  const GrabCutTrace trace = grabcut_traced(img, t, {});
  Mask truth(32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 16; ++x) truth(y, x) = 1;
  }
  CHECK(mask_iou(trace.mask, truth) >= 0.95);
  for (std::size_t i = 1; i < trace.energy.size(); ++i) CHECK(trace.energy[i] <= trace.energy[i - 1]);
}

TEST_CASE("hard labels dominate on a constant image") {
  const RasterImage img(8, 8, Rgb{120, 120, 120});
  Trimap t(8, 8, kSureForeground);
  t(0, 0) = kSureBackground;
  const Mask m = grabcut(img, t, {});
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) CHECK(m(y, x) == (y == 0 && x == 0 ? 0 : 1));
  }
}

TEST_CASE("degenerate trimaps") {
  const RasterImage img(4, 4, Rgb{1, 2, 3});
  CHECK(error_of([&] { grabcut(img, Trimap(4, 4, kProbableForeground)); }) == ErrorCode::DegenerateTrimap);
  CHECK(error_of([&] { grabcut(img, Trimap(4, 4, kProbableBackground)); }) == ErrorCode::DegenerateTrimap);
  CHECK(error_of([&] { grabcut(img, Trimap(4, 4, kSureBackground)); }) == ErrorCode::DegenerateTrimap);
  CHECK(error_of([&] { grabcut(img, Trimap(4, 3, kSureBackground)); }) == ErrorCode::DimMismatch);
  CHECK(error_of([&] { grabcut(img, Trimap(4, 4, std::uint8_t{7})); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("parameter validation") {
  const RasterImage img = two_color(8);
  Trimap t(8, 8, kProbableForeground);
  t(0, 7) = kSureBackground;
  GrabCutParams p;
  p.components = 0;
  CHECK(error_of([&] { grabcut(img, t, p); }) == ErrorCode::InvalidArgument);
  p = {};
  p.gamma = -1;
  CHECK(error_of([&] { grabcut(img, t, p); }) == ErrorCode::InvalidArgument);
  p = {};
  p.max_iters = 0;
  CHECK(error_of([&] { grabcut(img, t, p); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("energy decreases and hard labels hold on noisy scenes") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const int h = 20;
    const int w = 24;
    RasterImage img(h, w);
    Trimap t(h, w, kProbableBackground);
    std::normal_distribution<double> noise(0.0, 25.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const bool inside = (y - 10) * (y - 10) + (x - 12) * (x - 12) < 40;
        const double base = inside ? 180.0 : 70.0;
        auto ch = [&](double off) { return static_cast<std::uint8_t>(std::clamp(base + off + noise(rng), 0.0, 255.0)); };
        img(y, x) = Rgb{ch(0), ch(-30), ch(20)};
        if (inside) t(y, x) = kProbableForeground;
      }
    }
    t(10, 12) = kSureForeground;
    t(0, 0) = kSureBackground;
    t(19, 23) = kSureBackground;
    GrabCutParams p;
    p.rng_seed = static_cast<std::uint64_t>(trial);
    p.max_iters = 8;
    const GrabCutTrace trace = grabcut_traced(img, t, p);
    for (std::size_t i = 1; i < trace.energy.size(); ++i) {
      CHECK(trace.energy[i] <= trace.energy[i - 1] + 1e-9 * std::abs(trace.energy[i - 1]));
    }
    CHECK(trace.mask(10, 12) == 1);
    CHECK(trace.mask(0, 0) == 0);
    CHECK(trace.mask(19, 23) == 0);
    CHECK(trace.iterations == static_cast<int>(trace.energy.size()));
    CHECK(grabcut(img, t, p) == trace.mask);
  }
}
