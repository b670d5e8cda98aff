#pragma once

#include <cstdint>
#include <vector>

#include "mason/common.hpp"
#include "mason/gmm.hpp"
#include "mason/maxflow.hpp"

namespace mason {

struct GrabCutParams {
  int components = 5;           // GMM components per color model
  double gamma = 50.0;          // smoothness weight
  int max_iters = 5;
  double energy_epsilon = 1e-3; // stop once the relative energy decrease falls below this
  std::uint64_t rng_seed = 42;

  void validate() const;
};

/// Cost of explaining `color` with component k of a color model:
///   -log w_k - log N(color; mean_k, cov_k) + (reg / 2) tr(cov_k^-1)
/// The trace term makes the regularized covariance (scatter + reg * I) the exact
/// minimizer when a component is refit from its assigned pixels.
double assigned_cost(const GaussianMixture& gmm, std::size_t k, const Color& color);

/// Cheapest component for `color` (ties go to the lower index).
std::size_t best_component(const GaussianMixture& gmm, const Color& color);

/// Data term of a pixel under a color model: min over components of assigned_cost.
double data_cost(const GaussianMixture& gmm, const Color& color);

/// 1 / (2 * mean squared color difference over all 8-neighbor pairs); 0 for a flat image.
double smoothness_beta(const RasterImage& image);

/// Pixel graph for one cut. Node y*width+x is pixel (y,x); the source is
/// width*height and the sink width*height+1. Source side means foreground.
/// Trimap labels 0/1 get an effectively infinite link to their terminal.
FlowNetwork build_graph(const RasterImage& image, const Trimap& trimap, const GaussianMixture& foreground,
                        const GaussianMixture& background, double gamma);

/// Data plus smoothness energy of a labelling under the given color models.
double segmentation_energy(const RasterImage& image, const Mask& labelling, const GaussianMixture& foreground,
                           const GaussianMixture& background, double gamma);

struct GrabCutTrace {
  Mask mask;
  std::vector<double> energy;  // after each cut
  int iterations = 0;
  bool converged = false;
};

/// Iterated GrabCut seeded from a trimap. Pixels labelled 0 or 1 never change.
/// Throws DimMismatch for mismatched inputs and DegenerateTrimap when the trimap
/// has no foreground {1,3} or no background {0,2} pixel.
GrabCutTrace grabcut_traced(const RasterImage& image, const Trimap& trimap, const GrabCutParams& params = {});

Mask grabcut(const RasterImage& image, const Trimap& trimap, const GrabCutParams& params = {});

}  // namespace mason
