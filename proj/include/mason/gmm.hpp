#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace mason {

using Color = Eigen::Vector3d;

/// Added to every fitted covariance so flat color regions stay non-singular.
inline constexpr double kCovarianceRegularization = 1e-3;

struct GaussianComponent {
  double weight = 1.0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
};

/// Mixture of 3-D Gaussians over RGB colors.
///
/// Construction checks that the weights are non-negative and sum to one and that
/// every covariance is symmetric positive-definite, then caches inverses and
/// normalizers. Components with zero weight are allowed and never contribute.
class GaussianMixture {
 public:
  explicit GaussianMixture(std::vector<GaussianComponent> components);

  std::size_t size() const noexcept { return components_.size(); }
  const GaussianComponent& component(std::size_t k) const { return components_[k]; }
  const std::vector<GaussianComponent>& components() const noexcept { return components_; }

  /// log N(color; mean_k, cov_k), without the mixture weight.
  double log_gaussian(std::size_t k, const Color& color) const;

  /// -log sum_k w_k N(color; mean_k, cov_k).
  double neg_log_density(const Color& color) const;

  const Eigen::Matrix3d& inverse_covariance(std::size_t k) const { return inverse_[k]; }

 private:
  std::vector<GaussianComponent> components_;
  std::vector<Eigen::Matrix3d> inverse_;
  std::vector<double> log_norm_;
};

struct GmmFitOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;  // relative log-likelihood change
  int kmeans_iterations = 10;
  double regularization = kCovarianceRegularization;
};

struct GmmFit {
  GaussianMixture model;
  /// Total log-likelihood of the samples before the first M-step and after each one.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
};

/// k-means++ seeding, a few Lloyd iterations, then EM until the relative
/// log-likelihood change drops below the tolerance.
/// Throws InsufficientSamples when there are fewer samples than components.
GmmFit fit_gmm_traced(std::span<const Color> samples, int components, std::uint64_t seed,
                      const GmmFitOptions& options = {});

GaussianMixture fit_gmm(std::span<const Color> samples, int components, std::uint64_t seed);

double gmm_neg_log_density(const GaussianMixture& gmm, const Color& color);

double log_likelihood(const GaussianMixture& gmm, std::span<const Color> samples);

}  // namespace mason
