#include "mason/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>

#include "mason/common.hpp"

namespace mason {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)), n - 1);
}

std::vector<Color> kmeans_pp_centers(std::span<const Color> samples, int k, std::mt19937_64& rng) {
  const std::size_t n = samples.size();
  std::vector<Color> centers;
  centers.reserve(static_cast<std::size_t>(k));
  centers.push_back(samples[uniform_index(rng, n)]);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (samples[i] - centers.back()).squaredNorm());
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double r = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, n);
    }
    centers.push_back(samples[pick]);
  }
  return centers;
}

std::size_t nearest(const std::vector<Color>& centers, const Color& c) {
  std::size_t best = 0;
  double best_d = (c - centers[0]).squaredNorm();
  for (std::size_t j = 1; j < centers.size(); ++j) {
    const double d = (c - centers[j]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

Eigen::Matrix3d covariance_of(std::span<const Color> samples, const Color& mean) {
  Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
  for (const auto& x : samples) {
    const Color d = x - mean;
    s += d * d.transpose();
  }
  return s / static_cast<double>(samples.size());
}

GaussianMixture initial_mixture(std::span<const Color> samples, int k, std::mt19937_64& rng,
                                const GmmFitOptions& opt) {
  std::vector<Color> centers = kmeans_pp_centers(samples, k, rng);
  std::vector<std::size_t> label(samples.size(), 0);
  for (int it = 0; it < opt.kmeans_iterations; ++it) {
    for (std::size_t i = 0; i < samples.size(); ++i) label[i] = nearest(centers, samples[i]);
    std::vector<Color> sum(centers.size(), Color::Zero());
    std::vector<std::size_t> count(centers.size(), 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      sum[label[i]] += samples[i];
      ++count[label[i]];
    }
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (count[j]) centers[j] = sum[j] / static_cast<double>(count[j]);
    }
  }
  for (std::size_t i = 0; i < samples.size(); ++i) label[i] = nearest(centers, samples[i]);

  Color global_mean = Color::Zero();
  for (const auto& x : samples) global_mean += x;
  global_mean /= static_cast<double>(samples.size());
  const Eigen::Matrix3d reg = opt.regularization * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d global_cov = covariance_of(samples, global_mean) + reg;

  std::vector<GaussianComponent> comps(centers.size());
  for (std::size_t j = 0; j < centers.size(); ++j) {
    std::vector<Color> members;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (label[i] == j) members.push_back(samples[i]);
    }
    auto& c = comps[j];
    if (members.empty()) {
      c.weight = 0.0;
      c.mean = centers[j];
      c.covariance = global_cov;
      continue;
    }
    c.weight = static_cast<double>(members.size()) / static_cast<double>(samples.size());
    Color m = Color::Zero();
    for (const auto& x : members) m += x;
    c.mean = m / static_cast<double>(members.size());
    c.covariance = covariance_of(members, c.mean) + reg;
  }
  return GaussianMixture(std::move(comps));
}

// Fills resp (n x k, row-major) and returns the total log-likelihood.
double e_step(const GaussianMixture& gmm, std::span<const Color> samples, std::vector<double>& resp) {
  const std::size_t k = gmm.size();
  resp.assign(samples.size() * k, 0.0);
  std::vector<double> logs(k);
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double peak = kNegInf;
    for (std::size_t j = 0; j < k; ++j) {
      const double w = gmm.component(j).weight;
      logs[j] = w > 0.0 ? std::log(w) + gmm.log_gaussian(j, samples[i]) : kNegInf;
      peak = std::max(peak, logs[j]);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += logs[j] == kNegInf ? 0.0 : std::exp(logs[j] - peak);
    const double lse = peak + std::log(s);
    total += lse;
    for (std::size_t j = 0; j < k; ++j) {
      resp[i * k + j] = logs[j] == kNegInf ? 0.0 : std::exp(logs[j] - lse);
    }
  }
  return total;
}

GaussianMixture m_step(const GaussianMixture& prev, std::span<const Color> samples, const std::vector<double>& resp,
                       double regularization) {
  const std::size_t k = prev.size();
  std::vector<GaussianComponent> comps(prev.components());
  std::vector<double> mass(k, 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) mass[j] += resp[i * k + j];
  }
  const double total_mass = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    auto& c = comps[j];
    c.weight = mass[j] / total_mass;
    if (!(mass[j] > 0.0)) {
      c.weight = 0.0;
      continue;
    }
    Color m = Color::Zero();
    for (std::size_t i = 0; i < samples.size(); ++i) m += resp[i * k + j] * samples[i];
    m /= mass[j];
    Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Color d = samples[i] - m;
      s += resp[i * k + j] * (d * d.transpose());
    }
    c.mean = m;
    c.covariance = s / mass[j] + regularization * Eigen::Matrix3d::Identity();
  }
  return GaussianMixture(std::move(comps));
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw Error(ErrorCode::InvalidArgument, "mixture needs at least one component");
  double sum = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight >= 0.0 && c.weight <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "mixture weights must lie in [0,1]");
    }
    sum += c.weight;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "mixture weights must sum to 1");
  inverse_.reserve(components_.size());
  log_norm_.reserve(components_.size());
  for (const auto& c : components_) {
    if (!c.covariance.isApprox(c.covariance.transpose(), 1e-12)) {
      throw Error(ErrorCode::InvalidArgument, "covariance must be symmetric");
    }
    Eigen::LLT<Eigen::Matrix3d> llt(c.covariance);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::InvalidArgument, "covariance must be positive-definite");
    }
    const Eigen::Matrix3d l = llt.matrixL();
    const double log_det = 2.0 * (std::log(l(0, 0)) + std::log(l(1, 1)) + std::log(l(2, 2)));
    inverse_.push_back(llt.solve(Eigen::Matrix3d::Identity()));
    log_norm_.push_back(-0.5 * (3.0 * std::log(2.0 * std::numbers::pi) + log_det));
  }
}

double GaussianMixture::log_gaussian(std::size_t k, const Color& color) const {
  const Color d = color - components_[k].mean;
  return log_norm_[k] - 0.5 * d.dot(inverse_[k] * d);
}

double GaussianMixture::neg_log_density(const Color& color) const {
  double peak = kNegInf;
  std::vector<double> logs(components_.size(), kNegInf);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    if (components_[k].weight > 0.0) {
      logs[k] = std::log(components_[k].weight) + log_gaussian(k, color);
      peak = std::max(peak, logs[k]);
    }
  }
  double s = 0.0;
  for (double l : logs) s += l == kNegInf ? 0.0 : std::exp(l - peak);
  return -(peak + std::log(s));
}

double gmm_neg_log_density(const GaussianMixture& gmm, const Color& color) { return gmm.neg_log_density(color); }

double log_likelihood(const GaussianMixture& gmm, std::span<const Color> samples) {
  double total = 0.0;
  for (const auto& x : samples) total -= gmm.neg_log_density(x);
  return total;
}

GmmFit fit_gmm_traced(std::span<const Color> samples, int components, std::uint64_t seed,
                      const GmmFitOptions& options) {
  if (components < 1) throw Error(ErrorCode::InvalidArgument, "component count must be at least 1");
  if (samples.size() < static_cast<std::size_t>(components)) {
    throw Error(ErrorCode::InsufficientSamples, std::to_string(samples.size()) + " samples for " +
                                                    std::to_string(components) + " components");
  }
  std::mt19937_64 rng(seed);
  GmmFit fit{initial_mixture(samples, components, rng, options), {}, 0, false};

  std::vector<double> resp;
  double ll = e_step(fit.model, samples, resp);
  fit.log_likelihood.push_back(ll);
  while (fit.iterations < options.max_iterations) {
    GaussianMixture next = m_step(fit.model, samples, resp, options.regularization);
    const double next_ll = e_step(next, samples, resp);
    fit.model = std::move(next);
    fit.log_likelihood.push_back(next_ll);
    ++fit.iterations;
    const double change = std::abs(next_ll - ll);
    ll = next_ll;
    if (change < options.tolerance * std::abs(fit.log_likelihood[fit.log_likelihood.size() - 2])) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

GaussianMixture fit_gmm(std::span<const Color> samples, int components, std::uint64_t seed) {
  return fit_gmm_traced(samples, components, seed).model;
}

}  // namespace mason
