#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "fcs/landscape.hpp"
#include "fcs/ridge.hpp"
#include "fcs/rng.hpp"

namespace fcs {

/// Boltzmann test-input distribution: mass(x) proportional to
/// exp(lambda * mu(x)), with mu a trained regression model. lambda = 0 is
/// the uniform (training) distribution.
struct BoltzmannDesign {
  double lambda = 0.0;
};

/// A categorical distribution over the sequences of a landscape, stored in
/// log space, together with the uniform training density it shifts away
/// from.
class BoltzmannDistribution {
 public:
  BoltzmannDistribution(Eigen::VectorXd log_mass, int length)
      : log_mass_(std::move(log_mass)), length_(length) {
    cumulative_.resize(log_mass_.size());
    double acc = 0;
    for (Eigen::Index i = 0; i < log_mass_.size(); ++i) {
      acc += std::exp(log_mass_[i]);
      cumulative_[i] = acc;
    }
    cumulative_[log_mass_.size() - 1] = 1.0;
  }

  Eigen::Index size() const { return log_mass_.size(); }
  const Eigen::VectorXd& log_mass() const { return log_mass_; }
  double mass(Eigen::Index id) const { return std::exp(log_mass_[id]); }
  Eigen::VectorXd masses() const { return log_mass_.array().exp(); }

  double train_log_density() const {
    return -static_cast<double>(length_) * std::numbers::ln2;
  }

  /// v(x) = mass(x) / (1/2^L), the likelihood ratio against the uniform
  /// training distribution.
  double log_likelihood_ratio(Eigen::Index id) const {
    return log_mass_[id] - train_log_density();
  }
  double likelihood_ratio(Eigen::Index id) const {
    return std::exp(log_likelihood_ratio(id));
  }

  /// Inverse-CDF draw from a uniform in [0, 1). Using a shared uniform
  /// across distributions gives comonotone draws (common random numbers).
  Eigen::Index sample(double u) const {
    const double* begin = cumulative_.data();
    const double* end = begin + cumulative_.size();
    return std::min<Eigen::Index>(
        std::upper_bound(begin, end, u) - begin, cumulative_.size() - 1);
  }

  Eigen::Index sample(std::mt19937_64& g) const { return sample(uniform01(g)); }

 private:
  Eigen::VectorXd log_mass_;
  Eigen::VectorXd cumulative_;
  int length_;
};

inline BoltzmannDistribution boltzmann_distribution(const RidgeModel& model,
                                                    const Landscape& land,
                                                    double lambda) {
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  if (model.coefficients.size() != land.feature_dim()) {
    throw std::invalid_argument("boltzmann_distribution: dimension mismatch");
  }
  Eigen::VectorXd logits = lambda * (land.features * model.coefficients);
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  logits.array() -= lse;
  return BoltzmannDistribution(std::move(logits), land.length);
}

struct TrainingSample {
  Dataset data;
  std::vector<Eigen::Index> ids;
};

/// n i.i.d. draws, uniform over sequences, with fresh Gaussian measurement
/// noise per draw (the same sequence can carry different labels).
inline TrainingSample sample_training(const Landscape& land, int n,
                                      std::mt19937_64& g,
                                      double noise_scale = 1.0) {
  if (n < 1) throw std::invalid_argument("sample_training: n must be >= 1");
  TrainingSample out;
  out.data.inputs.resize(n, land.feature_dim());
  out.data.labels.resize(n);
  out.ids.resize(static_cast<std::size_t>(n));
  const std::uint64_t mask = static_cast<std::uint64_t>(land.size()) - 1;
  for (int i = 0; i < n; ++i) {
    const Eigen::Index id = static_cast<Eigen::Index>(g() & mask);
    out.ids[static_cast<std::size_t>(i)] = id;
    out.data.inputs.row(i) = land.features.row(id);
    out.data.labels[i] =
        land.fitness[id] + noise_scale * land.noise_sd[id] * standard_normal(g);
  }
  return out;
}

struct ProposalSamples {
  std::vector<Eigen::Index> ids;
  Eigen::VectorXd masses;  // proposal density at each sample
};

/// Rejection sampling from a categorical target given samples from a
/// proposal with known masses. Accepted ids are exact draws from the
/// target restricted to the proposal's support. When no bound is given,
/// M is computed by enumerating the target/proposal ratios of the samples;
/// a supplied bound that is exceeded raises an error.
inline std::vector<Eigen::Index> rejection_sample(
    const Eigen::VectorXd& target_mass, const ProposalSamples& proposal,
    std::mt19937_64& g, std::optional<double> bound = std::nullopt) {
  if (proposal.ids.size() != static_cast<std::size_t>(proposal.masses.size())) {
    throw std::invalid_argument("rejection_sample: ids/masses length mismatch");
  }
  std::vector<double> ratio(proposal.ids.size());
  double max_ratio = 0;
  for (std::size_t j = 0; j < proposal.ids.size(); ++j) {
    const Eigen::Index id = proposal.ids[j];
    if (id < 0 || id >= target_mass.size()) {
      throw std::invalid_argument("rejection_sample: id out of range");
    }
    const double q = proposal.masses[static_cast<Eigen::Index>(j)];
    if (!(q > 0)) {
      throw std::invalid_argument("rejection_sample: proposal mass must be > 0");
    }
    ratio[j] = target_mass[id] / q;
    max_ratio = std::max(max_ratio, ratio[j]);
  }
  const double m = bound.value_or(max_ratio);
  if (max_ratio > m) {
    throw std::runtime_error(
        "rejection_sample: bound M underestimates the target/proposal ratio");
  }
  std::vector<Eigen::Index> accepted;
  for (std::size_t j = 0; j < proposal.ids.size(); ++j) {
    if (uniform01(g) * m < ratio[j]) accepted.push_back(proposal.ids[j]);
  }
  return accepted;
}

}  // namespace fcs
