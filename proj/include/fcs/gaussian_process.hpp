#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "fcs/dataset.hpp"

namespace fcs {

/// Symmetric covariance function over feature vectors.
using KernelFn = std::function<double(const FeatureVector&, const FeatureVector&)>;

struct GpConfig {
  KernelFn kernel;
  double noise_variance = 0.0;  // sigma^2 >= 0
};

inline KernelFn linear_kernel() {
  return [](const FeatureVector& u, const FeatureVector& v) { return u.dot(v); };
}

inline KernelFn rbf_kernel(double lengthscale) {
  return [lengthscale](const FeatureVector& u, const FeatureVector& v) {
    return std::exp(-(u - v).squaredNorm() / (2.0 * lengthscale * lengthscale));
  };
}

struct GpPosteriorLinear {
  double intercept = 0.0;
  double slope = 0.0;
  double variance = 0.0;
};

/// GP posterior at x, with the label of the LAST data point treated as a
/// free candidate y: the posterior mean is intercept + slope * y and the
/// posterior variance K(x,x) - k^T (K + sigma^2 I)^{-1} k does not depend
/// on y. With the linear kernel and sigma^2 = gamma this reproduces the
/// ridge augmented leave-one-out prediction.
inline GpPosteriorLinear gp_posterior_linear(const Dataset& data,
                                             const FeatureVector& x,
                                             const GpConfig& config) {
  data.validate();
  const Eigen::Index n = data.size();
  if (n < 1) throw std::invalid_argument("gp_posterior_linear: empty dataset");
  if (!config.kernel) {
    throw std::invalid_argument("gp_posterior_linear: kernel not set");
  }
  if (config.noise_variance < 0) {
    throw std::invalid_argument("gp_posterior_linear: negative noise variance");
  }
  if (x.size() != data.dim()) {
    throw std::invalid_argument("gp_posterior_linear: dimension mismatch");
  }

  Eigen::MatrixXd gram(n, n);
  Eigen::VectorXd kx(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const FeatureVector xi = data.inputs.row(i);
    kx[i] = config.kernel(x, xi);
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double kij = config.kernel(xi, FeatureVector(data.inputs.row(j)));
      gram(i, j) = kij;
      gram(j, i) = kij;
    }
    gram(i, i) += config.noise_variance;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(
        "gp_posterior_linear: kernel Gram matrix plus noise is not positive "
        "definite");
  }
  const Eigen::VectorXd w = llt.solve(kx);

  GpPosteriorLinear out;
  out.slope = w[n - 1];
  out.intercept = n > 1 ? w.head(n - 1).dot(data.labels.head(n - 1)) : 0.0;
  out.variance = config.kernel(x, x) - kx.dot(w);
  return out;
}

}  // namespace fcs
