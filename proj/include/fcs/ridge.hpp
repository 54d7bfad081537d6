#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <stdexcept>

#include "fcs/dataset.hpp"

namespace fcs {

struct RidgeConfig {
  double gamma = 1.0;  // regularization strength, > 0
};

struct RidgeModel {
  Eigen::VectorXd coefficients;
};

namespace detail {

/// LDLT factorization of X^T X + gamma I. The factorization is the "model
/// fit"; solves against it produce coefficient vectors without ever forming
/// an explicit inverse.
inline Eigen::LDLT<Eigen::MatrixXd> ridge_gram_ldlt(const Eigen::MatrixXd& x,
                                                    double gamma) {
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  gram.diagonal().fill(gamma);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  return Eigen::LDLT<Eigen::MatrixXd>(gram.selfadjointView<Eigen::Lower>());
}

}  // namespace detail

/// Solves (X^T X + gamma I) beta = X^T y.
inline RidgeModel fit_ridge(const Dataset& data, const RidgeConfig& config) {
  data.validate();
  if (data.size() < 1) throw std::invalid_argument("fit_ridge: empty dataset");
  if (!(config.gamma > 0)) {
    throw std::invalid_argument("fit_ridge: gamma must be positive");
  }
  auto ldlt = detail::ridge_gram_ldlt(data.inputs, config.gamma);
  return RidgeModel{ldlt.solve(data.inputs.transpose() * data.labels)};
}

inline double predict(const RidgeModel& model, const FeatureVector& x) {
  if (model.coefficients.size() != x.size()) {
    throw std::invalid_argument("predict: dimension mismatch");
  }
  return model.coefficients.dot(x);
}

/// Closed-form leave-one-out refits, linear in the candidate label.
///
/// For each training index i, let the augmented design X_aug(i) stack the
/// other n-1 training inputs with x_test as the last row. The ridge refit
/// on that design, evaluated at X_i, equals intercepts[i] + slopes[i] * y
/// for every candidate label y. params.col(i) and tail_columns.col(i) hold
/// the corresponding coefficient decomposition: the refit coefficient
/// vector is params.col(i) + y * tail_columns.col(i).
struct AugmentedLooSystem {
  Eigen::VectorXd intercepts;      // a_i, n entries
  Eigen::VectorXd slopes;          // b_i, n entries
  double test_intercept = 0.0;     // full-data prediction at x_test
  Eigen::MatrixXd params;          // p x n, label-independent coefficients
  Eigen::MatrixXd tail_columns;    // p x n, coefficient slopes in y
  Eigen::VectorXd full_coefficients;  // full-data ridge fit
};

/// Builds the system with n + 1 factorizations and O(n p) post-processing.
inline AugmentedLooSystem augmented_loo_system(const Dataset& data,
                                               const FeatureVector& x_test,
                                               const RidgeConfig& config) {
  data.validate();
  const Eigen::Index n = data.size();
  const Eigen::Index p = data.dim();
  if (n < 2) throw std::invalid_argument("augmented_loo_system: need n >= 2");
  if (x_test.size() != p) {
    throw std::invalid_argument("augmented_loo_system: dimension mismatch");
  }
  if (!(config.gamma > 0)) {
    throw std::invalid_argument("augmented_loo_system: gamma must be positive");
  }

  AugmentedLooSystem sys;
  sys.intercepts.resize(n);
  sys.slopes.resize(n);
  sys.params.resize(p, n);
  sys.tail_columns.resize(p, n);

  // Gram and right-hand side over the full training data; each leave-one-out
  // design differs by two rank-one terms (drop X_i, append x_test).
  Eigen::MatrixXd gram_full = Eigen::MatrixXd::Zero(p, p);
  gram_full.diagonal().fill(config.gamma);
  gram_full.selfadjointView<Eigen::Lower>().rankUpdate(data.inputs.transpose());
  const Eigen::VectorXd rhs_full = data.inputs.transpose() * data.labels;

  Eigen::MatrixXd gram_i(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    gram_i = gram_full;
    gram_i.selfadjointView<Eigen::Lower>().rankUpdate(
        data.inputs.row(i).transpose(), -1.0);
    gram_i.selfadjointView<Eigen::Lower>().rankUpdate(x_test, 1.0);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram_i.selfadjointView<Eigen::Lower>());

    sys.params.col(i) =
        ldlt.solve(rhs_full - data.labels[i] * data.inputs.row(i).transpose());
    sys.tail_columns.col(i) = ldlt.solve(x_test);
    sys.intercepts[i] = sys.params.col(i).dot(data.inputs.row(i));
    sys.slopes[i] = sys.tail_columns.col(i).dot(data.inputs.row(i));
  }

  Eigen::LDLT<Eigen::MatrixXd> full_ldlt(
      gram_full.selfadjointView<Eigen::Lower>());
  sys.full_coefficients = full_ldlt.solve(rhs_full);
  sys.test_intercept = sys.full_coefficients.dot(x_test);
  return sys;
}

}  // namespace fcs
