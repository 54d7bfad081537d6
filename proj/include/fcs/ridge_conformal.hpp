#pragma once

// Efficient full conformal sets for ridge regression with a Boltzmann
// test-input distribution over an enumerable landscape.
//
// The augmented leave-one-out identity makes every refit prediction linear
// in the candidate label, so scores and likelihood ratios for all grid
// candidates follow from n + 1 ridge fits:
//
//   scores:      S_i(y) = |Y_i - (a_i + b_i y)|,   S_{n+1}(y) = |y - a_{n+1}|
//   numerators:  exp(lambda (a_i + b_i y)),        exp(lambda a_{n+1})
//   normalizers: sum_x exp(lambda (C_i + y A_i)^T phi(x)), likewise for the
//                full-data fit
//
// with the normalizers summed exactly over the whole landscape. Everything
// is carried in log space; weights come out of a softmax per candidate.

#include <Eigen/Dense>
#include <cmath>

#include "fcs/conformal.hpp"
#include "fcs/design.hpp"
#include "fcs/grid_set.hpp"
#include "fcs/landscape.hpp"
#include "fcs/ridge.hpp"
#include "fcs/weighted_dist.hpp"

namespace fcs {

/// Scores and log likelihood ratios for every training/test point and grid
/// candidate, produced by n + 1 ridge fits plus one tensor contraction
/// against the landscape feature matrix.
struct RidgeFcsComputation {
  CandidateGrid grid;
  Eigen::MatrixXd scores;      // (n+1) x m
  Eigen::MatrixXd log_ratios;  // (n+1) x m, log v(.; augmented multiset)
  Eigen::VectorXd scs_log_ratios;  // n+1, log v against the full-data model
  double predicted = 0.0;          // full-data prediction at x_test
  AugmentedLooSystem system;

  Eigen::Index points() const { return scores.rows(); }

  Eigen::VectorXd weights(Eigen::Index k) const {
    return softmax(log_ratios.col(k));
  }
  Eigen::VectorXd scs_weights() const { return softmax(scs_log_ratios); }

  static Eigen::VectorXd softmax(const Eigen::VectorXd& logs) {
    Eigen::VectorXd w = (logs.array() - logs.maxCoeff()).exp();
    return w / w.sum();
  }
};

namespace detail {

inline double log_sum_exp(const Eigen::ArrayXd& a) {
  const double mx = a.maxCoeff();
  return mx + std::log((a - mx).exp().sum());
}

}  // namespace detail

inline RidgeFcsComputation ridge_fcs_computation(const Dataset& train,
                                                 const FeatureVector& x_test,
                                                 const CandidateGrid& grid,
                                                 const RidgeConfig& ridge,
                                                 const BoltzmannDesign& design,
                                                 const Landscape& land) {
  if (design.lambda < 0) {
    throw std::invalid_argument("BoltzmannDesign: lambda must be >= 0");
  }
  if (train.dim() != land.feature_dim()) {
    throw std::invalid_argument(
        "ridge_fcs_computation: training features do not match the landscape "
        "featurization");
  }
  const Eigen::Index n = train.size();
  const Eigen::Index m = grid.count();
  const double lambda = design.lambda;
  const double log_px = land.train_log_density();

  RidgeFcsComputation comp;
  comp.grid = grid;
  comp.system = augmented_loo_system(train, x_test, ridge);
  comp.predicted = comp.system.test_intercept;
  comp.scores.resize(n + 1, m);
  comp.log_ratios.resize(n + 1, m);
  comp.scs_log_ratios.resize(n + 1);

  for (Eigen::Index k = 0; k < m; ++k) {
    const double y = grid.value(k);
    comp.scores.col(k).head(n) =
        (train.labels - (comp.system.intercepts + y * comp.system.slopes))
            .cwiseAbs();
    comp.scores(n, k) = std::abs(y - comp.system.test_intercept);
  }

  if (lambda == 0.0) {
    // Uniform test distribution: every likelihood ratio is exactly one.
    comp.log_ratios.setZero();
    comp.scs_log_ratios.setZero();
    return comp;
  }

  // Landscape-wide predictions of each augmented model, split into the
  // label-independent part and the per-unit-of-y part.
  const Eigen::MatrixXd base = land.features * comp.system.params;         // |X| x n
  const Eigen::MatrixXd slope = land.features * comp.system.tail_columns;  // |X| x n
  const Eigen::VectorXd full = land.features * comp.system.full_coefficients;

  const double log_z_full = detail::log_sum_exp(lambda * full.array());
  const double log_v_test =
      lambda * comp.system.test_intercept - log_z_full - log_px;

  Eigen::ArrayXd work(land.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) {
      const double y = grid.value(k);
      work = lambda * (base.col(i).array() + y * slope.col(i).array());
      comp.log_ratios(i, k) =
          lambda * (comp.system.intercepts[i] + y * comp.system.slopes[i]) -
          detail::log_sum_exp(work) - log_px;
    }
  }
  comp.log_ratios.row(n).setConstant(log_v_test);

  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu_full_i =
        comp.system.full_coefficients.dot(train.inputs.row(i));
    comp.scs_log_ratios[i] = lambda * mu_full_i - log_z_full - log_px;
  }
  comp.scs_log_ratios[n] = log_v_test;
  return comp;
}

/// Deterministic FCS set from a precomputed table.
inline GridConfidenceSet fcs_set(const RidgeFcsComputation& comp,
                                 double alpha) {
  detail::check_alpha(alpha);
  GridConfidenceSet set(comp.grid);
  const Eigen::Index last = comp.points() - 1;
  for (Eigen::Index k = 0; k < comp.grid.count(); ++k) {
    WeightedDiscreteDistd dist(comp.scores.col(k), comp.weights(k));
    set.included[static_cast<std::size_t>(k)] =
        comp.scores(last, k) <= dist.quantile(1.0 - alpha);
  }
  return set;
}

/// Randomized FCS set: an independent randomized quantile per candidate.
template <typename Uniform>
GridConfidenceSet fcs_set_randomized(const RidgeFcsComputation& comp,
                                     double alpha, Uniform&& u01) {
  detail::check_alpha(alpha);
  GridConfidenceSet set(comp.grid);
  const Eigen::Index last = comp.points() - 1;
  for (Eigen::Index k = 0; k < comp.grid.count(); ++k) {
    WeightedDiscreteDistd dist(comp.scores.col(k), comp.weights(k));
    set.included[static_cast<std::size_t>(k)] =
        comp.scores(last, k) <= dist.randomized_quantile(1.0 - alpha, u01);
  }
  return set;
}

/// Standard-covariate-shift baseline on the same scores, with the weights
/// held fixed across candidates.
inline GridConfidenceSet scs_set(const RidgeFcsComputation& comp,
                                 double alpha) {
  detail::check_alpha(alpha);
  GridConfidenceSet set(comp.grid);
  const Eigen::Index last = comp.points() - 1;
  const Eigen::VectorXd w = comp.scs_weights();
  for (Eigen::Index k = 0; k < comp.grid.count(); ++k) {
    WeightedDiscreteDistd dist(comp.scores.col(k), w);
    set.included[static_cast<std::size_t>(k)] =
        comp.scores(last, k) <= dist.quantile(1.0 - alpha);
  }
  return set;
}

inline GridConfidenceSet full_conformal_set_ridge(const Dataset& train,
                                                  const FeatureVector& x_test,
                                                  const CandidateGrid& grid,
                                                  double alpha,
                                                  const RidgeConfig& ridge,
                                                  const BoltzmannDesign& design,
                                                  const Landscape& land) {
  return fcs_set(ridge_fcs_computation(train, x_test, grid, ridge, design, land),
                 alpha);
}

template <typename Uniform>
GridConfidenceSet full_conformal_set_ridge_randomized(
    const Dataset& train, const FeatureVector& x_test,
    const CandidateGrid& grid, double alpha, const RidgeConfig& ridge,
    const BoltzmannDesign& design, const Landscape& land, Uniform&& u01) {
  return fcs_set_randomized(
      ridge_fcs_computation(train, x_test, grid, ridge, design, land), alpha,
      std::forward<Uniform>(u01));
}

inline GridConfidenceSet scs_full_conformal_set_ridge(
    const Dataset& train, const FeatureVector& x_test,
    const CandidateGrid& grid, double alpha, const RidgeConfig& ridge,
    const BoltzmannDesign& design, const Landscape& land) {
  return scs_set(ridge_fcs_computation(train, x_test, grid, ridge, design, land),
                 alpha);
}

}  // namespace fcs
