#pragma once

// Full conformal confidence sets under feedback covariate shift.
//
// Given training data Z_1..Z_n and a test input, a candidate label y is
// accepted when the score of (x_test, y) does not exceed the (1 - alpha)-
// quantile of the weighted score distribution over all n + 1 points, with
// the i-th weight proportional to the likelihood ratio of X_i under the
// test-input distribution induced by Z_{-i} u {(x_test, y)}. This file
// implements the generic construction (one score / likelihood-ratio
// callback evaluation per point and candidate), its randomized variant
// with exact coverage, and the fixed-weight standard-covariate-shift
// baseline. The efficient ridge-specific path lives in ridge_conformal.hpp.

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fcs/dataset.hpp"
#include "fcs/grid_set.hpp"
#include "fcs/weighted_dist.hpp"

namespace fcs {

/// Score of a point against a reference multiset; must be invariant to the
/// ordering of the multiset.
using ScoreFn =
    std::function<double(const FeatureVector&, double, const Dataset&)>;

/// Likelihood ratio v(x; D) of an input under the test distribution induced
/// by the multiset D, against the training input distribution.
using LikelihoodRatioFn =
    std::function<double(const FeatureVector&, const Dataset&)>;

/// Likelihood ratio against one fixed test distribution (standard covariate
/// shift; no dependence on a multiset).
using FixedLikelihoodRatioFn = std::function<double(const FeatureVector&)>;

/// Raised when every weight is zero, i.e. the candidate configuration has
/// likelihood ratio zero everywhere; coverage requires absolute continuity
/// of the test distribution w.r.t. the training distribution.
class degenerate_weights_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void check_alpha(double alpha) {
  if (!(alpha > 0) || !(alpha < 1)) {
    throw std::domain_error("alpha must lie in (0, 1)");
  }
}

inline Eigen::VectorXd normalized_weights(const Eigen::VectorXd& ratios) {
  const double total = ratios.sum();
  if (!(total > 0) || !std::isfinite(total)) {
    throw degenerate_weights_error(
        "all likelihood ratios are zero (or non-finite); the test "
        "distribution is not absolutely continuous w.r.t. training");
  }
  return ratios / total;
}

/// Per-candidate scores and likelihood ratios from the generic callbacks.
/// Builds each leave-one-out-plus-test multiset once and mutates only its
/// final label slot while scanning the grid.
struct GenericConformalScan {
  Eigen::MatrixXd scores;  // (n+1) x m
  Eigen::MatrixXd ratios;  // (n+1) x m

  GenericConformalScan(const Dataset& train, const FeatureVector& x_test,
                       const CandidateGrid& grid, const ScoreFn& score,
                       const LikelihoodRatioFn& lr) {
    train.validate();
    const Eigen::Index n = train.size();
    if (n < 1) throw std::invalid_argument("full conformal: empty training set");
    const Eigen::Index m = grid.count();
    scores.resize(n + 1, m);
    ratios.resize(n + 1, m);

    const double v_test = lr(x_test, train);
    std::vector<Dataset> augmented;
    augmented.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      augmented.push_back(train.leave_one_out_plus(i, x_test, 0.0));
    }
    for (Eigen::Index k = 0; k < m; ++k) {
      const double y = grid.value(k);
      for (Eigen::Index i = 0; i < n; ++i) {
        Dataset& aug = augmented[static_cast<std::size_t>(i)];
        aug.labels[n - 1] = y;
        scores(i, k) = score(train.inputs.row(i), train.labels[i], aug);
        ratios(i, k) = lr(train.inputs.row(i), aug);
      }
      scores(n, k) = score(x_test, y, train);
      ratios(n, k) = v_test;
    }
  }
};

}  // namespace detail

/// Full conformal confidence set under feedback covariate shift,
/// evaluated over a finite candidate grid.
inline GridConfidenceSet full_conformal_set(const Dataset& train,
                                            const FeatureVector& x_test,
                                            const CandidateGrid& grid,
                                            double alpha, const ScoreFn& score,
                                            const LikelihoodRatioFn& lr) {
  detail::check_alpha(alpha);
  detail::GenericConformalScan scan(train, x_test, grid, score, lr);
  GridConfidenceSet set(grid);
  const Eigen::Index n1 = scan.scores.rows();
  for (Eigen::Index k = 0; k < grid.count(); ++k) {
    const Eigen::VectorXd w = detail::normalized_weights(scan.ratios.col(k));
    WeightedDiscreteDistd dist(scan.scores.col(k), w);
    set.included[static_cast<std::size_t>(k)] =
        scan.scores(n1 - 1, k) <= dist.quantile(1.0 - alpha);
  }
  return set;
}

/// Randomized variant: each candidate label is admitted against an
/// independent randomized (1 - alpha)-quantile, which tightens the
/// guarantee from >= 1 - alpha to exactly 1 - alpha. `u01` supplies one
/// uniform draw per candidate.
template <typename Uniform>
GridConfidenceSet randomized_full_conformal_set(
    const Dataset& train, const FeatureVector& x_test,
    const CandidateGrid& grid, double alpha, const ScoreFn& score,
    const LikelihoodRatioFn& lr, Uniform&& u01) {
  detail::check_alpha(alpha);
  detail::GenericConformalScan scan(train, x_test, grid, score, lr);
  GridConfidenceSet set(grid);
  const Eigen::Index n1 = scan.scores.rows();
  for (Eigen::Index k = 0; k < grid.count(); ++k) {
    const Eigen::VectorXd w = detail::normalized_weights(scan.ratios.col(k));
    WeightedDiscreteDistd dist(scan.scores.col(k), w);
    set.included[static_cast<std::size_t>(k)] =
        scan.scores(n1 - 1, k) <= dist.randomized_quantile(1.0 - alpha, u01);
  }
  return set;
}

/// Full conformal prediction as prescribed for standard covariate shift:
/// the scores are computed exactly as in the FCS set, but the weights use
/// one fixed likelihood ratio, so they do not vary with the candidate
/// label. A comparison heuristic with no coverage guarantee under FCS.
inline GridConfidenceSet scs_full_conformal_set(
    const Dataset& train, const FeatureVector& x_test,
    const CandidateGrid& grid, double alpha, const ScoreFn& score,
    const FixedLikelihoodRatioFn& fixed_lr) {
  detail::check_alpha(alpha);
  train.validate();
  const Eigen::Index n = train.size();
  if (n < 1) throw std::invalid_argument("full conformal: empty training set");

  Eigen::VectorXd ratios(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    ratios[i] = fixed_lr(train.inputs.row(i));
  }
  ratios[n] = fixed_lr(x_test);
  const Eigen::VectorXd w = detail::normalized_weights(ratios);

  std::vector<Dataset> augmented;
  augmented.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    augmented.push_back(train.leave_one_out_plus(i, x_test, 0.0));
  }

  GridConfidenceSet set(grid);
  Eigen::VectorXd s(n + 1);
  for (Eigen::Index k = 0; k < grid.count(); ++k) {
    const double y = grid.value(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      Dataset& aug = augmented[static_cast<std::size_t>(i)];
      aug.labels[n - 1] = y;
      s[i] = score(train.inputs.row(i), train.labels[i], aug);
    }
    s[n] = score(x_test, y, train);
    WeightedDiscreteDistd dist(s, w);
    set.included[static_cast<std::size_t>(k)] =
        s[n] <= dist.quantile(1.0 - alpha);
  }
  return set;
}

}  // namespace fcs
