#pragma once

// Split conformal intervals under standard covariate shift, and the
// randomized staircase confidence set with exact coverage.
//
// After a data split, the trained model is fixed, the calibration and test
// data are independent, and only the input distributions differ. Scores
// take the form |y - mu(x)| / u(x); the weighted quantile of the
// calibration scores (plus a test-point mass at +infinity) then yields a
// symmetric interval around mu(x). The staircase construction randomizes
// the inclusion of whole inter-score bands instead of individual labels,
// needing only a sort of the m calibration scores plus O(m) work.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fcs/conformal.hpp"
#include "fcs/dataset.hpp"
#include "fcs/weighted_dist.hpp"

namespace fcs {

/// Calibration data plus the fixed model and uncertainty handles. The
/// uncertainty u must be strictly positive wherever it is evaluated;
/// u == 1 recovers the plain residual score.
struct CalibrationSet {
  Eigen::MatrixXd inputs;  // m x p
  Eigen::VectorXd labels;  // m
  std::function<double(const FeatureVector&)> model;        // mu
  std::function<double(const FeatureVector&)> uncertainty =  // u
      [](const FeatureVector&) { return 1.0; };

  Eigen::Index size() const { return inputs.rows(); }

  void validate() const {
    if (inputs.rows() != labels.size() || inputs.rows() < 1) {
      throw std::invalid_argument("CalibrationSet: need m >= 1 labeled points");
    }
    if (!model) throw std::invalid_argument("CalibrationSet: model not set");
    if (!uncertainty) {
      throw std::invalid_argument("CalibrationSet: uncertainty not set");
    }
  }
};

/// Closed real interval; endpoints may be +/-infinity.
struct RealInterval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

/// Disjoint union of closed intervals, sorted by position.
struct StaircaseSet {
  std::vector<RealInterval> intervals;

  bool empty() const { return intervals.empty(); }

  bool contains(double y) const {
    for (const auto& iv : intervals) {
      if (y >= iv.lo && y <= iv.hi) return true;
    }
    return false;
  }

  /// Smallest element; +infinity when empty.
  double min_value() const {
    return empty() ? std::numeric_limits<double>::infinity()
                   : intervals.front().lo;
  }
};

/// Total length; +infinity when any interval is unbounded; 0 when empty.
inline double set_size(const StaircaseSet& s) {
  double total = 0;
  for (const auto& iv : s.intervals) {
    if (std::isinf(iv.lo) || std::isinf(iv.hi)) {
      return std::numeric_limits<double>::infinity();
    }
    total += iv.length();
  }
  return total;
}

namespace detail {

/// Sorts, deduplicates and merges touching closed intervals.
inline StaircaseSet merge_intervals(std::vector<RealInterval> parts) {
  std::sort(parts.begin(), parts.end(),
            [](const RealInterval& a, const RealInterval& b) {
              return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
            });
  StaircaseSet out;
  for (const auto& iv : parts) {
    if (!out.intervals.empty() && iv.lo <= out.intervals.back().hi) {
      out.intervals.back().hi = std::max(out.intervals.back().hi, iv.hi);
    } else {
      out.intervals.push_back(iv);
    }
  }
  return out;
}

struct SplitScores {
  Eigen::VectorXd scores;   // m calibration scores
  Eigen::VectorXd weights;  // m + 1 normalized weights, test point last
  double mu = 0.0;          // mu(x_test)
  double u = 0.0;           // u(x_test)
};

inline SplitScores split_scores(const CalibrationSet& calib,
                                const FeatureVector& x_test,
                                const FixedLikelihoodRatioFn& lr) {
  calib.validate();
  const Eigen::Index m = calib.size();
  SplitScores out;
  out.scores.resize(m);
  Eigen::VectorXd ratios(m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const FeatureVector xi = calib.inputs.row(i);
    const double ui = calib.uncertainty(xi);
    if (!(ui > 0)) {
      throw std::invalid_argument(
          "split conformal: uncertainty u(x) must be strictly positive");
    }
    out.scores[i] = std::abs(calib.labels[i] - calib.model(xi)) / ui;
    ratios[i] = lr(xi);
  }
  ratios[m] = lr(x_test);
  out.weights = normalized_weights(ratios);
  out.mu = calib.model(x_test);
  out.u = calib.uncertainty(x_test);
  if (!(out.u > 0)) {
    throw std::invalid_argument(
        "split conformal: uncertainty u(x_test) must be strictly positive");
  }
  return out;
}

}  // namespace detail

/// Split conformal interval mu(x) +/- q u(x), where q is the weighted
/// (1 - alpha)-quantile of the calibration scores with the test point's
/// mass at +infinity. The whole line when q is infinite.
inline StaircaseSet split_conformal_interval(const CalibrationSet& calib,
                                             const FeatureVector& x_test,
                                             double alpha,
                                             const FixedLikelihoodRatioFn& lr) {
  detail::check_alpha(alpha);
  const auto sc = detail::split_scores(calib, x_test, lr);
  const Eigen::Index m = sc.scores.size();
  Eigen::VectorXd support(m + 1);
  support.head(m) = sc.scores;
  support[m] = std::numeric_limits<double>::infinity();
  WeightedDiscreteDistd dist(support, sc.weights);
  const double q = dist.quantile(1.0 - alpha);
  StaircaseSet out;
  if (std::isinf(q)) {
    out.intervals.push_back({-std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::infinity()});
  } else {
    out.intervals.push_back({sc.mu - q * sc.u, sc.mu + q * sc.u});
  }
  return out;
}

/// Randomized staircase confidence set with exact coverage.
///
/// Walks the inter-score bands in sorted order. A band is deterministically
/// included while the cumulative calibration weight plus the test weight
/// stays below 1 - alpha (the candidate score is then at most the quantile
/// lower bound); the bands at the quantile level are included by a
/// Bernoulli draw with the randomized-quantile probability (one draw per
/// band); everything above the quantile is excluded. The unbounded tail
/// band can contribute two infinite intervals. `u01` supplies uniform
/// draws in [0, 1).
template <typename Uniform>
StaircaseSet randomized_staircase_set(const CalibrationSet& calib,
                                      const FeatureVector& x_test, double alpha,
                                      const FixedLikelihoodRatioFn& lr,
                                      Uniform&& u01) {
  detail::check_alpha(alpha);
  const auto sc = detail::split_scores(calib, x_test, lr);
  const Eigen::Index m = sc.scores.size();
  const double beta = 1.0 - alpha;
  const double w_test = sc.weights[m];

  // Calibration scores in sorted order with their weights.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return sc.scores[a] < sc.scores[b];
  });

  // cum_leq[i] = total calibration weight on scores <= i-th sorted score;
  // duplicate values share the cumulative of their last occurrence.
  std::vector<double> sorted_scores(static_cast<std::size_t>(m));
  std::vector<double> cum_leq(static_cast<std::size_t>(m));
  double acc = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    sorted_scores[k] = sc.scores[order[k]];
    acc += sc.weights[order[k]];
    cum_leq[k] = acc;
  }
  for (std::size_t k = order.size(); k-- > 1;) {
    if (sorted_scores[k - 1] == sorted_scores[k]) cum_leq[k - 1] = cum_leq[k];
  }
  const double total_calib_weight = acc;

  // Band i spans scores in [S_(i), S_(i+1)], with S_(0) = 0 as a dummy so
  // the first band covers [0, S_(1)]; scores equal to zero (probability
  // zero for continuous labels) fold into the first band's cumulative.
  auto cum_at_band = [&](Eigen::Index i) {
    if (i == 0) {
      double c = 0;
      for (std::size_t k = 0; k < sorted_scores.size(); ++k) {
        if (sorted_scores[k] <= 0.0) c = cum_leq[k];
      }
      return c;
    }
    return cum_leq[static_cast<std::size_t>(i - 1)];
  };

  std::vector<char> include(static_cast<std::size_t>(m) + 1, 0);
  bool lower_bound_is_set = false;
  double lf = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double cum = cum_at_band(i);
    if (cum + w_test < beta) {
      include[static_cast<std::size_t>(i)] = 1;
    } else if (cum < beta) {
      if (!lower_bound_is_set) {
        lower_bound_is_set = true;
        lf = cum;
      }
      const double f = (cum + w_test - beta) / (cum + w_test - lf);
      include[static_cast<std::size_t>(i)] =
          static_cast<double>(u01()) < (1.0 - f);
    }
  }
  bool tail = false;
  if (total_calib_weight < beta) {
    if (!lower_bound_is_set) lf = total_calib_weight;
    const double f = (1.0 - beta) / (1.0 - lf);
    tail = static_cast<double>(u01()) < (1.0 - f);
  }

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<RealInterval> parts;
  auto band_edge = [&](Eigen::Index i) {
    return i == 0 ? 0.0 : sorted_scores[static_cast<std::size_t>(i - 1)];
  };
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!include[static_cast<std::size_t>(i)]) continue;
    const double s_lo = band_edge(i);
    const double s_hi = band_edge(i + 1);
    parts.push_back({sc.mu + s_lo * sc.u, sc.mu + s_hi * sc.u});
    parts.push_back({sc.mu - s_hi * sc.u, sc.mu - s_lo * sc.u});
  }
  if (tail) {
    const double s_m = m > 0 ? sorted_scores.back() : 0.0;
    parts.push_back({sc.mu + s_m * sc.u, inf});
    parts.push_back({-inf, sc.mu - s_m * sc.u});
  }
  return detail::merge_intervals(std::move(parts));
}

}  // namespace fcs
