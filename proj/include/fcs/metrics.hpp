#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcs/grid_set.hpp"
#include "fcs/trials.hpp"

namespace fcs {

/// Fraction of trials whose confidence set covered the true label (by the
/// half-spacing rule for grid sets, by membership for interval sets).
inline double empirical_coverage(const std::vector<TrialRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("empirical_coverage: no records");
  }
  std::size_t covered = 0;
  for (const auto& r : records) covered += r.covered;
  return static_cast<double>(covered) / static_cast<double>(records.size());
}

/// 1 - |a n b| / |a u b| over included grid values; 0 when both sets are
/// empty. The grids must be identical.
inline double jaccard_distance(const GridConfidenceSet& a,
                               const GridConfidenceSet& b) {
  if (!(a.grid == b.grid)) {
    throw std::invalid_argument("jaccard_distance: mismatched grids");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t k = 0; k < a.included.size(); ++k) {
    const bool in_a = a.included[k] != 0;
    const bool in_b = b.included[k] != 0;
    inter += (in_a && in_b);
    uni += (in_a || in_b);
  }
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

/// Fraction of trials whose set minimum exceeds the reference fitness;
/// empty sets never exceed.
inline double exceed_reference_frequency(const std::vector<TrialRecord>& records,
                                         double reference_fitness) {
  if (records.empty()) {
    throw std::invalid_argument("exceed_reference_frequency: no records");
  }
  std::size_t count = 0;
  for (const auto& r : records) {
    const double lo = r.set_minimum();
    if (std::isfinite(lo) && lo > reference_fitness) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(records.size());
}

/// Per-(n, lambda, method) aggregate of a trial batch.
struct SweepSummary {
  std::string method;
  int n = 0;
  double lambda = 0.0;
  int trials = 0;
  double coverage = 0.0;
  double mean_width = 0.0;    // over finite widths/sizes
  double median_width = 0.0;
  double min_width = 0.0;
  double max_width = 0.0;
  double frac_infinite = 0.0;
  double mean_size_finite = 0.0;  // alias of mean_width, kept explicit
  double mean_predicted = 0.0;
  double exceed_reference_freq =
      std::numeric_limits<double>::quiet_NaN();  // NaN when no reference
  double mean_width_frac_range = 0.0;  // mean width / landscape fitness range
};

inline SweepSummary summarize(const std::vector<TrialRecord>& records,
                              Method method, int n, double lambda,
                              double fitness_range,
                              std::optional<double> reference = std::nullopt) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  SweepSummary s;
  s.method = to_string(method);
  s.n = n;
  s.lambda = lambda;
  s.trials = static_cast<int>(records.size());
  s.coverage = empirical_coverage(records);

  std::vector<double> finite;
  finite.reserve(records.size());
  double pred_sum = 0;
  std::size_t infinite = 0;
  for (const auto& r : records) {
    pred_sum += r.predicted;
    if (std::isinf(r.width_or_size)) {
      ++infinite;
    } else {
      finite.push_back(r.width_or_size);
    }
  }
  s.mean_predicted = pred_sum / static_cast<double>(records.size());
  s.frac_infinite =
      static_cast<double>(infinite) / static_cast<double>(records.size());
  if (!finite.empty()) {
    std::sort(finite.begin(), finite.end());
    double sum = 0;
    for (double w : finite) sum += w;
    s.mean_width = sum / static_cast<double>(finite.size());
    s.median_width = finite[finite.size() / 2];
    s.min_width = finite.front();
    s.max_width = finite.back();
  }
  s.mean_size_finite = s.mean_width;
  s.mean_width_frac_range =
      fitness_range > 0 ? s.mean_width / fitness_range : 0.0;
  if (reference) s.exceed_reference_freq =
      exceed_reference_frequency(records, *reference);
  return s;
}

/// Rows of the width-versus-predicted-fitness trade-off, sorted by lambda.
/// All summaries must share n and method.
inline std::vector<SweepSummary> tradeoff_curve(
    std::vector<SweepSummary> summaries) {
  for (const auto& s : summaries) {
    if (s.n != summaries.front().n || s.method != summaries.front().method) {
      throw std::invalid_argument(
          "tradeoff_curve: summaries must share n and method");
    }
  }
  std::sort(summaries.begin(), summaries.end(),
            [](const SweepSummary& a, const SweepSummary& b) {
              return a.lambda < b.lambda;
            });
  return summaries;
}

}  // namespace fcs
