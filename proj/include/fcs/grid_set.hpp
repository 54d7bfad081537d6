#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fcs {

/// Uniformly spaced grid of candidate labels: lo, lo + spacing, ...,
/// up to hi (hi is included when it lands on the grid, up to a small
/// relative tolerance).
struct CandidateGrid {
  double lo = 0.0;
  double hi = 1.0;
  double spacing = 0.01;

  CandidateGrid() = default;
  CandidateGrid(double lo_, double hi_, double spacing_)
      : lo(lo_), hi(hi_), spacing(spacing_) {
    if (!(lo < hi) || !(spacing > 0)) {
      throw std::invalid_argument(
          "CandidateGrid: need lo < hi and spacing > 0");
    }
  }

  Eigen::Index count() const {
    return static_cast<Eigen::Index>(
               std::floor((hi - lo) / spacing + 1e-9)) + 1;
  }
  double value(Eigen::Index k) const { return lo + static_cast<double>(k) * spacing; }

  /// Default grid for labels in [min, max]: pad by a quarter of the range
  /// on both sides and use one hundred steps across the unpadded range.
  static CandidateGrid for_label_range(double label_min, double label_max) {
    if (!(label_max > label_min)) {
      throw std::invalid_argument("for_label_range: need label_max > label_min");
    }
    const double range = label_max - label_min;
    return CandidateGrid(label_min - 0.25 * range, label_max + 0.25 * range,
                         range / 100.0);
  }

  bool operator==(const CandidateGrid& other) const {
    return lo == other.lo && hi == other.hi && spacing == other.spacing;
  }
};

/// Subset of a candidate grid: one inclusion flag per grid value.
struct GridConfidenceSet {
  CandidateGrid grid;
  std::vector<std::uint8_t> included;

  explicit GridConfidenceSet(const CandidateGrid& g)
      : grid(g), included(static_cast<std::size_t>(g.count()), 0) {}

  Eigen::Index count_included() const {
    Eigen::Index c = 0;
    for (auto f : included) c += (f != 0);
    return c;
  }
  bool empty() const { return count_included() == 0; }

  /// Width in label units: spacing times the number of included values.
  double width() const {
    return grid.spacing * static_cast<double>(count_included());
  }

  /// Smallest included label value; +infinity for the empty set.
  double min_value() const {
    for (std::size_t k = 0; k < included.size(); ++k) {
      if (included[k]) return grid.value(static_cast<Eigen::Index>(k));
    }
    return std::numeric_limits<double>::infinity();
  }

  /// Coverage rule for grid sets: y is covered when it lies within half a
  /// grid spacing of some included value (inclusive; a 1e-9-spacing guard
  /// absorbs roundoff in |y - value| at the exact boundary).
  bool covers(double y) const {
    const double tol = 0.5 * grid.spacing * (1.0 + 1e-9);
    for (std::size_t k = 0; k < included.size(); ++k) {
      if (included[k] &&
          std::abs(y - grid.value(static_cast<Eigen::Index>(k))) <= tol) {
        return true;
      }
    }
    return false;
  }
};

}  // namespace fcs
