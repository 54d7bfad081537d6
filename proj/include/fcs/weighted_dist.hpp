#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fcs {

/// A finite discrete distribution: probability masses at real support
/// points. Support values may repeat; all cumulative quantities treat
/// equal values mass-additively. Support points may be +/-infinity
/// (a mass at +infinity is how the split-conformal quantile handles the
/// unbounded tail); NaN is rejected.
///
/// Masses are renormalized on construction, so downstream code can pass
/// raw nonnegative weights (e.g. likelihood ratios) directly.
///
/// Immutable after construction; all queries are const and thread-safe.
template <typename Scalar = double>
class WeightedDiscreteDist {
 public:
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Index = Eigen::Index;

  static constexpr Scalar neg_infinity() {
    return -std::numeric_limits<Scalar>::infinity();
  }

  WeightedDiscreteDist(const Eigen::Ref<const VectorX>& support,
                       const Eigen::Ref<const VectorX>& masses)
      : support_(support), masses_(masses) {
    if (support_.size() != masses_.size() || support_.size() < 1) {
      throw std::invalid_argument(
          "WeightedDiscreteDist: support and masses must have equal length "
          ">= 1");
    }
    Scalar total = 0;
    for (Index i = 0; i < masses_.size(); ++i) {
      if (!(masses_[i] >= Scalar(0)) || !std::isfinite(masses_[i])) {
        throw std::invalid_argument(
            "WeightedDiscreteDist: masses must be finite and nonnegative");
      }
      if (std::isnan(support_[i])) {
        throw std::invalid_argument("WeightedDiscreteDist: NaN support point");
      }
      total += masses_[i];
    }
    if (!(total > Scalar(0)) || !std::isfinite(total)) {
      throw std::invalid_argument(
          "WeightedDiscreteDist: total mass must be positive and finite");
    }
    masses_ /= total;

    order_.resize(static_cast<std::size_t>(support_.size()));
    std::iota(order_.begin(), order_.end(), Index(0));
    std::stable_sort(order_.begin(), order_.end(),
                     [&](Index a, Index b) { return support_[a] < support_[b]; });
    cum_.resize(support_.size());
    Scalar acc = 0, carry = 0;  // compensated summation
    for (Index k = 0; k < support_.size(); ++k) {
      const Scalar term = masses_[order_[static_cast<std::size_t>(k)]] - carry;
      const Scalar next = acc + term;
      carry = (next - acc) - term;
      acc = next;
      cum_[k] = acc;
    }
    cum_[support_.size() - 1] = Scalar(1);  // pin the last cumulative exactly
  }

  Index size() const { return support_.size(); }
  const VectorX& support() const { return support_; }
  const VectorX& masses() const { return masses_; }

  /// F(s) = total mass on support points <= s.
  Scalar cdf(Scalar s) const {
    Index last = -1;  // last sorted index with value <= s
    Index lo = 0, hi = size();
    while (lo < hi) {
      Index mid = (lo + hi) / 2;
      if (sorted_value(mid) <= s) {
        last = mid;
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return last < 0 ? Scalar(0) : cum_[last];
  }

  /// inf{ s in support : F(s) >= beta }. Always a support point.
  Scalar quantile(Scalar beta) const {
    check_beta(beta);
    return sorted_value(quantile_index(beta));
  }

  /// inf{ s : F(s) < beta and F(s) + mass_at(quantile) >= beta }: the
  /// smallest support point strictly below the beta-quantile whose CDF
  /// still reaches beta once the quantile's own mass is added back, or
  /// -infinity when no support point qualifies.
  Scalar quantile_lower_bound(Scalar beta) const {
    check_beta(beta);
    const Index qi = quantile_index(beta);
    const Scalar q = sorted_value(qi);
    const Scalar mass_at_q = run_end_cum(qi) - run_begin_cum(qi);
    // Scan distinct values below the quantile in increasing order.
    Index k = 0;
    while (k < size() && sorted_value(k) < q) {
      const Index end = run_end(k);
      const Scalar f = cum_[end];
      if (!reaches(f, beta) && reaches(f + mass_at_q, beta)) {
        return sorted_value(k);
      }
      k = end + 1;
    }
    return neg_infinity();
  }

  /// Probability that the randomized beta-quantile takes the lower-bound
  /// branch: (QF - beta) / (QF - LF). Zero when QF == beta.
  Scalar randomized_lb_probability(Scalar beta) const {
    check_beta(beta);
    const Index qi = quantile_index(beta);
    const Scalar qf = run_end_cum(qi);
    const Scalar lb = quantile_lower_bound(beta);
    const Scalar lf = std::isinf(lb) ? Scalar(0) : cdf(lb);
    if (!(qf - lf > Scalar(0))) return Scalar(0);
    return std::max(Scalar(0), (qf - beta) / (qf - lf));
  }

  /// Randomized beta-quantile: the lower bound with probability
  /// (QF - beta)/(QF - LF), the quantile otherwise. `u01` is a callable
  /// producing a uniform draw in [0, 1); passing a constant 1.0 forces the
  /// quantile branch, 0.0 forces the lower-bound branch whenever its
  /// probability is positive.
  template <typename Uniform>
  Scalar randomized_quantile(Scalar beta, Uniform&& u01) const {
    const Scalar p = randomized_lb_probability(beta);
    if (static_cast<Scalar>(u01()) < p) return quantile_lower_bound(beta);
    return quantile(beta);
  }

 private:
  // Cumulative masses and beta both live in [0, 1]; a cumulative within a
  // few ulps of beta is a tie in real arithmetic (e.g. nine masses of 1/10
  // accumulate just below 0.9), so "reaches" allows a 1e-12 slack. This
  // shifts the effective quantile level by at most 1e-12.
  static constexpr Scalar kTieTol = Scalar(1e-12);

  static bool reaches(Scalar cum, Scalar beta) {
    return cum >= beta - kTieTol;
  }

  static void check_beta(Scalar beta) {
    if (!(beta > Scalar(0)) || !(beta < Scalar(1))) {
      throw std::domain_error("quantile level must lie in (0, 1)");
    }
  }

  Scalar sorted_value(Index k) const {
    return support_[order_[static_cast<std::size_t>(k)]];
  }

  /// Smallest sorted index whose cumulative mass reaches beta.
  Index quantile_index(Scalar beta) const {
    Index lo = 0, hi = size() - 1;
    while (lo < hi) {
      Index mid = (lo + hi) / 2;
      if (reaches(cum_[mid], beta)) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo;
  }

  /// Last sorted index of the duplicate run containing k.
  Index run_end(Index k) const {
    const Scalar v = sorted_value(k);
    while (k + 1 < size() && sorted_value(k + 1) == v) ++k;
    return k;
  }

  Scalar run_end_cum(Index k) const { return cum_[run_end(k)]; }

  Scalar run_begin_cum(Index k) const {
    const Scalar v = sorted_value(k);
    while (k > 0 && sorted_value(k - 1) == v) --k;
    return k == 0 ? Scalar(0) : cum_[k - 1];
  }

  VectorX support_;
  VectorX masses_;
  std::vector<Index> order_;  // indices sorted by support value
  VectorX cum_;               // cumulative masses in sorted order
};

using WeightedDiscreteDistd = WeightedDiscreteDist<double>;

template <typename Scalar>
Scalar quantile(const WeightedDiscreteDist<Scalar>& dist, Scalar beta) {
  return dist.quantile(beta);
}

template <typename Scalar>
Scalar quantile_lower_bound(const WeightedDiscreteDist<Scalar>& dist,
                            Scalar beta) {
  return dist.quantile_lower_bound(beta);
}

template <typename Scalar, typename Uniform>
Scalar randomized_quantile(const WeightedDiscreteDist<Scalar>& dist,
                           Scalar beta, Uniform&& u01) {
  return dist.randomized_quantile(beta, std::forward<Uniform>(u01));
}

template <typename Scalar>
Scalar cdf_at(const WeightedDiscreteDist<Scalar>& dist, Scalar s) {
  return dist.cdf(s);
}

}  // namespace fcs
