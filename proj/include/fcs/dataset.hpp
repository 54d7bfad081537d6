#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace fcs {

/// A feature vector is a fixed-dimension column of reals.
using FeatureVector = Eigen::VectorXd;

/// Labeled data: one input per row, one label per entry. Treated as a
/// multiset throughout -- every consumer must be invariant to row order.
struct Dataset {
  Eigen::MatrixXd inputs;  // n x p
  Eigen::VectorXd labels;  // n

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }

  void validate() const {
    if (inputs.rows() != labels.size()) {
      throw std::invalid_argument("Dataset: inputs/labels length mismatch");
    }
    if (!inputs.allFinite() || !labels.allFinite()) {
      throw std::invalid_argument("Dataset: non-finite entries");
    }
  }

  /// The multiset with point i removed and (x, y) appended last.
  Dataset leave_one_out_plus(Eigen::Index i, const FeatureVector& x,
                             double y) const {
    const Eigen::Index n = size();
    Dataset out;
    out.inputs.resize(n, dim());
    out.labels.resize(n);
    Eigen::Index r = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      out.inputs.row(r) = inputs.row(j);
      out.labels[r] = labels[j];
      ++r;
    }
    out.inputs.row(r) = x.transpose();
    out.labels[r] = y;
    return out;
  }
};

}  // namespace fcs
