#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcs/dataset.hpp"
#include "fcs/rng.hpp"

namespace fcs {

/// Enumerable space of signed-bit sequences of a fixed length L, with a
/// ground-truth fitness and a per-sequence measurement-noise sd. Sequence
/// ids are integers in [0, 2^L); bit k of the id is site k, with bit 1
/// mapping to +1 and bit 0 to -1.
///
/// L is capped at 16 so that normalizing constants over the space can
/// always be computed by exact summation.
struct Landscape {
  int length = 0;             // L
  int feature_order = 2;      // interaction order d of the featurization
  Eigen::VectorXd fitness;    // 2^L
  Eigen::VectorXd noise_sd;   // 2^L, >= 0
  Eigen::MatrixXd features;   // 2^L x p interaction features

  Eigen::Index size() const { return fitness.size(); }
  Eigen::Index feature_dim() const { return features.cols(); }

  FeatureVector features_of(Eigen::Index id) const {
    return features.row(id);
  }

  std::pair<double, double> fitness_range() const {
    return {fitness.minCoeff(), fitness.maxCoeff()};
  }

  /// Density of the uniform training input distribution, 1/2^L.
  double train_density() const { return 1.0 / static_cast<double>(size()); }
  double train_log_density() const {
    return -static_cast<double>(length) * std::numbers::ln2;
  }
};

inline constexpr int kMaxLandscapeLength = 16;

namespace detail {

inline void check_length(int length) {
  if (length < 2 || length > kMaxLandscapeLength) {
    throw std::invalid_argument(
        "landscape length must be in [2, 16]; larger spaces are unsupported "
        "(exact normalization only)");
  }
}

/// Bit masks of all site subsets of size 1..order, ordered by size then by
/// lexicographic site positions. This ordering defines the feature layout.
inline std::vector<std::uint32_t> interaction_masks(int length, int order) {
  std::vector<std::uint32_t> masks;
  std::vector<int> idx;
  for (int k = 1; k <= order; ++k) {
    idx.assign(static_cast<std::size_t>(k), 0);
    for (int j = 0; j < k; ++j) idx[static_cast<std::size_t>(j)] = j;
    while (true) {
      std::uint32_t m = 0;
      for (int j : idx) m |= (1u << j);
      masks.push_back(m);
      int j = k - 1;
      while (j >= 0 && idx[static_cast<std::size_t>(j)] == length - k + j) --j;
      if (j < 0) break;
      ++idx[static_cast<std::size_t>(j)];
      for (int t = j + 1; t < k; ++t) {
        idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
      }
    }
  }
  return masks;
}

/// Product of the signed bits of `id` over the sites in `mask`.
inline double signed_product(std::uint32_t id, std::uint32_t mask) {
  return (std::popcount(~id & mask) % 2 == 0) ? 1.0 : -1.0;
}

}  // namespace detail

/// Dimension of the interaction featurization: sum_{k=1..order} C(L, k).
inline Eigen::Index feature_dim(int length, int order) {
  if (order < 1 || order > length) {
    throw std::invalid_argument("feature order must be in [1, L]");
  }
  Eigen::Index total = 0, binom = 1;
  for (int k = 1; k <= order; ++k) {
    binom = binom * (length - k + 1) / k;
    total += binom;
  }
  return total;
}

/// Signed-bit interaction features of one sequence.
inline FeatureVector featurize(std::uint32_t id, int length, int order) {
  if (order < 1 || order > length) {
    throw std::invalid_argument("feature order must be in [1, L]");
  }
  const auto masks = detail::interaction_masks(length, order);
  FeatureVector x(static_cast<Eigen::Index>(masks.size()));
  for (std::size_t j = 0; j < masks.size(); ++j) {
    x[static_cast<Eigen::Index>(j)] = detail::signed_product(id, masks[j]);
  }
  return x;
}

/// Feature matrix for the whole space, one sequence per row.
inline Eigen::MatrixXd interaction_features(int length, int order) {
  detail::check_length(length);
  const auto masks = detail::interaction_masks(length, order);
  const Eigen::Index n = Eigen::Index(1) << length;
  Eigen::MatrixXd phi(n, static_cast<Eigen::Index>(masks.size()));
  for (Eigen::Index id = 0; id < n; ++id) {
    for (std::size_t j = 0; j < masks.size(); ++j) {
      phi(id, static_cast<Eigen::Index>(j)) =
          detail::signed_product(static_cast<std::uint32_t>(id), masks[j]);
    }
  }
  return phi;
}

/// In-place Walsh-Hadamard transform, H[i][j] = (-1)^popcount(i & j),
/// unnormalized and self-inverse up to a factor of n.
inline void fwht(Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  for (Eigen::Index len = 1; len < n; len <<= 1) {
    for (Eigen::Index i = 0; i < n; i += len << 1) {
      for (Eigen::Index j = i; j < i + len; ++j) {
        const double a = v[j];
        const double b = v[j + len];
        v[j] = a + b;
        v[j + len] = a - b;
      }
    }
  }
}

inline Landscape make_landscape(int length, int feature_order,
                                Eigen::VectorXd fitness,
                                Eigen::VectorXd noise_sd) {
  detail::check_length(length);
  const Eigen::Index n = Eigen::Index(1) << length;
  if (fitness.size() != n || noise_sd.size() != n) {
    throw std::invalid_argument("landscape vectors must have 2^L entries");
  }
  if (!fitness.allFinite() || !noise_sd.allFinite() ||
      noise_sd.minCoeff() < 0) {
    throw std::invalid_argument(
        "landscape fitness must be finite and noise sd nonnegative");
  }
  if (feature_order < 1) {
    throw std::invalid_argument("feature_order must be >= 1");
  }
  Landscape land;
  land.length = length;
  land.feature_order = std::min(feature_order, length);
  land.fitness = std::move(fitness);
  land.noise_sd = std::move(noise_sd);
  land.features = interaction_features(length, land.feature_order);
  return land;
}

/// Random landscape whose fitness is a linear combination of interaction
/// terms up to max_order, with independent zero-mean coefficients drawn
/// per order with the given sds. The coefficient for subset S is drawn in
/// the featurization order (size, then lexicographic sites).
inline Landscape generate_synthetic_landscape(
    int length, int max_order, const std::vector<double>& coeff_sd_per_order,
    double noise_sd, std::uint64_t seed, int feature_order = 2) {
  detail::check_length(length);
  if (max_order < 1 || max_order > length) {
    throw std::invalid_argument("max_order must be in [1, L]");
  }
  if (static_cast<int>(coeff_sd_per_order.size()) != max_order) {
    throw std::invalid_argument(
        "coeff_sd_per_order must have one entry per order 1..max_order");
  }
  if (noise_sd < 0) throw std::invalid_argument("noise_sd must be >= 0");

  const Eigen::Index n = Eigen::Index(1) << length;
  auto g = make_stream(seed, {0x1a5dULL});

  // Coefficients live in the signed-bit basis phi_S; the Walsh-Hadamard
  // character chi_S differs from phi_S by a factor (-1)^|S|.
  Eigen::VectorXd spectrum = Eigen::VectorXd::Zero(n);
  for (std::uint32_t mask : detail::interaction_masks(length, max_order)) {
    const int ord = std::popcount(mask);
    const double c =
        coeff_sd_per_order[static_cast<std::size_t>(ord - 1)] *
        standard_normal(g);
    spectrum[mask] = (ord % 2 == 0) ? c : -c;
  }
  fwht(spectrum);  // spectrum now holds the fitness values

  return make_landscape(length, feature_order, std::move(spectrum),
                        Eigen::VectorXd::Constant(n, noise_sd));
}

/// Per-sequence noise sd, estimated as the absolute residual of the exact
/// least-squares fit of fitness on all interaction terms of order <= order
/// (constant term included). On a complete landscape the interaction basis
/// is orthogonal, so the fit is a truncated Walsh-Hadamard transform.
inline Landscape estimate_noise_sd(const Landscape& land, int order = 7) {
  if (order < 0 || order > land.length) {
    throw std::invalid_argument("estimate_noise_sd: order must be in [0, L]");
  }
  const Eigen::Index n = land.size();
  Eigen::VectorXd spectrum = land.fitness;
  fwht(spectrum);
  for (Eigen::Index s = 0; s < n; ++s) {
    if (std::popcount(static_cast<std::uint32_t>(s)) > order) spectrum[s] = 0;
  }
  fwht(spectrum);
  spectrum /= static_cast<double>(n);  // low-order fit
  Landscape out = land;
  out.noise_sd = (land.fitness - spectrum).cwiseAbs();
  return out;
}

inline std::string sequence_string(std::uint32_t id, int length) {
  std::string s(static_cast<std::size_t>(length), '0');
  for (int j = 0; j < length; ++j) {
    if ((id >> j) & 1u) s[static_cast<std::size_t>(j)] = '1';
  }
  return s;
}

inline void save_landscape(const Landscape& land, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "seq,fitness,noise_sd\n";
  char buf[64];
  for (Eigen::Index id = 0; id < land.size(); ++id) {
    out << sequence_string(static_cast<std::uint32_t>(id), land.length);
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g", land.fitness[id],
                  land.noise_sd[id]);
    out << buf << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

/// Loads a landscape CSV (header `seq,fitness[,noise_sd]`). All 2^L
/// sequences must be present exactly once. When the noise_sd column is
/// absent, it is estimated from the fitness values via estimate_noise_sd
/// with order min(7, L).
inline Landscape load_landscape(const std::string& path, int feature_order) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open landscape file: " + path);

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool has_noise;
  if (line == "seq,fitness,noise_sd") {
    has_noise = true;
  } else if (line == "seq,fitness") {
    has_noise = false;
  } else {
    throw std::runtime_error(path + ": expected header seq,fitness[,noise_sd]");
  }

  int length = -1;
  Eigen::VectorXd fitness, noise;
  std::vector<char> seen;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string seq, fit_str, noise_str;
    if (!std::getline(ss, seq, ',') || !std::getline(ss, fit_str, ',')) {
      throw std::runtime_error(path + ": row " + std::to_string(row) +
                               ": malformed line");
    }
    if (has_noise && !std::getline(ss, noise_str, ',')) {
      throw std::runtime_error(path + ": row " + std::to_string(row) +
                               ": missing noise_sd");
    }

    if (length < 0) {
      length = static_cast<int>(seq.size());
      detail::check_length(length);
      const Eigen::Index n = Eigen::Index(1) << length;
      fitness.resize(n);
      noise = Eigen::VectorXd::Zero(n);
      seen.assign(static_cast<std::size_t>(n), 0);
    }
    if (static_cast<int>(seq.size()) != length) {
      throw std::runtime_error(path + ": row " + std::to_string(row) +
                               ": inconsistent sequence length");
    }
    std::uint32_t id = 0;
    for (int j = 0; j < length; ++j) {
      const char c = seq[static_cast<std::size_t>(j)];
      if (c == '1') {
        id |= (1u << j);
      } else if (c != '0') {
        throw std::runtime_error(path + ": row " + std::to_string(row) +
                                 ": sequence characters must be 0 or 1");
      }
    }
    if (seen[id]) {
      throw std::runtime_error(path + ": row " + std::to_string(row) +
                               ": duplicate sequence " + seq);
    }
    seen[id] = 1;
    try {
      fitness[id] = std::stod(fit_str);
      if (has_noise) noise[id] = std::stod(noise_str);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": row " + std::to_string(row) +
                               ": bad numeric value");
    }
  }
  if (length < 0) throw std::runtime_error(path + ": no data rows");
  for (std::size_t id = 0; id < seen.size(); ++id) {
    if (!seen[id]) {
      throw std::runtime_error(
          path + ": missing sequence " +
          sequence_string(static_cast<std::uint32_t>(id), length));
    }
  }

  Landscape land = make_landscape(length, feature_order, std::move(fitness),
                                  std::move(noise));
  if (!has_noise) land = estimate_noise_sd(land, std::min(7, length));
  return land;
}

}  // namespace fcs
