#pragma once

// Single-shot design-loop simulation: sample a training set from the
// landscape, fit a ridge model, draw one designed input from the induced
// Boltzmann distribution, observe its noisy label, and build the configured
// confidence set. Repeated T times with per-trial random streams derived
// from the master seed, so results are reproducible and independent of the
// trial count and of execution order.

#include <Eigen/Dense>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "fcs/design.hpp"
#include "fcs/grid_set.hpp"
#include "fcs/landscape.hpp"
#include "fcs/ridge.hpp"
#include "fcs/ridge_conformal.hpp"
#include "fcs/rng.hpp"
#include "fcs/split_conformal.hpp"

namespace fcs {

enum class Method {
  fcs_full,
  fcs_randomized,
  scs_full,
  split,
  staircase,
};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::fcs_full: return "fcs_full";
    case Method::fcs_randomized: return "fcs_randomized";
    case Method::scs_full: return "scs_full";
    case Method::split: return "split";
    case Method::staircase: return "staircase";
  }
  return "?";
}

inline Method parse_method(const std::string& name) {
  for (Method m : {Method::fcs_full, Method::fcs_randomized, Method::scs_full,
                   Method::split, Method::staircase}) {
    if (name == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown method: " + name);
}

inline bool is_grid_method(Method m) {
  return m == Method::fcs_full || m == Method::fcs_randomized ||
         m == Method::scs_full;
}

struct TrialConfig {
  int n = 32;
  double lambda = 0.0;
  double gamma = 1.0;
  double alpha = 0.1;
  CandidateGrid grid;
  int trials = 100;
  Method method = Method::fcs_full;
  std::uint64_t seed = 0;
  double noise_scale = 1.0;  // multiplies the per-sequence noise sd
  int calib_m = 0;           // calibration size for split methods; 0 -> n

  void validate(const Landscape& land) const {
    if (n < 1 || n >= land.size()) {
      throw std::invalid_argument("TrialConfig: need 1 <= n < 2^L");
    }
    if (trials < 1) throw std::invalid_argument("TrialConfig: trials >= 1");
    if (!(alpha > 0) || !(alpha < 1)) {
      throw std::invalid_argument("TrialConfig: alpha must lie in (0, 1)");
    }
    if (!(gamma > 0)) throw std::invalid_argument("TrialConfig: gamma > 0");
    if (lambda < 0) throw std::invalid_argument("TrialConfig: lambda >= 0");
    if (noise_scale < 0) {
      throw std::invalid_argument("TrialConfig: noise_scale >= 0");
    }
    if (calib_m < 0) throw std::invalid_argument("TrialConfig: calib_m >= 0");
  }
};

struct TrialRecord {
  int trial = 0;
  Eigen::Index test_id = 0;
  double true_label = 0.0;  // noisy observed label of the designed input
  double predicted = 0.0;
  bool covered = false;
  double width_or_size = 0.0;
  std::variant<GridConfidenceSet, StaircaseSet> set{StaircaseSet{}};

  bool is_grid() const {
    return std::holds_alternative<GridConfidenceSet>(set);
  }
  const GridConfidenceSet& grid_set() const {
    return std::get<GridConfidenceSet>(set);
  }
  const StaircaseSet& staircase_set() const {
    return std::get<StaircaseSet>(set);
  }

  /// Smallest label in the set; +infinity when empty.
  double set_minimum() const {
    return is_grid() ? grid_set().min_value() : staircase_set().min_value();
  }
};

inline int thread_budget() {
  if (const char* env = std::getenv("FCS_THREADS")) {
    const int k = std::atoi(env);
    if (k >= 1) return k;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

inline TrialRecord run_one_trial(const TrialConfig& cfg, const Landscape& land,
                                 int k) {
  TrialRecord rec;
  rec.trial = k;

  auto g_train = trial_stream(cfg.seed, StreamPurpose::training,
                              static_cast<std::uint64_t>(cfg.n),
                              static_cast<std::uint64_t>(k));
  const TrainingSample sample =
      sample_training(land, cfg.n, g_train, cfg.noise_scale);

  const RidgeModel model = fit_ridge(sample.data, {cfg.gamma});
  const BoltzmannDistribution boltz =
      boltzmann_distribution(model, land, cfg.lambda);

  auto g_design = trial_stream(cfg.seed, StreamPurpose::design,
                               static_cast<std::uint64_t>(cfg.n),
                               static_cast<std::uint64_t>(k));
  rec.test_id = boltz.sample(uniform01(g_design));
  const FeatureVector x_test = land.features_of(rec.test_id);
  rec.true_label = land.fitness[rec.test_id] +
                   cfg.noise_scale * land.noise_sd[rec.test_id] *
                       standard_normal(g_design);

  auto g_conf = trial_stream(cfg.seed, StreamPurpose::conformal,
                             static_cast<std::uint64_t>(cfg.n),
                             static_cast<std::uint64_t>(k));
  auto conf_uniform = [&g_conf] { return uniform01(g_conf); };

  if (is_grid_method(cfg.method)) {
    const auto comp = ridge_fcs_computation(sample.data, x_test, cfg.grid,
                                            {cfg.gamma}, {cfg.lambda}, land);
    rec.predicted = comp.predicted;
    GridConfidenceSet set =
        cfg.method == Method::fcs_full ? fcs_set(comp, cfg.alpha)
        : cfg.method == Method::fcs_randomized
            ? fcs_set_randomized(comp, cfg.alpha, conf_uniform)
            : scs_set(comp, cfg.alpha);
    rec.covered = set.covers(rec.true_label);
    rec.width_or_size = set.width();
    rec.set = std::move(set);
    return rec;
  }

  // Data-splitting methods: the n sampled points train the model (fixing
  // the design distribution), and a fresh calibration sample of size
  // calib_m (default n) is drawn from the training distribution.
  const int m = cfg.calib_m > 0 ? cfg.calib_m : cfg.n;
  auto g_calib = trial_stream(cfg.seed, StreamPurpose::calibration,
                              static_cast<std::uint64_t>(cfg.n),
                              static_cast<std::uint64_t>(k));
  const TrainingSample calib_sample =
      sample_training(land, m, g_calib, cfg.noise_scale);

  CalibrationSet calib;
  calib.inputs = calib_sample.data.inputs;
  calib.labels = calib_sample.data.labels;
  calib.model = [&model](const FeatureVector& x) { return predict(model, x); };

  // Likelihood ratio v(x) = 2^L * boltzmann mass. Sequence ids are
  // recoverable from the first L features (the signed bits).
  const auto lr = [&boltz, &land](const FeatureVector& x) {
    Eigen::Index id = 0;
    for (int j = 0; j < land.length; ++j) {
      if (x[j] > 0) id |= (Eigen::Index(1) << j);
    }
    return boltz.likelihood_ratio(id);
  };

  rec.predicted = predict(model, x_test);
  StaircaseSet set =
      cfg.method == Method::split
          ? split_conformal_interval(calib, x_test, cfg.alpha, lr)
          : randomized_staircase_set(calib, x_test, cfg.alpha, lr,
                                     conf_uniform);
  rec.covered = set.contains(rec.true_label);
  rec.width_or_size = set_size(set);
  rec.set = std::move(set);
  return rec;
}

}  // namespace detail

/// Runs cfg.trials independent trials. Trials may execute on several
/// threads (capped by FCS_THREADS); records always come back in trial
/// order and are bit-identical regardless of the thread count.
inline std::vector<TrialRecord> run_trials(const TrialConfig& cfg,
                                           const Landscape& land) {
  cfg.validate(land);
  std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials));
  const int workers =
      std::max(1, std::min(thread_budget(), cfg.trials));

  std::vector<std::string> errors(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    for (int k = w; k < cfg.trials; k += workers) {
      try {
        records[static_cast<std::size_t>(k)] =
            detail::run_one_trial(cfg, land, k);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(w)] =
            "trial " + std::to_string(k) + ": " + e.what();
        return;
      }
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& err : errors) {
    if (!err.empty()) throw std::runtime_error(err);
  }
  return records;
}

}  // namespace fcs
