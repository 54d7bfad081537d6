#pragma once

// Experiment configuration and the CSV surfaces of the command-line tool.
// A config is one JSON document (flags override individual fields); every
// emitted CSV starts with a versioned schema comment and is byte-stable
// for a fixed config and seed.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "fcs/landscape.hpp"
#include "fcs/metrics.hpp"
#include "fcs/trials.hpp"

namespace fcs {

struct SyntheticSpec {
  int length = 8;
  int max_order = 2;
  std::vector<double> coeff_sd{0.6, 0.25};
  double noise_sd = 0.05;
  std::uint64_t seed = 1;
};

struct LandscapeSpec {
  std::string path;  // CSV path; empty means synthetic
  SyntheticSpec synthetic;
  int feature_order = 2;

  Landscape realize() const {
    if (!path.empty()) return load_landscape(path, feature_order);
    const auto& s = synthetic;
    return generate_synthetic_landscape(s.length, s.max_order, s.coeff_sd,
                                        s.noise_sd, s.seed, feature_order);
  }
};

struct ExperimentConfig {
  LandscapeSpec landscape;
  std::vector<int> n_list{32};
  std::vector<double> lambda_list{0.0};
  std::vector<Method> methods{Method::fcs_full};
  double alpha = 0.1;
  double gamma = 1.0;
  std::optional<CandidateGrid> grid;  // default: padded fitness range
  int trials = 100;
  std::uint64_t seed = 0;
  double noise_scale = 1.0;
  int calib_m = 0;
  std::optional<Eigen::Index> reference_id;
  std::string out_dir = ".";
};

inline constexpr int kConfigVersion = 1;

inline CandidateGrid parse_grid_spec(const std::string& spec) {
  double lo, hi, step;
  char extra;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf%c", &lo, &hi, &step, &extra) != 3) {
    throw std::invalid_argument("grid must have the form LO:HI:STEP");
  }
  return CandidateGrid(lo, hi, step);
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("version") && j.at("version").get<int>() != kConfigVersion) {
    throw std::invalid_argument("unsupported config version");
  }
  if (j.contains("landscape")) {
    const auto& l = j.at("landscape");
    if (l.contains("path")) cfg.landscape.path = l.at("path").get<std::string>();
    if (l.contains("feature_order")) {
      cfg.landscape.feature_order = l.at("feature_order").get<int>();
    }
    if (l.contains("synthetic")) {
      const auto& s = l.at("synthetic");
      auto& out = cfg.landscape.synthetic;
      if (s.contains("length")) out.length = s.at("length").get<int>();
      if (s.contains("max_order")) out.max_order = s.at("max_order").get<int>();
      if (s.contains("coeff_sd")) {
        out.coeff_sd = s.at("coeff_sd").get<std::vector<double>>();
      }
      if (s.contains("noise_sd")) out.noise_sd = s.at("noise_sd").get<double>();
      if (s.contains("seed")) out.seed = s.at("seed").get<std::uint64_t>();
    }
  }
  if (j.contains("n")) cfg.n_list = j.at("n").get<std::vector<int>>();
  if (j.contains("lambda")) {
    cfg.lambda_list = j.at("lambda").get<std::vector<double>>();
  }
  if (j.contains("method")) {
    cfg.methods.clear();
    for (const auto& name : j.at("method")) {
      cfg.methods.push_back(parse_method(name.get<std::string>()));
    }
  }
  if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
  if (j.contains("gamma")) cfg.gamma = j.at("gamma").get<double>();
  if (j.contains("grid")) {
    cfg.grid = parse_grid_spec(j.at("grid").get<std::string>());
  }
  if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("noise_scale")) {
    cfg.noise_scale = j.at("noise_scale").get<double>();
  }
  if (j.contains("calib_m")) cfg.calib_m = j.at("calib_m").get<int>();
  if (j.contains("reference_id")) {
    cfg.reference_id = j.at("reference_id").get<Eigen::Index>();
  }
  if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config parse error: " + std::string(e.what()));
  }
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config field error: " + std::string(e.what()));
  }
}

namespace detail {

inline std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

/// Grid inclusion flags as inclusive index runs, "3:17|40:42".
inline std::string encode_grid_set(const GridConfidenceSet& set) {
  std::string out;
  const auto count = set.included.size();
  std::size_t k = 0;
  while (k < count) {
    if (!set.included[k]) {
      ++k;
      continue;
    }
    std::size_t end = k;
    while (end + 1 < count && set.included[end + 1]) ++end;
    if (!out.empty()) out += '|';
    out += std::to_string(k) + ':' + std::to_string(end);
    k = end + 1;
  }
  return out;
}

/// Staircase intervals as "lo..hi|lo..hi" with inf endpoints spelled out.
inline std::string encode_staircase_set(const StaircaseSet& set) {
  std::string out;
  for (const auto& iv : set.intervals) {
    if (!out.empty()) out += '|';
    out += fmt(iv.lo) + ".." + fmt(iv.hi);
  }
  return out;
}

inline std::string encode_set(const TrialRecord& rec) {
  return rec.is_grid() ? encode_grid_set(rec.grid_set())
                       : encode_staircase_set(rec.staircase_set());
}

inline std::vector<std::string> split_fields(const std::string& line,
                                             char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace detail

inline constexpr const char* kRecordsHeader =
    "trial,method,n,lambda,test_id,predicted,true_label,covered,"
    "width_or_size,set";

inline constexpr const char* kSummaryHeader =
    "method,n,lambda,trials,coverage,mean_width,median_width,min_width,"
    "max_width,frac_infinite,mean_size_finite,mean_predicted,"
    "exceed_reference_freq,mean_width_frac_range";

struct ExperimentOutput {
  std::vector<SweepSummary> summaries;
  std::filesystem::path records_path;
  std::filesystem::path summary_path;
};

/// Runs the full sweep (methods x n x lambda) and writes records.csv and
/// summary.csv under out_dir. Output bytes are a function of the config
/// and seed only.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg,
                                       const Landscape& land,
                                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  ExperimentOutput out;
  out.records_path = out_dir / "records.csv";
  out.summary_path = out_dir / "summary.csv";

  const auto [fit_lo, fit_hi] = land.fitness_range();
  const CandidateGrid grid =
      cfg.grid ? *cfg.grid : CandidateGrid::for_label_range(fit_lo, fit_hi);
  std::optional<double> reference;
  if (cfg.reference_id) {
    if (*cfg.reference_id < 0 || *cfg.reference_id >= land.size()) {
      throw std::invalid_argument("reference_id outside the landscape");
    }
    reference = land.fitness[*cfg.reference_id];
  }

  std::ofstream records(out.records_path);
  std::ofstream summary(out.summary_path);
  if (!records || !summary) {
    throw std::runtime_error("cannot open output files under " +
                             out_dir.string());
  }
  const std::string meta =
      "# grid=" + detail::fmt(grid.lo) + ":" + detail::fmt(grid.hi) + ":" +
      detail::fmt(grid.spacing) + " alpha=" + detail::fmt(cfg.alpha) +
      " gamma=" + detail::fmt(cfg.gamma) + " seed=" + std::to_string(cfg.seed) +
      " noise_scale=" + detail::fmt(cfg.noise_scale) +
      " L=" + std::to_string(land.length) +
      " feature_order=" + std::to_string(land.feature_order) + "\n";
  records << "# fcs-records v1\n" << meta << kRecordsHeader << "\n";
  summary << "# fcs-summary v1\n" << meta << kSummaryHeader << "\n";

  for (Method method : cfg.methods) {
    for (int n : cfg.n_list) {
      for (double lambda : cfg.lambda_list) {
        TrialConfig tc;
        tc.n = n;
        tc.lambda = lambda;
        tc.gamma = cfg.gamma;
        tc.alpha = cfg.alpha;
        tc.grid = grid;
        tc.trials = cfg.trials;
        tc.method = method;
        tc.seed = cfg.seed;
        tc.noise_scale = cfg.noise_scale;
        tc.calib_m = cfg.calib_m;

        const auto trial_records = run_trials(tc, land);
        for (const auto& rec : trial_records) {
          records << rec.trial << ',' << to_string(method) << ',' << n << ','
                  << detail::fmt(lambda) << ',' << rec.test_id << ','
                  << detail::fmt(rec.predicted) << ','
                  << detail::fmt(rec.true_label) << ','
                  << (rec.covered ? 1 : 0) << ','
                  << detail::fmt(rec.width_or_size) << ','
                  << detail::encode_set(rec) << '\n';
        }

        const auto s = summarize(trial_records, method, n, lambda,
                                 fit_hi - fit_lo, reference);
        out.summaries.push_back(s);
        summary << s.method << ',' << s.n << ',' << detail::fmt(s.lambda)
                << ',' << s.trials << ',' << detail::fmt(s.coverage) << ','
                << detail::fmt(s.mean_width) << ','
                << detail::fmt(s.median_width) << ','
                << detail::fmt(s.min_width) << ',' << detail::fmt(s.max_width)
                << ',' << detail::fmt(s.frac_infinite) << ','
                << detail::fmt(s.mean_size_finite) << ','
                << detail::fmt(s.mean_predicted) << ','
                << detail::fmt(s.exceed_reference_freq) << ','
                << detail::fmt(s.mean_width_frac_range) << '\n';
      }
    }
  }
  return out;
}

/// One parsed row of a records CSV.
struct RecordRow {
  int trial = 0;
  std::string method;
  int n = 0;
  double lambda = 0.0;
  Eigen::Index test_id = 0;
  double predicted = 0.0;
  double true_label = 0.0;
  bool covered = false;
  double width_or_size = 0.0;
  std::string set_encoding;
};

struct RecordsFile {
  CandidateGrid grid;
  std::string meta;
  std::vector<RecordRow> rows;
};

inline RecordsFile read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open records: " + path);
  RecordsFile file;
  std::string line;
  bool have_grid = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("grid=");
      if (pos != std::string::npos) {
        const auto end = line.find(' ', pos);
        file.grid = parse_grid_spec(line.substr(pos + 5, end - pos - 5));
        file.meta = line;
        have_grid = true;
      }
      continue;
    }
    if (line.rfind("trial,", 0) == 0) continue;  // header
    auto f = detail::split_fields(line, ',');
    if (f.size() != 10) {
      throw std::invalid_argument(path + ": malformed records row: " + line);
    }
    RecordRow row;
    row.trial = std::stoi(f[0]);
    row.method = f[1];
    row.n = std::stoi(f[2]);
    row.lambda = detail::parse_double(f[3]);
    row.test_id = std::stol(f[4]);
    row.predicted = detail::parse_double(f[5]);
    row.true_label = detail::parse_double(f[6]);
    row.covered = f[7] == "1";
    row.width_or_size = detail::parse_double(f[8]);
    row.set_encoding = f[9];
    file.rows.push_back(std::move(row));
  }
  if (!have_grid) {
    throw std::invalid_argument(path + ": no grid metadata comment");
  }
  if (file.rows.empty()) {
    throw std::invalid_argument(path + ": no record rows");
  }
  return file;
}

inline GridConfidenceSet decode_grid_set(const CandidateGrid& grid,
                                         const std::string& encoding) {
  GridConfidenceSet set(grid);
  if (encoding.empty()) return set;
  for (const auto& run : detail::split_fields(encoding, '|')) {
    const auto colon = run.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("bad grid-set encoding: " + encoding);
    }
    const auto lo = static_cast<std::size_t>(std::stol(run.substr(0, colon)));
    const auto hi = static_cast<std::size_t>(std::stol(run.substr(colon + 1)));
    if (hi >= set.included.size() || lo > hi) {
      throw std::invalid_argument("grid-set run out of range: " + run);
    }
    for (std::size_t k = lo; k <= hi; ++k) set.included[k] = 1;
  }
  return set;
}

struct ReportOutput {
  std::filesystem::path tradeoff_path;
  std::optional<std::filesystem::path> jaccard_path;
};

/// Builds the trade-off table (per method and n, rows sorted by lambda)
/// and, when at least two grid-set method series share the same seeds,
/// the per-trial pairwise Jaccard table.
inline ReportOutput write_report(const std::vector<RecordsFile>& files,
                                 const std::filesystem::path& out_dir) {
  if (files.empty()) throw std::invalid_argument("report: no records files");
  for (const auto& f : files) {
    if (!(f.grid == files.front().grid)) {
      throw std::invalid_argument("report: records have incompatible grids");
    }
  }
  std::filesystem::create_directories(out_dir);

  // Group rows by (method, n, lambda).
  struct Cell {
    std::vector<const RecordRow*> rows;
  };
  std::map<std::tuple<std::string, int, double>, Cell> cells;
  for (const auto& f : files) {
    for (const auto& row : f.rows) {
      cells[{row.method, row.n, row.lambda}].rows.push_back(&row);
    }
  }

  ReportOutput out;
  out.tradeoff_path = out_dir / "tradeoff.csv";
  std::ofstream tradeoff(out.tradeoff_path);
  tradeoff << "# fcs-tradeoff v1\n"
           << "method,n,lambda,mean_predicted,mean_width,frac_infinite\n";
  for (const auto& [key, cell] : cells) {
    double pred = 0, width = 0;
    std::size_t infinite = 0, finite = 0;
    for (const auto* row : cell.rows) {
      pred += row->predicted;
      if (std::isinf(row->width_or_size)) {
        ++infinite;
      } else {
        width += row->width_or_size;
        ++finite;
      }
    }
    tradeoff << std::get<0>(key) << ',' << std::get<1>(key) << ','
             << detail::fmt(std::get<2>(key)) << ','
             << detail::fmt(pred / static_cast<double>(cell.rows.size())) << ','
             << detail::fmt(finite ? width / static_cast<double>(finite) : 0.0)
             << ','
             << detail::fmt(static_cast<double>(infinite) /
                            static_cast<double>(cell.rows.size()))
             << '\n';
  }

  // Pairwise per-trial Jaccard distances between grid-set methods that
  // share (n, lambda) and trial indices.
  const CandidateGrid grid = files.front().grid;
  std::map<std::tuple<int, double, int, std::string>, const RecordRow*> by_key;
  std::vector<std::string> grid_methods;
  for (const auto& f : files) {
    for (const auto& row : f.rows) {
      bool is_grid_row = true;
      try {
        is_grid_row = is_grid_method(parse_method(row.method));
      } catch (const std::invalid_argument&) {
        is_grid_row = false;
      }
      if (!is_grid_row) continue;
      by_key[{row.n, row.lambda, row.trial, row.method}] = &row;
      if (std::find(grid_methods.begin(), grid_methods.end(), row.method) ==
          grid_methods.end()) {
        grid_methods.push_back(row.method);
      }
    }
  }
  std::sort(grid_methods.begin(), grid_methods.end());
  if (grid_methods.size() >= 2) {
    out.jaccard_path = out_dir / "jaccard.csv";
    std::ofstream jaccard(*out.jaccard_path);
    jaccard << "# fcs-jaccard v1\n"
            << "n,lambda,trial,method_a,method_b,jaccard\n";
    for (const auto& [key, row_a] : by_key) {
      const auto& [n, lambda, trial, method] = key;
      for (const auto& other : grid_methods) {
        if (other <= method) continue;
        const auto it = by_key.find({n, lambda, trial, other});
        if (it == by_key.end()) continue;
        const double d =
            jaccard_distance(decode_grid_set(grid, row_a->set_encoding),
                             decode_grid_set(grid, it->second->set_encoding));
        jaccard << n << ',' << detail::fmt(lambda) << ',' << trial << ','
                << method << ',' << other << ',' << detail::fmt(d) << '\n';
      }
    }
  }
  return out;
}

}  // namespace fcs
