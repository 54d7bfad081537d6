// Command-line front end: landscape generation, experiment sweeps, and
// report tables. Exit codes: 0 success, 1 runtime failure, 2 usage or
// config error.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "fcs/experiment.hpp"

namespace {

struct LandscapeArgs {
  std::string out;
  std::string config;
  int length = 8;
  int max_order = 2;
  std::vector<double> coeff_sd{0.6, 0.25};
  double noise_sd = 0.05;
  std::uint64_t seed = 1;
  int feature_order = 2;
};

int cmd_landscape(const LandscapeArgs& args) {
  fcs::LandscapeSpec spec;
  if (!args.config.empty()) {
    spec = fcs::load_config(args.config).landscape;
  } else {
    spec.synthetic.length = args.length;
    spec.synthetic.max_order = args.max_order;
    spec.synthetic.coeff_sd = args.coeff_sd;
    spec.synthetic.noise_sd = args.noise_sd;
    spec.synthetic.seed = args.seed;
    spec.feature_order = args.feature_order;
  }
  const fcs::Landscape land = spec.realize();
  fcs::save_landscape(land, args.out);
  const auto [lo, hi] = land.fitness_range();
  std::printf("L=%d sequences=%lld fitness_range=[%.6g, %.6g] -> %s\n",
              land.length, static_cast<long long>(land.size()), lo, hi,
              args.out.c_str());
  return 0;
}

struct RunArgs {
  std::string config;
  std::string landscape_path;
  std::string out;
  std::vector<std::string> methods;
  std::vector<double> lambdas;
  std::vector<int> ns;
  double alpha = -1;
  double gamma = -1;
  std::string grid;
  int trials = -1;
  double noise_scale = -1;
  long long seed = -1;
  int calib_m = -1;
  long long reference_id = -1;
};

int cmd_run(const RunArgs& args) {
  fcs::ExperimentConfig cfg;
  if (!args.config.empty()) cfg = fcs::load_config(args.config);
  // Flags win over the config file.
  if (!args.landscape_path.empty()) cfg.landscape.path = args.landscape_path;
  if (!args.methods.empty()) {
    cfg.methods.clear();
    for (const auto& name : args.methods) {
      cfg.methods.push_back(fcs::parse_method(name));
    }
  }
  if (!args.lambdas.empty()) cfg.lambda_list = args.lambdas;
  if (!args.ns.empty()) cfg.n_list = args.ns;
  if (args.alpha >= 0) cfg.alpha = args.alpha;
  if (args.gamma >= 0) cfg.gamma = args.gamma;
  if (!args.grid.empty()) cfg.grid = fcs::parse_grid_spec(args.grid);
  if (args.trials >= 0) cfg.trials = args.trials;
  if (args.noise_scale >= 0) cfg.noise_scale = args.noise_scale;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.calib_m >= 0) cfg.calib_m = args.calib_m;
  if (args.reference_id >= 0) cfg.reference_id = args.reference_id;
  if (!args.out.empty()) cfg.out_dir = args.out;

  const fcs::Landscape land = cfg.landscape.realize();
  const auto out = fcs::run_experiment(cfg, land, cfg.out_dir);
  std::printf("wrote %s and %s (%zu sweep cells, %d trials each)\n",
              out.records_path.c_str(), out.summary_path.c_str(),
              out.summaries.size(), cfg.trials);
  return 0;
}

struct ReportArgs {
  std::vector<std::string> records;
  std::string out = ".";
};

int cmd_report(const ReportArgs& args) {
  std::vector<fcs::RecordsFile> files;
  for (const auto& path : args.records) {
    files.push_back(fcs::read_records(path));
  }
  const auto out = fcs::write_report(files, args.out);
  std::printf("wrote %s\n", out.tradeoff_path.c_str());
  if (out.jaccard_path) std::printf("wrote %s\n", out.jaccard_path->c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conformal prediction under feedback covariate shift"};
  app.require_subcommand(1);

  LandscapeArgs land_args;
  auto* land_cmd =
      app.add_subcommand("landscape", "generate a synthetic landscape CSV");
  land_cmd->add_option("--out", land_args.out, "output CSV path")->required();
  land_cmd->add_option("--config", land_args.config,
                       "JSON config with a landscape section");
  land_cmd->add_option("--L", land_args.length, "sequence length (2..16)");
  land_cmd->add_option("--max-order", land_args.max_order,
                       "highest interaction order in the signal");
  land_cmd->add_option("--coeff-sd", land_args.coeff_sd,
                       "per-order coefficient sds")
      ->delimiter(',');
  land_cmd->add_option("--noise-sd", land_args.noise_sd,
                       "measurement noise sd");
  land_cmd->add_option("--seed", land_args.seed, "generator seed");
  land_cmd->add_option("--feature-order", land_args.feature_order,
                       "interaction order of the featurization");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "run a design-loop experiment");
  run_cmd->add_option("--config", run_args.config, "JSON config path");
  run_cmd->add_option("--landscape", run_args.landscape_path,
                      "landscape CSV path");
  run_cmd->add_option("--out", run_args.out, "output directory");
  run_cmd->add_option("--method", run_args.methods,
                      "fcs_full,fcs_randomized,scs_full,split,staircase")
      ->delimiter(',');
  run_cmd->add_option("--lambda", run_args.lambdas, "inverse temperatures")
      ->delimiter(',');
  run_cmd->add_option("--n", run_args.ns, "training set sizes")->delimiter(',');
  run_cmd->add_option("--alpha", run_args.alpha, "miscoverage level");
  run_cmd->add_option("--gamma", run_args.gamma, "ridge regularization");
  run_cmd->add_option("--grid", run_args.grid, "candidate grid LO:HI:STEP");
  run_cmd->add_option("--trials", run_args.trials, "trials per sweep cell");
  run_cmd->add_option("--noise-scale", run_args.noise_scale,
                      "noise sd multiplier");
  run_cmd->add_option("--seed", run_args.seed, "master seed");
  run_cmd->add_option("--calib-m", run_args.calib_m,
                      "calibration size for split methods (0: use n)");
  run_cmd->add_option("--reference-id", run_args.reference_id,
                      "sequence id whose fitness is the exceed reference");

  ReportArgs report_args;
  auto* report_cmd =
      app.add_subcommand("report", "emit trade-off and Jaccard tables");
  report_cmd->add_option("--records", report_args.records,
                         "records CSV paths")
      ->required()
      ->delimiter(',');
  report_cmd->add_option("--out", report_args.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (land_cmd->parsed()) return cmd_landscape(land_args);
    if (run_cmd->parsed()) return cmd_run(run_args);
    if (report_cmd->parsed()) return cmd_report(report_args);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
