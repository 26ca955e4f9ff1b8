#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lamp/config.hpp"

namespace lamp {

struct RunMetrics {
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> mse_to_oracle;  // only with a Gaussian prior
  double mse_to_truth = 0.0;
  std::size_t nfe = 0;
  std::size_t denoiser_calls = 0;
  double mean_beta = 0.0;
  double max_ps_decomposition_dev = 0.0;
};

struct RunResult {
  Image x0;
  Image truth;
  Image measurement;
  Trajectory trajectory;
  RunMetrics metrics;
};

/// Runs one reconstruction in memory.
RunResult execute(const ExperimentConfig& cfg);

/// Runs and writes into `cfg.output_dir`:
///   x0.ltnsr, truth.ltnsr, measurement.ltnsr, steps.csv, metrics.json,
///   config.json (resolved snapshot), and x0.pgm/ppm for 1 or 3 channels.
RunResult run(const ExperimentConfig& cfg);

nlohmann::json metrics_json(const ExperimentConfig& cfg, const RunMetrics& m);
/// Resolved config plus tool version, expanded seeds and notes.
nlohmann::json snapshot_json(const ExperimentConfig& cfg);

const std::vector<std::string>& sweep_parameters();

/// Returns a copy of `cfg` with one parameter replaced. Throws ConfigError
/// listing the valid names for an unknown parameter.
ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& param, double value);

/// One run per value in `<output_dir>/<param>_<k>`, aggregated into
/// `<output_dir>/sweep.csv`. Returns the CSV text.
std::string sweep(const ExperimentConfig& cfg, const std::string& param,
                  const std::vector<double>& values);

}  // namespace lamp
