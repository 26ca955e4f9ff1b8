#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lamp/corrections.hpp"
#include "lamp/linops.hpp"
#include "lamp/priors.hpp"
#include "lamp/samplers.hpp"
#include "lamp/schedule.hpp"

namespace lamp {

inline constexpr const char* kToolVersion = "lamp 0.1.0";

struct ScheduleSpec {
  std::size_t n_train_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::size_t nfe = 100;
};

struct OperatorSpec {
  OperatorKind kind = OperatorKind::gaussian_blur;
  std::size_t kernel_size = 61;
  double sigma = 3.0;       // gaussian_blur
  double intensity = 0.5;   // motion_blur
  std::size_t factor = 4;   // block_sr
  std::optional<std::uint64_t> seed;       // motion_blur; derived from the master seed if absent
  std::optional<std::string> matrix_path;  // dense: rank-2 tensor (out_dim, in_dim)
};

/// Analytic prior whose covariance is diagonal in the operator's
/// right-singular basis: c_i = var_scale * (1 + f_i^2)^(-var_exponent/2).
struct PriorSpec {
  std::string kind = "gaussian";  // gaussian | gmm | tabulated
  double mean = 0.5;
  std::optional<std::string> mean_path;
  double var_scale = 1.0;
  double var_exponent = 2.0;
  std::vector<double> weights{0.5, 0.5};      // gmm
  std::vector<double> offsets{-0.2, 0.2};     // gmm: component mean = mean + offset
  std::string dir;                            // tabulated
  std::optional<std::uint64_t> sample_seed;   // ground-truth draw
};

struct DegradationSpec {
  double sigma_y = 0.05;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> ground_truth_path;
};

struct ExperimentConfig {
  ScheduleSpec schedule;
  Shape image{1, 64, 64};
  OperatorSpec op;
  CorrectionConfig correction;
  SamplerConfig sampler;
  std::optional<std::uint64_t> init_seed;  // x_T draw
  PriorSpec prior;
  DegradationSpec degradation;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::vector<std::string> metrics{"psnr", "ssim", "mse_to_oracle"};

  /// Cross-module checks (nfe range, n_warm < nfe, operator/image fit...).
  void validate() const;
};

/// Seeds actually used by a run, after master-seed expansion.
struct ResolvedSeeds {
  std::uint64_t ground_truth;
  std::uint64_t measurement_noise;
  std::uint64_t initial_noise;
  std::uint64_t operator_kernel;
};

ResolvedSeeds resolve_seeds(const ExperimentConfig& cfg);

/// Parses a config object. Missing keys take defaults; unknown keys and
/// invalid values throw ConfigError whose field is the dotted JSON path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Components built from a config.
struct Problem {
  std::shared_ptr<const Schedule> schedule;
  std::shared_ptr<const StepPlan> plan;
  OperatorPtr op;
  DenoiserPtr denoiser;
  std::shared_ptr<const GaussianPrior> gaussian_prior;  // set when prior.kind == gaussian
  Image ground_truth;
  Image measurement;
  std::shared_ptr<const Correction> correction;
};

std::shared_ptr<const Schedule> build_schedule(const ScheduleSpec& spec);
OperatorPtr build_operator(const OperatorSpec& spec, Shape image, std::uint64_t kernel_seed);
Problem build_problem(const ExperimentConfig& cfg);

}  // namespace lamp
