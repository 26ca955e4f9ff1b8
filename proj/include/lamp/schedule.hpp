#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace lamp {

/// Variance-preserving diffusion coefficients on the training grid.
///
/// Index t runs over training steps 0..n-1; alpha decreases and sigma
/// increases with t. Immutable after construction.
class Schedule {
 public:
  /// Linear beta schedule: beta_i interpolates beta_start..beta_end over
  /// n_train_steps entries, alpha_t = sqrt(prod_{s<=t}(1 - beta_s)).
  static Schedule linear(std::size_t n_train_steps, double beta_start = 1e-4,
                         double beta_end = 0.02);

  /// Builds from explicit coefficients. Checks sizes, positivity and
  /// monotonicity but not alpha^2 + sigma^2 = 1 (see vp_deviation()).
  static Schedule from_coefficients(std::vector<double> alphas, std::vector<double> sigmas);

  std::size_t n_train_steps() const { return alphas_.size(); }
  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& sigmas() const { return sigmas_; }

  double alpha(std::size_t t) const { return alphas_.at(t); }
  double sigma(std::size_t t) const { return sigmas_.at(t); }
  /// log(alpha_t / sigma_t)
  double lambda(std::size_t t) const;
  /// Effective noise level sigma_t / alpha_t.
  double noise_level(std::size_t t) const { return sigma(t) / alpha(t); }

  /// max_t |alpha_t^2 + sigma_t^2 - 1|
  double vp_deviation() const;

 private:
  Schedule(std::vector<double> betas, std::vector<double> alphas, std::vector<double> sigmas);

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> sigmas_;
};

/// Exponential-integrator quantities for one reverse step t -> t_next.
struct StepCoeffs {
  std::size_t t = 0;
  std::size_t t_next = 0;
  double alpha_t = 1.0;
  double sigma_t = 0.0;
  double alpha_next = 1.0;
  double sigma_next = 0.0;
  double h = 0.0;
  std::optional<double> h_prev;
  double e_mh = 1.0;  // exp(-h)
  double a0 = 0.0;    // 1 - exp(-h)
  double a1 = 0.0;    // 1 - (1 - exp(-h)) / h
};

double a0_coeff(double h);
/// Uses h/2 - h^2/6 below h = 1e-8 and a longer series below 1e-2.
double a1_coeff(double h);

/// Respaced reverse-time grid with one denoiser evaluation per entry.
///
/// Step i evaluates at timesteps[i] and moves to timesteps[i+1]; the last
/// step moves to training index 0 (h = 0 if the grid already ends there).
class StepPlan {
 public:
  StepPlan(const Schedule& schedule, std::vector<std::size_t> timesteps);

  std::size_t nfe() const { return timesteps_.size(); }
  const std::vector<std::size_t>& timesteps() const { return timesteps_; }
  /// lambda at each evaluation timestep (size nfe).
  const std::vector<double>& lambdas() const { return lambdas_; }

  StepCoeffs coeffs(std::size_t i) const;

 private:
  std::vector<std::size_t> timesteps_;
  std::vector<double> lambdas_;
  // Per-node coefficients; node nfe is the terminal target (index 0).
  std::vector<double> node_alpha_;
  std::vector<double> node_sigma_;
  std::vector<double> node_lambda_;
};

/// Uniform integer stride s = floor(n/nfe): timesteps n-1, n-1-s, ..., n-1-(nfe-1)s.
/// The last step targets index 0, so h > 0 everywhere unless nfe = n.
StepPlan respace(const Schedule& schedule, std::size_t nfe);

/// |exp(-(lambda_{t_next} - lambda_t)) - alpha_t sigma_next / (alpha_next sigma_t)|
double exp_mh_identity_check(const Schedule& schedule, std::size_t t, std::size_t t_next);

}  // namespace lamp
