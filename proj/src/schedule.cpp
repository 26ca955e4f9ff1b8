#include "lamp/schedule.hpp"

#include <cmath>
#include <string>

#include "lamp/errors.hpp"

namespace lamp {

Schedule::Schedule(std::vector<double> betas, std::vector<double> alphas,
                   std::vector<double> sigmas)
    : betas_(std::move(betas)), alphas_(std::move(alphas)), sigmas_(std::move(sigmas)) {}

Schedule Schedule::linear(std::size_t n_train_steps, double beta_start, double beta_end) {
  if (n_train_steps < 2) throw ConfigError("n_train_steps", "must be at least 2");
  if (!(beta_start > 0.0)) throw ConfigError("beta_start", "must be > 0");
  if (!(beta_end < 1.0)) throw ConfigError("beta_end", "must be < 1");
  if (!(beta_start <= beta_end)) throw ConfigError("beta_end", "must be >= beta_start");

  const std::size_t n = n_train_steps;
  std::vector<double> betas(n), alphas(n), sigmas(n);
  double log_alpha_bar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    betas[i] = beta_start + (beta_end - beta_start) * static_cast<double>(i) /
                                static_cast<double>(n - 1);
    log_alpha_bar += std::log1p(-betas[i]);
    alphas[i] = std::exp(0.5 * log_alpha_bar);
    sigmas[i] = std::sqrt(-std::expm1(log_alpha_bar));
  }
  return Schedule(std::move(betas), std::move(alphas), std::move(sigmas));
}

Schedule Schedule::from_coefficients(std::vector<double> alphas, std::vector<double> sigmas) {
  if (alphas.size() < 2) throw ConfigError("alphas", "need at least 2 entries");
  if (alphas.size() != sigmas.size()) throw ConfigError("sigmas", "length differs from alphas");
  const std::size_t n = alphas.size();
  std::vector<double> betas(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(alphas[i] > 0.0) || !(alphas[i] <= 1.0)) {
      throw ConfigError("alphas", "entry " + std::to_string(i) + " outside (0,1]");
    }
    if (!(sigmas[i] > 0.0) || !(sigmas[i] < 1.0)) {
      throw ConfigError("sigmas", "entry " + std::to_string(i) + " outside (0,1)");
    }
    if (i > 0 && !(alphas[i] < alphas[i - 1])) {
      throw ConfigError("alphas", "must be strictly decreasing");
    }
    if (i > 0 && !(sigmas[i] > sigmas[i - 1])) {
      throw ConfigError("sigmas", "must be strictly increasing");
    }
    const double prev = i == 0 ? 1.0 : alphas[i - 1] * alphas[i - 1];
    betas[i] = 1.0 - alphas[i] * alphas[i] / prev;
  }
  return Schedule(std::move(betas), std::move(alphas), std::move(sigmas));
}

double Schedule::lambda(std::size_t t) const { return std::log(alpha(t) / sigma(t)); }

double Schedule::vp_deviation() const {
  double dev = 0.0;
  for (std::size_t t = 0; t < alphas_.size(); ++t) {
    dev = std::max(dev, std::abs(alphas_[t] * alphas_[t] + sigmas_[t] * sigmas_[t] - 1.0));
  }
  return dev;
}

double a0_coeff(double h) { return 1.0 - std::exp(-h); }

double a1_coeff(double h) {
  if (std::abs(h) < 1e-8) return h / 2.0 - h * h / 6.0;
  // h + expm1(-h) still loses about 2 eps / h relative; use more terms for small steps.
  if (std::abs(h) < 1e-2) return h * (1.0 / 2 - h * (1.0 / 6 - h * (1.0 / 24 - h * (1.0 / 120 - h * (1.0 / 720 - h / 5040)))));
  return (h + std::expm1(-h)) / h;
}

StepPlan::StepPlan(const Schedule& schedule, std::vector<std::size_t> timesteps)
    : timesteps_(std::move(timesteps)) {
  if (timesteps_.empty()) throw ConfigError("nfe", "plan must contain at least one timestep");
  for (std::size_t i = 0; i < timesteps_.size(); ++i) {
    if (timesteps_[i] >= schedule.n_train_steps()) {
      throw ConfigError("timesteps", "index " + std::to_string(timesteps_[i]) + " out of range");
    }
    if (i > 0 && !(timesteps_[i] < timesteps_[i - 1])) {
      throw ConfigError("timesteps", "must be strictly decreasing");
    }
  }
  for (std::size_t t : timesteps_) {
    lambdas_.push_back(schedule.lambda(t));
    node_alpha_.push_back(schedule.alpha(t));
    node_sigma_.push_back(schedule.sigma(t));
  }
  node_lambda_ = lambdas_;
  node_alpha_.push_back(schedule.alpha(0));
  node_sigma_.push_back(schedule.sigma(0));
  node_lambda_.push_back(schedule.lambda(0));
}

StepCoeffs StepPlan::coeffs(std::size_t i) const {
  if (i >= nfe()) throw std::out_of_range("step index " + std::to_string(i));
  StepCoeffs c;
  c.t = timesteps_[i];
  c.t_next = i + 1 < nfe() ? timesteps_[i + 1] : 0;
  c.alpha_t = node_alpha_[i];
  c.sigma_t = node_sigma_[i];
  c.alpha_next = node_alpha_[i + 1];
  c.sigma_next = node_sigma_[i + 1];
  c.h = node_lambda_[i + 1] - node_lambda_[i];
  if (i > 0) c.h_prev = node_lambda_[i] - node_lambda_[i - 1];
  c.e_mh = std::exp(-c.h);
  c.a0 = 1.0 - c.e_mh;
  c.a1 = a1_coeff(c.h);
  return c;
}

StepPlan respace(const Schedule& schedule, std::size_t nfe) {
  const std::size_t n = schedule.n_train_steps();
  if (nfe < 2 || nfe > n) {
    throw ConfigError("nfe", "must lie in [2, " + std::to_string(n) + "], got " +
                                 std::to_string(nfe));
  }
  const std::size_t stride = n / nfe;
  std::vector<std::size_t> ts(nfe);
  for (std::size_t k = 0; k < nfe; ++k) ts[k] = n - 1 - k * stride;
  return StepPlan(schedule, std::move(ts));
}

double exp_mh_identity_check(const Schedule& schedule, std::size_t t, std::size_t t_next) {
  const double h = schedule.lambda(t_next) - schedule.lambda(t);
  const double ratio = schedule.alpha(t) * schedule.sigma(t_next) /
                       (schedule.alpha(t_next) * schedule.sigma(t));
  return std::abs(std::exp(-h) - ratio);
}

}  // namespace lamp
