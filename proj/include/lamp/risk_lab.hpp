#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace lamp::risk {

/// Local error model D_t = mu_t + eta_t, D_{t+dt} = mu_{t+dt} + eta_{t+dt}
/// with diagonal covariances.
///
/// Equal-variance form: Var(eta_next) = Var(eta) = diag(sigma_diag),
/// Cov(eta, eta_next) = rho diag(sigma_diag). Setting sigma_diag_next and
/// cov_cross_diag switches to the general form and rho is ignored.
struct ErrorModel {
  std::vector<double> sigma_diag;
  double rho = 0.0;
  std::vector<double> r;  // mu_{t+dt} - mu_t
  std::optional<std::vector<double>> sigma_diag_next;
  std::optional<std::vector<double>> cov_cross_diag;

  std::size_t dim() const { return sigma_diag.size(); }
  bool generalized() const { return sigma_diag_next.has_value(); }
  double var_next(std::size_t i) const;
  double cross(std::size_t i) const;
  double trace_sigma() const;
  double trace_sigma_next() const;
  double trace_cross() const;
  double drift_sq() const;

  /// Throws ConfigError for non-positive variances, rho outside [0,1),
  /// mismatched lengths or a non-PSD 2x2 block.
  void validate() const;
};

/// Paired draws, row-major (trial, component).
struct ErrorDraws {
  std::size_t n_trials = 0;
  std::size_t dim = 0;
  std::vector<double> eta;
  std::vector<double> eta_next;
};

ErrorDraws sample_errors(const ErrorModel& model, std::size_t n_trials, std::uint64_t seed);

/// Estimator-level risks (alpha_{t-dt}^2 factored out) with standard errors.
struct RiskEstimate {
  double risk_ps = 0.0;
  double se_ps = 0.0;
  double risk_lamp = 0.0;
  double se_lamp = 0.0;
};

RiskEstimate empirical_risks(const ErrorModel& model, const ErrorDraws& draws, double beta);
RiskEstimate empirical_risks(const ErrorModel& model, double beta, std::size_t n_trials,
                             std::uint64_t seed);

struct Risks {
  double risk_ps = 0.0;
  double risk_lamp = 0.0;
};

Risks closed_form_risks(const ErrorModel& model, double beta);

/// 1 - 2 beta (1 - beta) (1 - rho)
double variance_reduction_factor(double beta, double rho);

struct Condition {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// LAMP improves the one-step risk iff lhs < rhs. Requires beta > 0.
Condition improvement_condition(const ErrorModel& model, double beta);

struct SweepRow {
  double beta = 0.0;
  double risk_ps_cf = 0.0;
  double risk_lamp_cf = 0.0;
  double risk_lamp_mc = 0.0;
  double se = 0.0;
  std::optional<bool> condition_holds;  // absent for beta <= 0
};

struct Sweep {
  std::vector<SweepRow> rows;
  std::size_t argmin = 0;  // row with the smallest closed-form LAMP risk
};

Sweep sweep_beta(const ErrorModel& model, const std::vector<double>& beta_grid,
                 std::size_t n_trials, std::uint64_t seed);

/// Columns: beta,risk_ps_cf,risk_lamp_cf,risk_lamp_mc,se,condition_holds
void write_sweep_csv(std::ostream& os, const Sweep& sweep);

}  // namespace lamp::risk
