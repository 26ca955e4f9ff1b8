#include "lamp/risk_lab.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "lamp/errors.hpp"

namespace lamp::risk {

double ErrorModel::var_next(std::size_t i) const {
  return sigma_diag_next ? (*sigma_diag_next)[i] : sigma_diag[i];
}

double ErrorModel::cross(std::size_t i) const {
  if (generalized()) return cov_cross_diag ? (*cov_cross_diag)[i] : 0.0;
  return rho * sigma_diag[i];
}

double ErrorModel::trace_sigma() const {
  double s = 0.0;
  for (double v : sigma_diag) s += v;
  return s;
}

double ErrorModel::trace_sigma_next() const {
  double s = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) s += var_next(i);
  return s;
}

double ErrorModel::trace_cross() const {
  double s = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) s += cross(i);
  return s;
}

double ErrorModel::drift_sq() const {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

void ErrorModel::validate() const {
  if (sigma_diag.empty()) throw ConfigError("sigma_diag", "dimension must be positive");
  for (double v : sigma_diag) {
    if (!(v > 0.0)) throw ConfigError("sigma_diag", "variances must be > 0");
  }
  if (r.size() != dim()) throw ConfigError("r", "drift length differs from sigma_diag");
  if (!generalized()) {
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho", "must lie in [0,1)");
    return;
  }
  if (sigma_diag_next->size() != dim()) {
    throw ConfigError("sigma_diag_next", "length differs from sigma_diag");
  }
  if (cov_cross_diag && cov_cross_diag->size() != dim()) {
    throw ConfigError("cov_cross_diag", "length differs from sigma_diag");
  }
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!(var_next(i) >= 0.0)) throw ConfigError("sigma_diag_next", "variances must be >= 0");
    const double c = cross(i);
    if (c * c > sigma_diag[i] * var_next(i) * (1.0 + 1e-12)) {
      throw ConfigError("cov_cross_diag", "component " + std::to_string(i) +
                                              " covariance block is not positive semidefinite");
    }
  }
}

ErrorDraws sample_errors(const ErrorModel& model, std::size_t n_trials, std::uint64_t seed) {
  model.validate();
  if (n_trials == 0) throw ConfigError("n_trials", "must be >= 1");
  const std::size_t d = model.dim();
  std::vector<double> sd(d), load(d), resid(d);
  for (std::size_t i = 0; i < d; ++i) {
    sd[i] = std::sqrt(model.sigma_diag[i]);
    // eta_next = load * z1 + resid * z2 reproduces Var(eta_next) and the cross covariance.
    load[i] = model.cross(i) / sd[i];
    resid[i] = std::sqrt(std::max(0.0, model.var_next(i) - load[i] * load[i]));
  }
  ErrorDraws out{n_trials, d, std::vector<double>(n_trials * d), std::vector<double>(n_trials * d)};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (std::size_t k = 0; k < n_trials; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      const double z1 = n01(rng), z2 = n01(rng);
      out.eta[k * d + i] = sd[i] * z1;
      out.eta_next[k * d + i] = load[i] * z1 + resid[i] * z2;
    }
  }
  return out;
}

namespace {

struct MeanSe {
  double mean;
  double se;
};

MeanSe mean_se(const std::vector<double>& v) {
  const auto n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {m, std::sqrt(var / n)};
}

}  // namespace

RiskEstimate empirical_risks(const ErrorModel& model, const ErrorDraws& draws, double beta) {
  if (draws.dim != model.dim()) throw ConfigError("draws", "dimension differs from model");
  const std::size_t d = draws.dim;
  std::vector<double> q_ps(draws.n_trials), q_lamp(draws.n_trials);
  for (std::size_t k = 0; k < draws.n_trials; ++k) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double e = draws.eta[k * d + i];
      const double f = (1.0 - beta) * e + beta * draws.eta_next[k * d + i] + beta * model.r[i];
      a += e * e;
      b += f * f;
    }
    q_ps[k] = a;
    q_lamp[k] = b;
  }
  const auto ps = mean_se(q_ps), lamp = mean_se(q_lamp);
  return {ps.mean, ps.se, lamp.mean, lamp.se};
}

RiskEstimate empirical_risks(const ErrorModel& model, double beta, std::size_t n_trials,
                             std::uint64_t seed) {
  return empirical_risks(model, sample_errors(model, n_trials, seed), beta);
}

double variance_reduction_factor(double beta, double rho) {
  return 1.0 - 2.0 * beta * (1.0 - beta) * (1.0 - rho);
}

Risks closed_form_risks(const ErrorModel& model, double beta) {
  const double tr = model.trace_sigma();
  const double r2 = model.drift_sq();
  if (!model.generalized()) {
    return {tr, variance_reduction_factor(beta, model.rho) * tr + beta * beta * r2};
  }
  return {tr, beta * beta * r2 + (1.0 - beta) * (1.0 - beta) * tr +
                  beta * beta * model.trace_sigma_next() +
                  2.0 * beta * (1.0 - beta) * model.trace_cross()};
}

Condition improvement_condition(const ErrorModel& model, double beta) {
  if (!(beta > 0.0)) throw ConfigError("beta", "improvement condition requires beta > 0");
  const double tr = model.trace_sigma();
  const double r2 = model.drift_sq();
  Condition c;
  if (!model.generalized()) {
    c.lhs = beta * r2;
    c.rhs = 2.0 * (1.0 - beta) * (1.0 - model.rho) * tr;
  } else {
    c.lhs = beta * (r2 + tr + model.trace_sigma_next());
    c.rhs = 2.0 * (tr - (1.0 - beta) * model.trace_cross());
  }
  c.holds = c.lhs < c.rhs;
  return c;
}

Sweep sweep_beta(const ErrorModel& model, const std::vector<double>& beta_grid,
                 std::size_t n_trials, std::uint64_t seed) {
  if (beta_grid.empty()) throw ConfigError("beta_grid", "must not be empty");
  const ErrorDraws draws = sample_errors(model, n_trials, seed);
  Sweep sweep;
  for (double beta : beta_grid) {
    if (!std::isfinite(beta)) throw ConfigError("beta_grid", "values must be finite");
    const Risks cf = closed_form_risks(model, beta);
    const RiskEstimate mc = empirical_risks(model, draws, beta);
    SweepRow row{beta, cf.risk_ps, cf.risk_lamp, mc.risk_lamp, mc.se_lamp, std::nullopt};
    if (beta > 0.0) row.condition_holds = improvement_condition(model, beta).holds;
    sweep.rows.push_back(row);
  }
  for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
    if (sweep.rows[i].risk_lamp_cf < sweep.rows[sweep.argmin].risk_lamp_cf) sweep.argmin = i;
  }
  return sweep;
}

void write_sweep_csv(std::ostream& os, const Sweep& sweep) {
  os << "beta,risk_ps_cf,risk_lamp_cf,risk_lamp_mc,se,condition_holds\n";
  char buf[256];
  for (const auto& r : sweep.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,", r.beta, r.risk_ps_cf,
                  r.risk_lamp_cf, r.risk_lamp_mc, r.se);
    os << buf;
    if (r.condition_holds) os << (*r.condition_holds ? "true" : "false");
    os << '\n';
  }
}

}  // namespace lamp::risk
