#include "lamp/samplers.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "lamp/errors.hpp"
#include "lamp/rng.hpp"

namespace lamp {

std::string to_string(Method m) {
  switch (m) {
    case Method::ps: return "ps";
    case Method::one_m: return "one_m";
    case Method::two_m: return "two_m";
    case Method::lamp: return "lamp";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "ps") return Method::ps;
  if (s == "one_m" || s == "1m") return Method::one_m;
  if (s == "two_m" || s == "2m") return Method::two_m;
  if (s == "lamp") return Method::lamp;
  throw ConfigError("method", "unknown sampler method '" + s + "' (expected ps, one_m, two_m, lamp)");
}

std::string to_string(BetaMode m) {
  return m == BetaMode::from_gamma ? "from_gamma" : "constant";
}

BetaMode beta_mode_from_string(const std::string& s) {
  if (s == "from_gamma") return BetaMode::from_gamma;
  if (s == "constant") return BetaMode::constant;
  throw ConfigError("beta_mode", "expected from_gamma or constant, got '" + s + "'");
}

void SamplerConfig::validate(std::size_t nfe) const {
  if (!std::isfinite(gamma)) throw ConfigError("gamma", "must be finite");
  if (!std::isfinite(beta)) throw ConfigError("beta", "must be finite");
  if (n_warm >= nfe) {
    throw ConfigError("n_warm", "must be smaller than nfe (" + std::to_string(nfe) + ")");
  }
}

StepInputs prepare_step(const SamplerState& state, const StepPlan& plan, const Denoiser& denoiser,
                        const Correction& correction) {
  StepInputs in;
  in.i = state.i;
  in.c = plan.coeffs(state.i);
  in.x = state.x;
  in.eps = denoiser.predict_eps(state.x, in.c.t);
  in.x0hat = tweedie_from_eps(state.x, in.eps, in.c.alpha_t, in.c.sigma_t);
  in.d = correction(in.x0hat, in.c.t);
  in.d_prev = state.d_prev ? &*state.d_prev : nullptr;
  return in;
}

Image ddim_update(const StepInputs& in) {
  return axpby(in.c.alpha_next, in.x0hat, in.c.sigma_next, in.eps);
}

Image ddim_exponential_update(const StepInputs& in) {
  return axpby(in.c.sigma_next / in.c.sigma_t, in.x, in.c.alpha_next * in.c.a0, in.x0hat);
}

Image ps_update(const StepInputs& in) {
  return axpby(in.c.alpha_next, in.d, in.c.sigma_next, in.eps);
}

Image ps_decomposed_update(const StepInputs& in) {
  Image out = one_m_update(in);
  out += axpby(in.c.alpha_next * in.c.e_mh, in.d, -in.c.alpha_next * in.c.e_mh, in.x0hat);
  return out;
}

Image one_m_update(const StepInputs& in) {
  return axpby(in.c.sigma_next / in.c.sigma_t, in.x, in.c.alpha_next * in.c.a0, in.d);
}

namespace {

// alpha_next A1(h) gamma (D - D_prev) / h_prev
Image temporal_term(const StepInputs& in, double gamma) {
  const double w = in.c.alpha_next * in.c.a1 * gamma / *in.c.h_prev;
  return axpby(w, in.d, -w, *in.d_prev);
}

bool has_history(const StepInputs& in) { return in.d_prev != nullptr && in.c.h_prev.has_value(); }

}  // namespace

Image two_m_update(const StepInputs& in, double gamma) {
  Image out = one_m_update(in);
  if (has_history(in)) out += temporal_term(in, gamma);
  return out;
}

Image second_order_generation_update(const StepCoeffs& c, const Image& x, const Image& x0hat,
                                     const Image& x0hat_prev, double gamma) {
  Image out = axpby(c.sigma_next / c.sigma_t, x, c.alpha_next * c.a0, x0hat);
  if (c.h_prev) {
    const double w = c.alpha_next * c.a1 * gamma / *c.h_prev;
    out += axpby(w, x0hat, -w, x0hat_prev);
  }
  return out;
}

double lamp_beta(const StepCoeffs& c, double gamma) {
  if (!c.h_prev) return 0.0;
  return -gamma * c.a1 / *c.h_prev;
}

Image lamp_update_from_two_m(const StepInputs& in, double gamma) {
  Image out = two_m_update(in, gamma);
  out += axpby(in.c.alpha_next * in.c.e_mh, in.d, -in.c.alpha_next * in.c.e_mh, in.x0hat);
  return out;
}

Image lamp_update_from_ps(const StepInputs& in, double gamma) {
  Image out = ps_update(in);
  if (has_history(in)) out += temporal_term(in, gamma);
  return out;
}

Image lamp_update_filtered(const StepInputs& in, double beta) {
  if (in.d_prev == nullptr) return ps_update(in);
  return axpby(in.c.alpha_next, lag_filter(in.d, *in.d_prev, beta), in.c.sigma_next, in.eps);
}

bool lamp_active(const SamplerConfig& cfg, const StepInputs& in) {
  return in.i > cfg.n_warm && has_history(in);
}

namespace {

StepOutcome finish(const StepInputs& in, Image x_next) {
  if (!all_finite(x_next)) {
    throw NumericalError("non-finite state after reverse step " + std::to_string(in.i) +
                         " (t=" + std::to_string(in.c.t) + ")");
  }
  StepOutcome out;
  out.next.x = std::move(x_next);
  out.next.d_prev = in.d;
  out.next.i = in.i + 1;
  return out;
}

double lamp_step_beta(const SamplerConfig& cfg, const StepInputs& in) {
  return cfg.beta_mode == BetaMode::constant ? cfg.beta : lamp_beta(in.c, cfg.gamma);
}

Image advance(const SamplerConfig& cfg, const StepInputs& in, double* beta_out, bool* lamp_out) {
  *beta_out = 0.0;
  *lamp_out = false;
  switch (cfg.method) {
    case Method::ps: return ps_update(in);
    case Method::one_m: return one_m_update(in);
    case Method::two_m: return two_m_update(in, cfg.gamma);
    case Method::lamp:
      if (!lamp_active(cfg, in)) return ps_update(in);
      *lamp_out = true;
      *beta_out = lamp_step_beta(cfg, in);
      return lamp_update_filtered(in, *beta_out);
  }
  return ps_update(in);
}

StepOutcome run_step(const SamplerConfig& cfg, const SamplerState& s, const StepPlan& plan,
                     const Denoiser& den, const Correction& corr) {
  const StepInputs in = prepare_step(s, plan, den, corr);
  double beta = 0.0;
  bool lamp = false;
  StepOutcome out = finish(in, advance(cfg, in, &beta, &lamp));
  out.beta = beta;
  out.lamp_branch = lamp;
  return out;
}

}  // namespace

StepOutcome step_ps(const SamplerState& s, const StepPlan& plan, const Denoiser& den,
                    const Correction& corr) {
  return run_step(SamplerConfig{.method = Method::ps}, s, plan, den, corr);
}

StepOutcome step_1m(const SamplerState& s, const StepPlan& plan, const Denoiser& den,
                    const Correction& corr) {
  return run_step(SamplerConfig{.method = Method::one_m}, s, plan, den, corr);
}

StepOutcome step_2m(const SamplerState& s, const StepPlan& plan, const Denoiser& den,
                    const Correction& corr, double gamma) {
  return run_step(SamplerConfig{.method = Method::two_m, .gamma = gamma}, s, plan, den, corr);
}

StepOutcome step_lamp(const SamplerState& s, const StepPlan& plan, const Denoiser& den,
                      const Correction& corr, const SamplerConfig& cfg) {
  SamplerConfig c = cfg;
  c.method = Method::lamp;
  return run_step(c, s, plan, den, corr);
}

Trajectory run_trajectory(const SamplerConfig& cfg, const StepPlan& plan, const Denoiser& den,
                          const Correction& corr, Image x_T) {
  cfg.validate(plan.nfe());
  Trajectory traj;
  SamplerState state{std::move(x_T), std::nullopt, 0};
  double beta_sum = 0.0;
  std::size_t beta_count = 0;
  for (std::size_t i = 0; i < plan.nfe(); ++i) {
    const StepInputs in = prepare_step(state, plan, den, corr);
    ++traj.denoiser_calls;

    StepRecord rec;
    rec.step = i;
    rec.t = in.c.t;
    rec.h = in.c.h;
    rec.h_prev = in.c.h_prev;
    rec.res_norm = norm2(in.d - in.x0hat);
    if (in.d_prev) rec.temporal_norm = norm2(in.d - *in.d_prev);
    rec.ps_decomposition_dev = max_abs_diff(ps_update(in), ps_decomposed_update(in));
    traj.max_ps_decomposition_dev = std::max(traj.max_ps_decomposition_dev, rec.ps_decomposition_dev);

    double beta = 0.0;
    bool lamp = false;
    Image x_next = advance(cfg, in, &beta, &lamp);
    rec.beta = beta;
    if (lamp) {
      beta_sum += beta;
      ++beta_count;
      if (cfg.beta_mode == BetaMode::from_gamma) {
        const Image a = lamp_update_from_two_m(in, cfg.gamma);
        const Image b = lamp_update_from_ps(in, cfg.gamma);
        const double dev = std::max({max_abs_diff(a, b), max_abs_diff(a, x_next),
                                     max_abs_diff(b, x_next)});
        rec.lamp_form_dev = dev;
        traj.max_lamp_form_dev = std::max(traj.max_lamp_form_dev, dev);
      }
    }
    traj.log.push_back(rec);
    state = finish(in, std::move(x_next)).next;
  }
  traj.mean_beta = beta_count ? beta_sum / static_cast<double>(beta_count) : 0.0;
  traj.x0 = std::move(state.x);
  return traj;
}

Trajectory run_trajectory(const SamplerConfig& cfg, const StepPlan& plan, const Denoiser& den,
                          const Correction& corr, Shape shape, std::uint64_t seed) {
  return run_trajectory(cfg, plan, den, corr, standard_normal(shape, seed));
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

}  // namespace

void write_step_log(std::ostream& os, const std::vector<StepRecord>& log) {
  os << "step,t,h,h_prev,beta_t,res_norm,temporal_norm\n";
  for (const auto& r : log) {
    os << r.step << ',' << r.t << ',' << fmt_double(r.h) << ',' << fmt_opt(r.h_prev) << ','
       << fmt_double(r.beta) << ',' << fmt_double(r.res_norm) << ',' << fmt_opt(r.temporal_norm)
       << '\n';
  }
}

}  // namespace lamp
