#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lamp/corrections.hpp"
#include "lamp/priors.hpp"
#include "lamp/schedule.hpp"
#include "lamp/tensor.hpp"

namespace lamp {

enum class Method { ps, one_m, two_m, lamp };
enum class BetaMode { from_gamma, constant };

std::string to_string(Method m);
Method method_from_string(const std::string& s);
std::string to_string(BetaMode m);
BetaMode beta_mode_from_string(const std::string& s);

struct SamplerConfig {
  Method method = Method::ps;
  /// Temporal coefficient of the multistep term; gamma < 0 lags.
  double gamma = 0.0;
  /// LAMP runs the base posterior update while step index <= n_warm.
  std::size_t n_warm = 0;
  BetaMode beta_mode = BetaMode::from_gamma;
  /// Lag weight used when beta_mode == constant.
  double beta = 0.0;

  void validate(std::size_t nfe) const;
};

struct SamplerState {
  Image x;
  std::optional<Image> d_prev;
  std::size_t i = 0;
};

/// Everything one reverse step needs after the single denoiser call.
struct StepInputs {
  std::size_t i = 0;
  StepCoeffs c;
  Image x;
  Image eps;
  Image x0hat;
  Image d;
  const Image* d_prev = nullptr;
};

StepInputs prepare_step(const SamplerState& state, const StepPlan& plan, const Denoiser& denoiser,
                        const Correction& correction);

// Update formulas. All take the same inputs so alternative forms can be
// compared term by term.

/// alpha_next x0hat + sigma_next eps
Image ddim_update(const StepInputs& in);
/// (sigma_next/sigma_t) x + alpha_next A0(h) x0hat
Image ddim_exponential_update(const StepInputs& in);
/// alpha_next D + sigma_next eps
Image ps_update(const StepInputs& in);
/// 1M step plus residual forcing alpha_next e^{-h} (D - x0hat).
Image ps_decomposed_update(const StepInputs& in);
/// (sigma_next/sigma_t) x + alpha_next A0(h) D
Image one_m_update(const StepInputs& in);
/// 1M + alpha_next A1(h) gamma (D - D_prev)/h_prev; 1M when no history.
Image two_m_update(const StepInputs& in, double gamma);
/// Unconditional second-order exponential step on x0hat estimates.
Image second_order_generation_update(const StepCoeffs& c, const Image& x, const Image& x0hat,
                                     const Image& x0hat_prev, double gamma);

/// -gamma A1(h) / h_prev; 0 when there is no previous step.
double lamp_beta(const StepCoeffs& c, double gamma);
/// 2M update plus residual forcing.
Image lamp_update_from_two_m(const StepInputs& in, double gamma);
/// PS update plus the temporal term.
Image lamp_update_from_ps(const StepInputs& in, double gamma);
/// Posterior update on the filtered target (1-beta) D + beta D_prev.
Image lamp_update_filtered(const StepInputs& in, double beta);

/// True when LAMP's lagged branch applies: i > n_warm and a previous
/// corrected estimate exists.
bool lamp_active(const SamplerConfig& cfg, const StepInputs& in);

/// Result of one reverse step.
struct StepOutcome {
  SamplerState next;
  double beta = 0.0;
  bool lamp_branch = false;
};

StepOutcome step_ps(const SamplerState& s, const StepPlan& plan, const Denoiser& den,
                    const Correction& corr);
StepOutcome step_1m(const SamplerState& s, const StepPlan& plan, const Denoiser& den,
                    const Correction& corr);
StepOutcome step_2m(const SamplerState& s, const StepPlan& plan, const Denoiser& den,
                    const Correction& corr, double gamma);
StepOutcome step_lamp(const SamplerState& s, const StepPlan& plan, const Denoiser& den,
                      const Correction& corr, const SamplerConfig& cfg);

struct StepRecord {
  std::size_t step = 0;
  std::size_t t = 0;
  double h = 0.0;
  std::optional<double> h_prev;
  double beta = 0.0;
  double res_norm = 0.0;                 // |D - x0hat|
  std::optional<double> temporal_norm;   // |D - D_prev|
  double ps_decomposition_dev = 0.0;     // max |ps - ps_decomposed|
  std::optional<double> lamp_form_dev;   // max pairwise deviation of the three LAMP forms
};

struct Trajectory {
  Image x0;
  std::vector<StepRecord> log;
  std::size_t denoiser_calls = 0;
  double max_ps_decomposition_dev = 0.0;
  double max_lamp_form_dev = 0.0;
  double mean_beta = 0.0;
};

/// Runs the configured stepper over the whole plan from x_T.
/// Throws NumericalError naming the step if the state turns non-finite.
Trajectory run_trajectory(const SamplerConfig& cfg, const StepPlan& plan, const Denoiser& den,
                          const Correction& corr, Image x_T);
/// Draws x_T ~ N(0, I) from `seed`.
Trajectory run_trajectory(const SamplerConfig& cfg, const StepPlan& plan, const Denoiser& den,
                          const Correction& corr, Shape shape, std::uint64_t seed);

/// CSV columns: step,t,h,h_prev,beta_t,res_norm,temporal_norm
void write_step_log(std::ostream& os, const std::vector<StepRecord>& log);

}  // namespace lamp
