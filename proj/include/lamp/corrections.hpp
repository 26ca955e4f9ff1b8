#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "lamp/linops.hpp"
#include "lamp/schedule.hpp"
#include "lamp/tensor.hpp"

namespace lamp {

enum class CorrectionKind { identity, diffpir, ddrm };

std::string to_string(CorrectionKind k);
CorrectionKind correction_kind_from_string(const std::string& s);

struct CorrectionConfig {
  CorrectionKind kind = CorrectionKind::identity;
  double sigma_y = 0.0;  // measurement noise std n_0
  double mu = 7.0;       // DiffPIR proximal weight, constant over t
  double eta = 0.85;     // DDRM stochasticity
  double eta_b = 1.0;    // DDRM replacement strength
  double zeta = 0.0;     // DiffPIR mixing; recorded, unused by the deterministic sampler

  /// Throws ConfigError naming the first out-of-range field.
  void validate() const;
};

enum class DdrmRegime { unobserved, replace, residual };

/// Regime of one spectral component for singular value a (already compared
/// against the zero tolerance: pass a = 0 for null-space components).
DdrmRegime ddrm_regime(double a, double n_t, double n_0);

/// Componentwise DDRM target for one spectral coordinate.
std::complex<double> ddrm_component(double a, double n_t, double n_0, double eta, double eta_b,
                                    std::complex<double> x_bar, std::complex<double> y_bar);

Image correct_identity(const Image& x0hat);

/// argmin_x 1/2 |y - Kx|^2 + mu/2 |x - x0hat|^2, solved per spectral
/// component. mu = 0 requires K to have full column rank.
Image correct_diffpir(const Image& x0hat, const Image& y, const SpectralOperator& op, double mu);

/// Deterministic DDRM target with n_t = sigma_t / alpha_t and n_0 = sigma_y.
Image correct_ddrm(const Image& x0hat, const Image& y, const SpectralOperator& op, double n_t,
                   double n_0, double eta, double eta_b);

/// Regime of every input spectral coordinate at noise level n_t.
std::vector<DdrmRegime> ddrm_regimes(const SpectralOperator& op, double n_t, double n_0);

/// (1 - beta) d + beta d_prev
Image lag_filter(const Image& d, const Image& d_prev, double beta);

/// Measurement-aware estimate D_t = C_t(x0hat, y, K) bound to one problem.
class Correction {
 public:
  Correction(CorrectionConfig cfg, OperatorPtr op, Image y,
             std::shared_ptr<const Schedule> schedule);

  Image operator()(const Image& x0hat, std::size_t t) const;

  const CorrectionConfig& config() const { return cfg_; }
  const SpectralOperator& op() const { return *op_; }
  const Image& measurement() const { return y_; }

 private:
  CorrectionConfig cfg_;
  OperatorPtr op_;
  Image y_;
  std::shared_ptr<const Schedule> schedule_;
};

}  // namespace lamp
