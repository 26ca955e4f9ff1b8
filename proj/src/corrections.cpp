#include "lamp/corrections.hpp"

#include <cmath>

#include "lamp/errors.hpp"

namespace lamp {

std::string to_string(CorrectionKind k) {
  switch (k) {
    case CorrectionKind::identity: return "identity";
    case CorrectionKind::diffpir: return "diffpir";
    case CorrectionKind::ddrm: return "ddrm";
  }
  return "unknown";
}

CorrectionKind correction_kind_from_string(const std::string& s) {
  if (s == "identity") return CorrectionKind::identity;
  if (s == "diffpir") return CorrectionKind::diffpir;
  if (s == "ddrm") return CorrectionKind::ddrm;
  throw ConfigError("kind", "unknown correction kind '" + s + "' (expected identity, diffpir, ddrm)");
}

void CorrectionConfig::validate() const {
  if (!(sigma_y >= 0.0) || !std::isfinite(sigma_y)) throw ConfigError("sigma_y", "must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta", "must lie in [0,1]");
  if (!(eta_b >= 0.0 && eta_b <= 1.0)) throw ConfigError("eta_b", "must lie in [0,1]");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("mu", "must be finite and >= 0");
  if (!std::isfinite(zeta)) throw ConfigError("zeta", "must be finite");
}

DdrmRegime ddrm_regime(double a, double n_t, double n_0) {
  if (a == 0.0) return DdrmRegime::unobserved;
  if (n_0 == 0.0) return n_t > 0.0 ? DdrmRegime::replace : DdrmRegime::unobserved;
  return a * n_t > n_0 ? DdrmRegime::replace : DdrmRegime::residual;
}

std::complex<double> ddrm_component(double a, double n_t, double n_0, double eta, double eta_b,
                                    std::complex<double> x_bar, std::complex<double> y_bar) {
  switch (ddrm_regime(a, n_t, n_0)) {
    case DdrmRegime::unobserved: return x_bar;
    case DdrmRegime::replace: return eta_b * (y_bar / a) + (1.0 - eta_b) * x_bar;
    case DdrmRegime::residual: {
      const double n_tilde = n_t * std::sqrt(1.0 - eta * eta);
      return x_bar + n_tilde * (y_bar - a * x_bar) / n_0;
    }
  }
  return x_bar;
}

Image correct_identity(const Image& x0hat) { return x0hat; }

Image correct_diffpir(const Image& x0hat, const Image& y, const SpectralOperator& op, double mu) {
  if (mu < 0.0) throw ConfigError("mu", "must be >= 0");
  const auto xb = op.to_spectral(x0hat);
  const auto yb = op.to_spectral_out(y);
  const auto& a = op.spectrum();
  if (mu == 0.0) {
    for (std::size_t i = 0; i < op.in_dim(); ++i) {
      if (i >= op.paired_dim() || !(a[i] > op.zero_tolerance())) {
        throw SingularError("diffpir: mu = 0 with a rank-deficient operator");
      }
    }
  }
  SpectralVector db = xb;
  for (std::size_t i = 0; i < op.paired_dim(); ++i) {
    if (a[i] > op.zero_tolerance()) db[i] = (a[i] * yb[i] + mu * xb[i]) / (a[i] * a[i] + mu);
  }
  return op.from_spectral(db);
}

Image correct_ddrm(const Image& x0hat, const Image& y, const SpectralOperator& op, double n_t,
                   double n_0, double eta, double eta_b) {
  const auto xb = op.to_spectral(x0hat);
  const auto yb = op.to_spectral_out(y);
  const auto& a = op.spectrum();
  SpectralVector db = xb;
  for (std::size_t i = 0; i < op.paired_dim(); ++i) {
    const double ai = a[i] > op.zero_tolerance() ? a[i] : 0.0;
    db[i] = ddrm_component(ai, n_t, n_0, eta, eta_b, xb[i], yb[i]);
  }
  return op.from_spectral(db);
}

std::vector<DdrmRegime> ddrm_regimes(const SpectralOperator& op, double n_t, double n_0) {
  std::vector<DdrmRegime> out(op.in_dim(), DdrmRegime::unobserved);
  const auto& a = op.spectrum();
  for (std::size_t i = 0; i < op.paired_dim(); ++i) {
    out[i] = ddrm_regime(a[i] > op.zero_tolerance() ? a[i] : 0.0, n_t, n_0);
  }
  return out;
}

Image lag_filter(const Image& d, const Image& d_prev, double beta) {
  return axpby(1.0 - beta, d, beta, d_prev);
}

Correction::Correction(CorrectionConfig cfg, OperatorPtr op, Image y,
                       std::shared_ptr<const Schedule> schedule)
    : cfg_(cfg), op_(std::move(op)), y_(std::move(y)), schedule_(std::move(schedule)) {
  cfg_.validate();
  if (y_.shape() != op_->out_shape()) {
    throw ShapeError("correction: measurement shape " + y_.shape().str() + " does not match " +
                     op_->out_shape().str());
  }
}

Image Correction::operator()(const Image& x0hat, std::size_t t) const {
  switch (cfg_.kind) {
    case CorrectionKind::identity: return correct_identity(x0hat);
    case CorrectionKind::diffpir: return correct_diffpir(x0hat, y_, *op_, cfg_.mu);
    case CorrectionKind::ddrm:
      return correct_ddrm(x0hat, y_, *op_, schedule_->noise_level(t), cfg_.sigma_y, cfg_.eta,
                          cfg_.eta_b);
  }
  return x0hat;
}

}  // namespace lamp
