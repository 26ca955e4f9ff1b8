#include "lamp/priors.hpp"

#include <cmath>
#include <limits>

#include "lamp/errors.hpp"
#include "lamp/tensor_io.hpp"

namespace lamp {

Image tweedie_from_eps(const Image& x_t, const Image& eps, double alpha, double sigma) {
  require_same_shape(x_t, eps, "tweedie");
  Image out(x_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - sigma * eps[i]) / alpha;
  return out;
}

Image tweedie(const Denoiser& d, const Image& x_t, std::size_t t, const Schedule& schedule) {
  return tweedie_from_eps(x_t, d.predict_eps(x_t, t), schedule.alpha(t), schedule.sigma(t));
}

Image eps_from_x0(const Image& x_t, const Image& x0, double alpha, double sigma) {
  require_same_shape(x_t, x0, "eps_from_x0");
  Image out(x_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - alpha * x0[i]) / sigma;
  return out;
}

namespace {

void check_var(const std::vector<double>& var, const SpectralOperator& basis, const char* who) {
  if (var.size() != basis.in_dim()) {
    throw ConfigError("spectral_var", std::string(who) + ": expected " +
                                          std::to_string(basis.in_dim()) + " variances, got " +
                                          std::to_string(var.size()));
  }
  for (double c : var) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("spectral_var", "must be finite and >= 0");
  }
}

// Componentwise Gaussian posterior mean in spectral coordinates.
SpectralVector shrink(const SpectralVector& xb, const SpectralVector& mb,
                      const std::vector<double>& var, double alpha, double sigma) {
  SpectralVector out(xb.size());
  const double s2 = sigma * sigma;
  for (std::size_t i = 0; i < xb.size(); ++i) {
    const double denom = alpha * alpha * var[i] + s2;
    const double gain = denom > 0.0 ? alpha * var[i] / denom : 1.0 / alpha;
    out[i] = mb[i] + gain * (xb[i] - alpha * mb[i]);
  }
  return out;
}

Image sample_gaussian(const SpectralOperator& basis, const Image& mean,
                      const std::vector<double>& var, Rng& rng) {
  auto zb = basis.to_spectral(standard_normal(mean.shape(), rng));
  for (std::size_t i = 0; i < zb.size(); ++i) zb[i] *= std::sqrt(var[i]);
  return mean + basis.from_spectral(zb);
}

}  // namespace

// ---------------------------------------------------------------- Gaussian

GaussianPrior::GaussianPrior(std::shared_ptr<const Schedule> schedule, OperatorPtr basis,
                             Image mean, std::vector<double> spectral_var)
    : schedule_(std::move(schedule)),
      basis_(std::move(basis)),
      mean_(std::move(mean)),
      var_(std::move(spectral_var)) {
  if (mean_.shape() != basis_->in_shape()) throw ShapeError("GaussianPrior: mean shape mismatch");
  check_var(var_, *basis_, "GaussianPrior");
  mean_bar_ = basis_->to_spectral(mean_);
}

Image GaussianPrior::posterior_mean(const Image& x_t, double alpha, double sigma) const {
  return basis_->from_spectral(shrink(basis_->to_spectral(x_t), mean_bar_, var_, alpha, sigma));
}

Image GaussianPrior::predict_eps(const Image& x_t, std::size_t t) const {
  const double a = schedule_->alpha(t), s = schedule_->sigma(t);
  return eps_from_x0(x_t, posterior_mean(x_t, a, s), a, s);
}

Image GaussianPrior::sample(Rng& rng) const { return sample_gaussian(*basis_, mean_, var_, rng); }

// ---------------------------------------------------------------- GMM

GmmPrior::GmmPrior(std::shared_ptr<const Schedule> schedule, OperatorPtr basis,
                   std::vector<Component> components, std::vector<double> spectral_var)
    : schedule_(std::move(schedule)),
      basis_(std::move(basis)),
      components_(std::move(components)),
      var_(std::move(spectral_var)) {
  if (components_.empty()) throw ConfigError("components", "GMM needs at least one component");
  check_var(var_, *basis_, "GmmPrior");
  double wsum = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0)) throw ConfigError("weight", "component weights must be > 0");
    if (c.mean.shape() != basis_->in_shape()) throw ShapeError("GmmPrior: mean shape mismatch");
    wsum += c.weight;
  }
  for (auto& c : components_) {
    c.weight /= wsum;
    means_bar_.push_back(basis_->to_spectral(c.mean));
  }
}

std::vector<double> GmmPrior::responsibilities(const Image& x_t, double alpha,
                                               double sigma) const {
  const auto xb = basis_->to_spectral(x_t);
  const double s2 = sigma * sigma;
  std::vector<double> logp(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    double q = 0.0;
    for (std::size_t i = 0; i < xb.size(); ++i) {
      const double denom = alpha * alpha * var_[i] + s2;
      const double d = std::norm(xb[i] - alpha * means_bar_[k][i]);
      if (denom > 0.0) {
        q += d / denom;
      } else if (d > 0.0) {
        q = std::numeric_limits<double>::infinity();
      }
    }
    // Shared covariance: the log-determinant cancels across components.
    logp[k] = std::log(components_[k].weight) - 0.5 * q;
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logp) mx = std::max(mx, v);
  double z = 0.0;
  for (double& v : logp) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : logp) v /= z;
  return logp;
}

Image GmmPrior::posterior_mean(const Image& x_t, double alpha, double sigma) const {
  const auto r = responsibilities(x_t, alpha, sigma);
  const auto xb = basis_->to_spectral(x_t);
  SpectralVector acc(xb.size(), 0.0);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto mk = shrink(xb, means_bar_[k], var_, alpha, sigma);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += r[k] * mk[i];
  }
  return basis_->from_spectral(acc);
}

Image GmmPrior::predict_eps(const Image& x_t, std::size_t t) const {
  const double a = schedule_->alpha(t), s = schedule_->sigma(t);
  return eps_from_x0(x_t, posterior_mean(x_t, a, s), a, s);
}

Image GmmPrior::sample(Rng& rng) const {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng);
  std::size_t k = 0;
  double cum = components_[0].weight;
  while (u > cum && k + 1 < components_.size()) cum += components_[++k].weight;
  return sample_gaussian(*basis_, components_[k].mean, var_, rng);
}

// ---------------------------------------------------------------- tabulated

Image TabulatedDenoiser::predict_eps(const Image& x_t, std::size_t t) const {
  const auto path = dir_ / ("eps_" + std::to_string(t) + ".ltnsr");
  Image eps = read_image(path);
  if (eps.shape() != x_t.shape()) throw ShapeError("tabulated eps shape mismatch in " + path.string());
  return eps;
}

// ---------------------------------------------------------------- helpers

double coordinate_frequency(const SpectralOperator& basis, std::size_t i) {
  switch (basis.kind()) {
    case OperatorKind::gaussian_blur:
    case OperatorKind::motion_blur: {
      const Shape& s = basis.in_shape();
      const std::size_t k = i % s.plane();
      const auto wrap = [](std::size_t idx, std::size_t n) {
        const auto v = static_cast<double>(idx);
        return idx <= n / 2 ? v : v - static_cast<double>(n);
      };
      const double fy = wrap(k / s.width, s.height);
      const double fx = wrap(k % s.width, s.width);
      return std::sqrt(fy * fy + fx * fx);
    }
    case OperatorKind::block_sr: {
      const auto& op = dynamic_cast<const BlockAverageOperator&>(basis);
      const std::size_t r = op.factor();
      if (i < op.out_dim() || r == 1) return 0.0;
      const std::size_t basis_idx = (i - op.out_dim()) % (r * r - 1) + 1;
      const auto u = static_cast<double>(basis_idx / r), v = static_cast<double>(basis_idx % r);
      return std::sqrt(u * u + v * v);
    }
    case OperatorKind::dense: return static_cast<double>(i);
  }
  return 0.0;
}

std::vector<double> power_law_variance(const SpectralOperator& basis, double scale,
                                       double exponent) {
  if (!(scale >= 0.0)) throw ConfigError("scale", "must be >= 0");
  std::vector<double> var(basis.in_dim());
  for (std::size_t i = 0; i < var.size(); ++i) {
    const double f = coordinate_frequency(basis, i);
    var[i] = scale * std::pow(1.0 + f * f, -exponent / 2.0);
  }
  return var;
}

}  // namespace lamp
