#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <vector>

#include "lamp/linops.hpp"
#include "lamp/rng.hpp"
#include "lamp/schedule.hpp"
#include "lamp/tensor.hpp"

namespace lamp {

/// Noise predictor eps(x_t, t). Implementations are pure and shareable.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Image predict_eps(const Image& x_t, std::size_t t) const = 0;
};

using DenoiserPtr = std::shared_ptr<const Denoiser>;

/// (x_t - sigma * eps) / alpha
Image tweedie_from_eps(const Image& x_t, const Image& eps, double alpha, double sigma);
Image tweedie(const Denoiser& d, const Image& x_t, std::size_t t, const Schedule& schedule);
/// (x_t - alpha * x0) / sigma, the inverse of tweedie_from_eps.
Image eps_from_x0(const Image& x_t, const Image& x0, double alpha, double sigma);

/// Gaussian prior N(m, V diag(c) V^H) with covariance diagonal in the
/// right-singular basis V of `basis`. Its Tweedie estimate is exact.
class GaussianPrior final : public Denoiser {
 public:
  GaussianPrior(std::shared_ptr<const Schedule> schedule, OperatorPtr basis, Image mean,
                std::vector<double> spectral_var);

  Image predict_eps(const Image& x_t, std::size_t t) const override;
  /// E[x0 | x_t] = m + alpha C (alpha^2 C + sigma^2 I)^{-1} (x_t - alpha m).
  Image posterior_mean(const Image& x_t, double alpha, double sigma) const;
  /// Draw x0 ~ prior.
  Image sample(Rng& rng) const;

  const Image& mean() const { return mean_; }
  const std::vector<double>& spectral_var() const { return var_; }
  const SpectralOperator& basis() const { return *basis_; }

 private:
  std::shared_ptr<const Schedule> schedule_;
  OperatorPtr basis_;
  Image mean_;
  SpectralVector mean_bar_;
  std::vector<double> var_;
};

/// Mixture of Gaussians sharing one spectral-diagonal covariance.
class GmmPrior final : public Denoiser {
 public:
  struct Component {
    double weight;
    Image mean;
  };

  GmmPrior(std::shared_ptr<const Schedule> schedule, OperatorPtr basis,
           std::vector<Component> components, std::vector<double> spectral_var);

  Image predict_eps(const Image& x_t, std::size_t t) const override;
  Image posterior_mean(const Image& x_t, double alpha, double sigma) const;
  /// Posterior component probabilities, computed with log-sum-exp.
  std::vector<double> responsibilities(const Image& x_t, double alpha, double sigma) const;
  Image sample(Rng& rng) const;

  const std::vector<Component>& components() const { return components_; }

 private:
  std::shared_ptr<const Schedule> schedule_;
  OperatorPtr basis_;
  std::vector<Component> components_;
  std::vector<SpectralVector> means_bar_;
  std::vector<double> var_;
};

/// Reads eps for timestep t from `<dir>/eps_<t>.ltnsr`; ignores x_t.
class TabulatedDenoiser final : public Denoiser {
 public:
  explicit TabulatedDenoiser(std::filesystem::path dir) : dir_(std::move(dir)) {}
  Image predict_eps(const Image& x_t, std::size_t t) const override;

 private:
  std::filesystem::path dir_;
};

/// Forwards to another denoiser and counts evaluations.
class CountingDenoiser final : public Denoiser {
 public:
  explicit CountingDenoiser(DenoiserPtr inner) : inner_(std::move(inner)) {}
  Image predict_eps(const Image& x_t, std::size_t t) const override {
    ++count_;
    return inner_->predict_eps(x_t, t);
  }
  std::size_t count() const { return count_.load(); }
  void reset() { count_ = 0; }

 private:
  DenoiserPtr inner_;
  mutable std::atomic<std::size_t> count_{0};
};

/// c_i = scale * (1 + f_i^2)^(-exponent/2), f_i = coordinate_frequency(basis, i).
std::vector<double> power_law_variance(const SpectralOperator& basis, double scale,
                                       double exponent);

/// Radial frequency index of input spectral coordinate i: wrapped DFT
/// frequency for convolution bases, DCT frequency for block bases, and the
/// coordinate index for dense bases.
double coordinate_frequency(const SpectralOperator& basis, std::size_t i);

}  // namespace lamp
