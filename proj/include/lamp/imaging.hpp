#pragma once

#include <cstdint>

#include "lamp/linops.hpp"
#include "lamp/priors.hpp"
#include "lamp/tensor.hpp"

namespace lamp {

/// y = K x0 + sigma_y z with z ~ N(0, I) drawn from `seed`.
Image degrade(const Image& x0, const SpectralOperator& op, double sigma_y, std::uint64_t seed);

/// 10 log10(1 / MSE) for peak 1; +infinity when the images are identical.
double psnr(const Image& x, const Image& ref);

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Mean SSIM over all window positions fully inside the image (11x11
/// Gaussian window, sigma 1.5, K1 = 0.01, K2 = 0.03, data range 1),
/// averaged over channels. Throws ShapeError for images smaller than the window.
double ssim(const Image& x, const Image& ref);

Image clamp01(Image x);

/// Posterior mean of x0 given y = K x0 + N(0, sigma_y^2 I) under `prior`,
/// evaluated in the shared singular basis of `op` and the prior.
Image exact_posterior_mean(const GaussianPrior& prior, const SpectralOperator& op, const Image& y,
                           double sigma_y);

}  // namespace lamp
