#include "lamp/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lamp/errors.hpp"
#include "lamp/rng.hpp"

namespace lamp {

Image degrade(const Image& x0, const SpectralOperator& op, double sigma_y, std::uint64_t seed) {
  if (!(sigma_y >= 0.0)) throw ConfigError("sigma_y", "must be >= 0");
  Image y = op.apply(x0);
  if (sigma_y > 0.0) y += sigma_y * standard_normal(y.shape(), seed);
  return y;
}

double psnr(const Image& x, const Image& ref) {
  const double m = mse(x, ref);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

namespace {

std::vector<double> gaussian_window() {
  std::vector<double> w(kSsimWindow);
  const double c = static_cast<double>(kSsimWindow / 2);
  double s = 0.0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - c;
    w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    s += w[i];
  }
  for (auto& v : w) v /= s;
  return w;
}

}  // namespace

double ssim(const Image& x, const Image& ref) {
  require_same_shape(x, ref, "ssim");
  const Shape& s = x.shape();
  if (s.height < kSsimWindow || s.width < kSsimWindow) {
    throw ShapeError("ssim: image " + s.str() + " smaller than the 11x11 window");
  }
  const auto w = gaussian_window();
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const std::size_t oh = s.height - kSsimWindow + 1, ow = s.width - kSsimWindow + 1;

  double total = 0.0;
  for (std::size_t c = 0; c < s.channels; ++c) {
    double acc = 0.0;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
        for (std::size_t i = 0; i < kSsimWindow; ++i) {
          for (std::size_t j = 0; j < kSsimWindow; ++j) {
            const double wt = w[i] * w[j];
            const double a = x.at(c, oy + i, ox + j), b = ref.at(c, oy + i, ox + j);
            mx += wt * a;
            my += wt * b;
            mxx += wt * a * a;
            myy += wt * b * b;
            mxy += wt * a * b;
          }
        }
        const double vx = mxx - mx * mx, vy = myy - my * my, cxy = mxy - mx * my;
        acc += ((2 * mx * my + c1) * (2 * cxy + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
    }
    total += acc / static_cast<double>(oh * ow);
  }
  return total / static_cast<double>(s.channels);
}

Image clamp01(Image x) {
  for (auto& v : x.data()) v = std::clamp(v, 0.0, 1.0);
  return x;
}

Image exact_posterior_mean(const GaussianPrior& prior, const SpectralOperator& op, const Image& y,
                           double sigma_y) {
  if (prior.basis().basis_id() != op.basis_id()) {
    throw ConfigError("prior", "prior covariance is not diagonal in the operator's basis (" +
                                   prior.basis().basis_id() + " vs " + op.basis_id() + ")");
  }
  if (!(sigma_y >= 0.0)) throw ConfigError("sigma_y", "must be >= 0");
  auto mb = op.to_spectral(prior.mean());
  const auto yb = op.to_spectral_out(y);
  const auto& a = op.spectrum();
  const auto& c = prior.spectral_var();
  const double s2 = sigma_y * sigma_y;
  for (std::size_t i = 0; i < op.paired_dim(); ++i) {
    if (!(a[i] > op.zero_tolerance())) continue;
    const double denom = a[i] * a[i] * c[i] + s2;
    if (denom > 0.0) mb[i] += c[i] * a[i] * (yb[i] - a[i] * mb[i]) / denom;
  }
  return op.from_spectral(mb);
}

}  // namespace lamp
