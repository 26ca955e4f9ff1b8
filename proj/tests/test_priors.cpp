#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "lamp/errors.hpp"
#include "lamp/priors.hpp"
#include "lamp/rng.hpp"
#include "lamp/tensor_io.hpp"

using namespace lamp;

namespace {

const Shape scalar{1, 1, 1};

std::shared_ptr<const Schedule> linear() {
  static const auto s = std::make_shared<const Schedule>(Schedule::linear(1000));
  return s;
}

Image value(double v) { return Image(scalar, v); }

}  // namespace

TEST(Tweedie, ZeroNoiseReturnsInput) {
  const Image x = standard_normal(Shape{1, 2, 2}, 1);
  EXPECT_TRUE(tweedie_from_eps(x, standard_normal(x.shape(), 2), 1.0, 0.0) == x);
}

TEST(Tweedie, EpsRoundTrip) {
  const Image x = standard_normal(Shape{1, 3, 3}, 3), x0 = standard_normal(Shape{1, 3, 3}, 4);
  const Image eps = eps_from_x0(x, x0, 0.6, 0.8);
  EXPECT_LE(max_abs_diff(tweedie_from_eps(x, eps, 0.6, 0.8), x0), 1e-14);
}

TEST(GaussianPrior, ScalarPosteriorMean) {
  const GaussianPrior p(linear(), make_identity(scalar), value(0.0), {1.0});
  const double a = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(p.posterior_mean(value(1.0), a, a)[0], 0.70710678118654752, 1e-15);
}

TEST(GaussianPrior, QuadratureOracle) {
  // m = 0.3, c = 2, alpha = 0.6, sigma = 0.8, x_t = 0.9; reference from
  // adaptive quadrature of x0 p(x0) p(x_t | x0).
  const GaussianPrior p(linear(), make_identity(scalar), value(0.3), {2.0});
  EXPECT_NEAR(p.posterior_mean(value(0.9), 0.6, 0.8)[0], 0.93529411764705883, 1e-6);
}

TEST(GaussianPrior, DegenerateAndFlatLimits) {
  const Image x = value(1.7);
  const GaussianPrior point(linear(), make_identity(scalar), value(0.4), {0.0});
  EXPECT_EQ(point.posterior_mean(x, 0.6, 0.8)[0], 0.4);
  const GaussianPrior flat(linear(), make_identity(scalar), value(0.4), {1e12});
  EXPECT_NEAR(flat.posterior_mean(x, 0.6, 0.8)[0], 1.7 / 0.6, 1e-9);
  // x_t = alpha m gives eps = 0 and x0hat = m.
  const GaussianPrior p(linear(), make_identity(scalar), value(0.4), {0.5});
  const std::size_t t = 300;
  const Image xt = value(linear()->alpha(t) * 0.4);
  EXPECT_NEAR(p.predict_eps(xt, t)[0], 0.0, 1e-15);
  EXPECT_NEAR(tweedie(p, xt, t, *linear())[0], 0.4, 1e-14);
}

TEST(GaussianPrior, MatchesDensePosteriorOn16Dims) {
  const Shape s{1, 4, 4};
  const auto op = make_gaussian_blur(s, 3, 0.8);
  const auto var = power_law_variance(*op, 0.7, 1.5);
  const Image m = standard_normal(s, 5);
  const GaussianPrior p(linear(), op, m, var);
  Eigen::MatrixXd C(16, 16);
  for (std::size_t j = 0; j < 16; ++j) {
    Image e(s);
    e[j] = 1.0;
    auto eb = op->to_spectral(e);
    for (std::size_t i = 0; i < 16; ++i) eb[i] *= var[i];
    C.col(j) = to_eigen(op->from_spectral(eb));
  }
  EXPECT_LE((C - C.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  const Image xt = standard_normal(s, 6);
  const double a = 0.45, sg = std::sqrt(1 - a * a);
  const Eigen::VectorXd ref =
      to_eigen(m) + a * C * (a * a * C + sg * sg * Eigen::MatrixXd::Identity(16, 16)).ldlt().solve(to_eigen(xt) - a * to_eigen(m));
  EXPECT_LE((to_eigen(p.posterior_mean(xt, a, sg)) - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GaussianPrior, JacobianPerSpectralComponent) {
  const Shape s{1, 4, 4};
  const auto op = make_block_sr(s, 2);  // real basis
  const auto var = power_law_variance(*op, 1.0, 2.0);
  const GaussianPrior p(linear(), op, Image(s, 0.5), var);
  const Image x = standard_normal(s, 7);
  const double a = 0.7, sg = std::sqrt(1 - a * a), d = 1e-5;
  for (std::size_t i = 0; i < 16; ++i) {
    SpectralVector e(16);
    e[i] = 1.0;
    const Image v = op->from_spectral(e);
    const Image diff = (1.0 / (2 * d)) * (p.posterior_mean(x + d * v, a, sg) - p.posterior_mean(x - d * v, a, sg));
    const double gain = a * var[i] / (a * a * var[i] + sg * sg);
    EXPECT_LE(max_abs_diff(diff, gain * v), 1e-6) << i;
  }
}

TEST(GaussianPrior, SamplesHaveThePriorMean) {
  const Shape s{1, 4, 4};
  const auto op = make_gaussian_blur(s, 3, 0.8);
  const GaussianPrior p(linear(), op, Image(s, 0.5), power_law_variance(*op, 1.0, 2.0));
  Rng rng(8);
  Image acc(s);
  const int n = 4000;
  for (int k = 0; k < n; ++k) acc += p.sample(rng);
  for (double v : acc.data()) EXPECT_NEAR(v / n, 0.5, 0.05);
}

TEST(GmmPrior, QuadratureOracle) {
  const GmmPrior p(linear(), make_identity(scalar), {{0.3, value(-1.0)}, {0.7, value(2.0)}}, {0.5});
  EXPECT_NEAR(p.posterior_mean(value(0.9), 0.6, 0.8)[0], 1.6490827231172016, 1e-6);
}

TEST(GmmPrior, SingleComponentIsGaussian) {
  const Shape s{1, 4, 4};
  const auto op = make_gaussian_blur(s, 3, 0.8);
  const auto var = power_law_variance(*op, 1.0, 2.0);
  const Image m = standard_normal(s, 9);
  const GaussianPrior g(linear(), op, m, var);
  const GmmPrior one(linear(), op, {{2.0, m}}, var);
  const Image x = standard_normal(s, 10);
  for (std::size_t t : {0u, 500u, 999u}) EXPECT_LE(max_abs_diff(g.predict_eps(x, t), one.predict_eps(x, t)), 1e-13);
}

TEST(GmmPrior, SymmetricComponentsCancelAtOrigin) {
  const GmmPrior p(linear(), make_identity(scalar), {{0.5, value(-1.5)}, {0.5, value(1.5)}}, {0.3});
  EXPECT_NEAR(p.posterior_mean(value(0.0), 0.5, std::sqrt(0.75))[0], 0.0, 1e-15);
}

TEST(GmmPrior, ResponsibilitiesStableAcrossNoiseLevels) {
  const Shape s{1, 4, 4};
  const auto op = make_gaussian_blur(s, 3, 0.8);
  const GmmPrior p(linear(), op, {{0.2, Image(s, 0.0)}, {0.5, Image(s, 1.0)}, {0.3, Image(s, 3.0)}},
                   power_law_variance(*op, 0.01, 2.0));
  const Image x = standard_normal(s, 11);
  for (std::size_t t = 0; t < 1000; t += 37) {
    const auto w = p.responsibilities(x, linear()->alpha(t), linear()->sigma(t));
    double sum = 0.0;
    for (double v : w) {
      EXPECT_TRUE(std::isfinite(v));
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_TRUE(all_finite(p.predict_eps(x, t)));
  }
}

TEST(Denoisers, CountingAndTabulated) {
  const auto dir = std::filesystem::temp_directory_path() / "lamp_tabulated";
  std::filesystem::create_directories(dir);
  const Image eps = standard_normal(Shape{1, 2, 2}, 12);
  write_image(dir / "eps_7.ltnsr", eps);
  auto tab = std::make_shared<const TabulatedDenoiser>(dir);
  CountingDenoiser c(tab);
  EXPECT_TRUE(c.predict_eps(Image(eps.shape()), 7) == eps);
  EXPECT_EQ(c.count(), 1u);
  EXPECT_THROW(c.predict_eps(Image(eps.shape()), 8), std::runtime_error);
  EXPECT_THROW(c.predict_eps(Image(Shape{1, 3, 3}), 7), ShapeError);
  EXPECT_EQ(c.count(), 3u);
  c.reset();
  EXPECT_EQ(c.count(), 0u);
  std::filesystem::remove_all(dir);
}

TEST(Priors, RejectBadCovariance) {
  EXPECT_THROW(GaussianPrior(linear(), make_identity(scalar), value(0.0), {-1.0}), ConfigError);
  EXPECT_THROW(GaussianPrior(linear(), make_identity(scalar), value(0.0), {1.0, 2.0}), std::exception);
  EXPECT_THROW(GmmPrior(linear(), make_identity(scalar), {}, {1.0}), ConfigError);
}
