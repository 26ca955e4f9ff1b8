#include <gtest/gtest.h>

#include <cmath>

#include "lamp/errors.hpp"
#include "lamp/schedule.hpp"
#include "lamp/verify.hpp"

using namespace lamp;

TEST(Schedule, LinearDefaultsMatchReference) {
  const Schedule s = Schedule::linear(1000);
  EXPECT_NEAR(s.alpha(999), 0.006352818087570016, 1e-15);
  EXPECT_NEAR(s.sigma(999), 0.99997982064756996, 1e-15);
  EXPECT_NEAR(s.lambda(999), -5.0588365916505174, 1e-12);
  EXPECT_NEAR(s.alpha(0), 0.99994999874993751, 1e-15);
  EXPECT_NEAR(s.alpha(500), 0.27892052338439333, 1e-14);
  EXPECT_LE(s.vp_deviation(), 1e-12);
  for (std::size_t t = 1; t < 1000; ++t) {
    EXPECT_LT(s.alpha(t), s.alpha(t - 1));
    EXPECT_GT(s.sigma(t), s.sigma(t - 1));
    EXPECT_NEAR(s.noise_level(t), std::exp(-s.lambda(t)), 1e-12 * s.noise_level(t));
  }
}

TEST(Schedule, TwoStepHandComputed) {
  const Schedule s = Schedule::linear(2, 0.5, 0.5);
  EXPECT_NEAR(s.alpha(0), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(s.alpha(1), 0.5, 1e-15);
  EXPECT_NEAR(s.sigma(0), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(s.sigma(1), std::sqrt(0.75), 1e-15);
}

TEST(Schedule, RejectsInvalidRanges) {
  EXPECT_THROW(Schedule::linear(2, 0.0, 0.0), ConfigError);
  EXPECT_THROW(Schedule::linear(1, 1e-4, 0.02), ConfigError);
  EXPECT_THROW(Schedule::linear(10, 0.02, 1e-4), ConfigError);
  EXPECT_THROW(Schedule::linear(10, 1e-4, 1.0), ConfigError);
  try {
    Schedule::linear(2, 0.0, 0.0);
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "beta_start");
  }
}

TEST(Schedule, FromCoefficientsKeepsTamperingVisible) {
  const Schedule ok = Schedule::from_coefficients({0.9, 0.6}, {std::sqrt(0.19), 0.8});
  EXPECT_LE(ok.vp_deviation(), 1e-15);
  const Schedule bad = Schedule::from_coefficients({0.9, 0.6}, {0.5, 0.8});
  EXPECT_NEAR(bad.vp_deviation(), 0.06, 1e-12);
  EXPECT_THROW(Schedule::from_coefficients({0.6, 0.9}, {0.8, 0.3}), ConfigError);
  EXPECT_TRUE(verify::schedule_suite(ok).pass);
  EXPECT_FALSE(verify::schedule_suite(bad).pass);
}

TEST(StepCoeffs, A1RelativeAccuracy) {
  // 50-digit reference values.
  const std::pair<double, double> ref[] = {
      {1e-8, 4.999999983333333375e-9},         {1.0000001e-8, 5.0000004833333300417e-9},
      {1e-6, 4.9999983333337499999e-7},        {3e-3, 0.0014985011243253373554},
      {0.0099, 0.0049337053492072278807},      {0.0101, 0.0050330411759704290979},
      {0.26692939063065158, 0.1223414462540841886}};
  for (auto [h, want] : ref) EXPECT_NEAR(a1_coeff(h) / want, 1.0, 5e-14) << h;
}

TEST(StepCoeffs, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(a0_coeff(std::log(2.0)), 0.5);
  EXPECT_NEAR(a1_coeff(1.0), std::exp(-1.0), 1e-15);
  EXPECT_EQ(a0_coeff(0.0), 0.0);
  EXPECT_EQ(a1_coeff(0.0), 0.0);
  // Small-h branch continues the direct formula.
  EXPECT_NEAR(a1_coeff(1e-9), 5e-10, 1e-18);
  EXPECT_NEAR(a1_coeff(1e-8) / 1e-8, 0.5, 1e-7);
  EXPECT_NEAR(a1_coeff(1.0000001e-8) / 1.0000001e-8, 0.5, 1e-7);
  for (double h : {1e-6, 1e-4, 1e-2})
    EXPECT_NEAR(a1_coeff(h), h / 2 - h * h / 6 + h * h * h / 24 - h * h * h * h / 120 +
                                  h * h * h * h * h / 720, 1e-15);
}

TEST(Respace, StrideAndOrder) {
  const Schedule s = Schedule::linear(1000);
  const StepPlan p100 = respace(s, 100);
  ASSERT_EQ(p100.nfe(), 100u);
  EXPECT_EQ(p100.timesteps().front(), 999u);
  EXPECT_EQ(p100.timesteps().back(), 9u);
  for (std::size_t i = 1; i < 100; ++i) EXPECT_EQ(p100.timesteps()[i - 1] - p100.timesteps()[i], 10u);

  const StepPlan full = respace(s, 1000);
  for (std::size_t i = 0; i < 1000; ++i) EXPECT_EQ(full.timesteps()[i], 999 - i);

  EXPECT_THROW(respace(s, 1), ConfigError);
  EXPECT_THROW(respace(s, 1001), ConfigError);
}

TEST(Respace, PositiveStepsForEveryNfe) {
  const Schedule s = Schedule::linear(1000);
  for (std::size_t nfe = 2; nfe < 1000; nfe += 1) {
    const StepPlan p = respace(s, nfe);
    for (std::size_t i = 0; i < p.nfe(); ++i) ASSERT_GT(p.coeffs(i).h, 0.0) << "nfe " << nfe << " step " << i;
  }
}

TEST(Respace, TwentyStepPlanMidTrajectory) {
  const StepPlan p = respace(Schedule::linear(1000), 20);
  EXPECT_EQ(p.timesteps().back(), 49u);
  const StepCoeffs c = p.coeffs(10);
  ASSERT_TRUE(c.h_prev.has_value());
  EXPECT_NEAR(c.h, 0.26692939063065158, 1e-12);
  EXPECT_NEAR(*c.h_prev, 0.28234969963753054, 1e-12);
  EXPECT_NEAR(c.a1, 0.12234144625408416, 1e-12);
  EXPECT_NEAR(c.a0 + c.e_mh, 1.0, 1e-15);
  EXPECT_FALSE(p.coeffs(0).h_prev.has_value());
  EXPECT_EQ(p.coeffs(19).t_next, 0u);
}

TEST(Respace, RejectsNonDecreasingGrid) {
  const Schedule s = Schedule::linear(10);
  EXPECT_THROW(StepPlan(s, {5, 5}), ConfigError);
  EXPECT_THROW(StepPlan(s, {3, 7}), ConfigError);
  EXPECT_THROW(StepPlan(s, {10}), ConfigError);
}

TEST(ExpIdentity, HoldsOnLinearAndHandSchedules) {
  const Schedule s = Schedule::linear(1000);
  for (std::size_t t = 1; t < 1000; ++t) EXPECT_LE(exp_mh_identity_check(s, t, t - 1), 1e-12);
  EXPECT_EQ(exp_mh_identity_check(s, 500, 500), 0.0);
  const Schedule hand = Schedule::from_coefficients({0.9, 0.6}, {std::sqrt(0.19), 0.8});
  EXPECT_LE(exp_mh_identity_check(hand, 1, 0), 1e-15);
  EXPECT_LE(exp_mh_identity_check(hand, 0, 1), 1e-15);
}
