#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "lamp/errors.hpp"
#include "lamp/imaging.hpp"
#include "lamp/rng.hpp"
#include "lamp/samplers.hpp"

using namespace lamp;

namespace {

const Shape scalar{1, 1, 1};

class ConstantEps final : public Denoiser {
 public:
  explicit ConstantEps(double v) : v_(v) {}
  Image predict_eps(const Image& x, std::size_t) const override { return Image(x.shape(), v_); }

 private:
  double v_;
};

class NanEps final : public Denoiser {
 public:
  Image predict_eps(const Image& x, std::size_t) const override {
    return Image(x.shape(), std::numeric_limits<double>::quiet_NaN());
  }
};

struct Fixture {
  std::shared_ptr<const Schedule> sched = std::make_shared<const Schedule>(Schedule::linear(1000));
  Shape shape{1, 8, 8};
  OperatorPtr op = make_gaussian_blur(shape, 3, 1.0);
  std::shared_ptr<const GmmPrior> prior;
  Image y;

  Fixture() {
    const auto var = power_law_variance(*op, 1.0, 2.0);
    prior = std::make_shared<const GmmPrior>(
        sched, op, std::vector<GmmPrior::Component>{{0.5, Image(shape, 0.2)}, {0.5, Image(shape, 0.8)}}, var);
    Rng rng(1);
    y = degrade(prior->sample(rng), *op, 0.05, 2);
  }

  Correction corr(CorrectionKind k) const { return Correction({.kind = k, .sigma_y = 0.05}, op, y, sched); }
};

StepInputs random_inputs(const StepPlan& plan, std::size_t i, Shape s, std::uint64_t seed, const Image** keep) {
  static thread_local Image prev;
  StepInputs in;
  in.i = i;
  in.c = plan.coeffs(i);
  in.x = standard_normal(s, seed);
  in.eps = standard_normal(s, seed + 1);
  in.x0hat = tweedie_from_eps(in.x, in.eps, in.c.alpha_t, in.c.sigma_t);
  in.d = standard_normal(s, seed + 2);
  prev = standard_normal(s, seed + 3);
  in.d_prev = &prev;
  *keep = &prev;
  return in;
}

}  // namespace

TEST(Updates, ScalarHandComputed) {
  // Step from index 1 (alpha 0.6, sigma 0.8) to index 0 (alpha 0.8, sigma 0.6)
  // with eps = 0.25 at x = 0.5 (so x0hat = 0.5) and D = 1:
  // PS = 0.8 * 1 + 0.6 * 0.25 = 0.95.
  const Schedule s = Schedule::from_coefficients({0.8, 0.6}, {0.6, 0.8});
  const StepPlan plan(s, {1});
  StepInputs in;
  in.c = plan.coeffs(0);
  in.x = Image(scalar, 0.5);
  in.eps = Image(scalar, 0.25);
  in.x0hat = tweedie_from_eps(in.x, in.eps, in.c.alpha_t, in.c.sigma_t);
  in.d = Image(scalar, 1.0);
  EXPECT_NEAR(in.x0hat[0], 0.5, 1e-15);
  EXPECT_NEAR(in.c.e_mh, 0.5625, 1e-15);
  EXPECT_NEAR(ps_update(in)[0], 0.95, 1e-15);
  EXPECT_NEAR(ps_decomposed_update(in)[0], 0.95, 1e-15);
  EXPECT_NEAR(one_m_update(in)[0], 0.375 + 0.8 * 0.4375, 1e-15);
}

TEST(Updates, PsDecompositionOnRandomInputs) {
  const StepPlan plan = respace(Schedule::linear(1000), 50);
  for (std::size_t i = 0; i < plan.nfe(); ++i) {
    const Image* keep;
    const StepInputs in = random_inputs(plan, i, Shape{1, 4, 4}, 100 + i, &keep);
    EXPECT_LE(max_abs_diff(ps_update(in), ps_decomposed_update(in)), 1e-12);
  }
}

TEST(Updates, IdentityCorrectionReducesToDdim) {
  const StepPlan plan = respace(Schedule::linear(1000), 20);
  const Image* keep;
  StepInputs in = random_inputs(plan, 5, Shape{1, 4, 4}, 7, &keep);
  in.d = in.x0hat;
  EXPECT_TRUE(ps_update(in) == ddim_update(in));
  EXPECT_LE(max_abs_diff(one_m_update(in), ps_update(in)), 1e-12);
  EXPECT_LE(max_abs_diff(ps_decomposed_update(in), one_m_update(in)), 0.0);
}

TEST(Updates, ZeroStepKeepsState) {
  const Schedule s = Schedule::linear(1000);
  const StepPlan plan(s, {0});  // final step to index 0 from index 0
  StepInputs in;
  in.c = plan.coeffs(0);
  EXPECT_EQ(in.c.h, 0.0);
  in.x = standard_normal(Shape{1, 2, 2}, 3);
  in.eps = standard_normal(in.x.shape(), 4);
  in.x0hat = tweedie_from_eps(in.x, in.eps, in.c.alpha_t, in.c.sigma_t);
  in.d = standard_normal(in.x.shape(), 5);
  EXPECT_LE(max_abs_diff(one_m_update(in), in.x), 1e-15);
}

TEST(Updates, TwoMFallbacks) {
  const StepPlan plan = respace(Schedule::linear(1000), 20);
  const Image* keep;
  StepInputs in = random_inputs(plan, 6, Shape{1, 4, 4}, 9, &keep);
  const Image same = in.d;
  in.d_prev = &same;
  EXPECT_LE(max_abs_diff(two_m_update(in, -0.7), one_m_update(in)), 1e-15);
  in.d_prev = nullptr;
  EXPECT_TRUE(two_m_update(in, -0.7) == one_m_update(in));
}

TEST(Updates, SecondOrderGenerationDirect) {
  const Schedule s = Schedule::linear(1000);
  const StepPlan plan = respace(s, 20);
  const std::size_t i = 8;
  const StepCoeffs c = plan.coeffs(i);
  const Image x = standard_normal(scalar, 1), x0 = standard_normal(scalar, 2), x0p = standard_normal(scalar, 3);
  const std::size_t t = plan.timesteps()[i], tn = plan.timesteps()[i + 1], tp = plan.timesteps()[i - 1];
  const double h = s.lambda(tn) - s.lambda(t), hp = s.lambda(t) - s.lambda(tp);
  const double a1 = 1 - (1 - std::exp(-h)) / h;
  const double want = s.sigma(tn) / s.sigma(t) * x[0] + s.alpha(tn) * (1 - std::exp(-h)) * x0[0] +
                      s.alpha(tn) * a1 * 1.0 * (x0[0] - x0p[0]) / hp;
  EXPECT_NEAR(second_order_generation_update(c, x, x0, x0p, 1.0)[0], want, 1e-12);

  StepInputs in;
  in.c = c;
  in.x = x;
  in.x0hat = x0;
  in.d = x0;
  in.d_prev = &x0p;
  EXPECT_LE(max_abs_diff(two_m_update(in, 1.0), second_order_generation_update(c, x, x0, x0p, 1.0)), 1e-14);
}

TEST(Lamp, BetaOnTwentyStepPlan) {
  const StepPlan plan = respace(Schedule::linear(1000), 20);
  const double beta = lamp_beta(plan.coeffs(10), -0.15);
  EXPECT_NEAR(beta, 0.064994639490217956, 1e-12);
  EXPECT_GT(beta, 0.0);
  EXPECT_LT(beta, 1.0);
  EXPECT_EQ(lamp_beta(plan.coeffs(0), -0.15), 0.0);
}

TEST(Lamp, TripleFormAgreement) {
  Rng rng(11);
  const Schedule s = Schedule::linear(1000);
  for (int k = 0; k < 200; ++k) {
    const StepPlan plan = respace(s, 2 + k % 150);
    const std::size_t i = 1 + static_cast<std::size_t>(k) % (plan.nfe() - 1);
    const Image* keep;
    const StepInputs in = random_inputs(plan, i, k % 2 ? scalar : Shape{1, 16, 16}, 1000 + 7 * k, &keep);
    const double gamma = std::uniform_real_distribution<double>(-3, 3)(rng);
    const Image a = lamp_update_from_two_m(in, gamma), b = lamp_update_from_ps(in, gamma);
    const Image c = lamp_update_filtered(in, lamp_beta(in.c, gamma));
    EXPECT_LE(max_abs_diff(a, b), 1e-12);
    EXPECT_LE(max_abs_diff(a, c), 1e-12);
  }
}

TEST(Lamp, NearUnitBetaStallsOnPreviousTarget) {
  const StepPlan plan = respace(Schedule::linear(1000), 20);
  const Image* keep;
  const StepInputs in = random_inputs(plan, 4, Shape{1, 4, 4}, 13, &keep);
  StepInputs prev_only = in;
  prev_only.d = *in.d_prev;
  EXPECT_LE(max_abs_diff(lamp_update_filtered(in, 1.0), ps_update(prev_only)), 1e-15);
}

TEST(Trajectory, GammaZeroLampIsPs) {
  Fixture f;
  const StepPlan plan = respace(*f.sched, 20);
  const Correction corr = f.corr(CorrectionKind::diffpir);
  const Trajectory ps = run_trajectory({.method = Method::ps}, plan, *f.prior, corr, f.shape, 5);
  const Trajectory lamp = run_trajectory({.method = Method::lamp, .gamma = 0.0, .n_warm = 3}, plan, *f.prior, corr, f.shape, 5);
  EXPECT_TRUE(ps.x0 == lamp.x0);
}

TEST(Trajectory, WarmupBranch) {
  Fixture f;
  const StepPlan plan = respace(*f.sched, 20);
  const Correction corr = f.corr(CorrectionKind::ddrm);
  const SamplerConfig cfg{.method = Method::lamp, .gamma = -0.15, .n_warm = 3};
  const Trajectory t = run_trajectory(cfg, plan, *f.prior, corr, f.shape, 6);
  for (const auto& r : t.log) {
    if (r.step <= 3) EXPECT_EQ(r.beta, 0.0) << r.step;
    else if (r.step + 1 < plan.nfe()) EXPECT_GT(r.beta, 0.0) << r.step;
  }
  double sum = 0.0;
  for (const auto& r : t.log)
    if (r.step > 3) sum += r.beta;
  EXPECT_NEAR(t.mean_beta, sum / 16.0, 1e-15);
}

TEST(Trajectory, ConstantBetaMode) {
  Fixture f;
  const StepPlan plan = respace(*f.sched, 20);
  const Correction corr = f.corr(CorrectionKind::diffpir);
  const SamplerConfig cfg{.method = Method::lamp, .n_warm = 2, .beta_mode = BetaMode::constant, .beta = 0.03};
  const Trajectory t = run_trajectory(cfg, plan, *f.prior, corr, f.shape, 7);
  for (const auto& r : t.log) EXPECT_EQ(r.beta, r.step > 2 ? 0.03 : 0.0);
  EXPECT_NEAR(t.mean_beta, 0.03, 1e-15);
}

TEST(Trajectory, OneDenoiserCallPerStep) {
  Fixture f;
  for (std::size_t nfe : {20u, 100u}) {
    const StepPlan plan = respace(*f.sched, nfe);
    const Correction corr = f.corr(CorrectionKind::ddrm);
    for (auto m : {Method::ps, Method::one_m, Method::two_m, Method::lamp}) {
      CountingDenoiser c(f.prior);
      const Trajectory t = run_trajectory({.method = m, .gamma = -0.15, .n_warm = 3}, plan, c, corr, f.shape, 8);
      EXPECT_EQ(c.count(), nfe);
      EXPECT_EQ(t.log.size(), nfe);
      EXPECT_LE(t.max_ps_decomposition_dev, 1e-12);
    }
  }
}

TEST(Trajectory, IdentityCorrectionOneMEqualsPs) {
  Fixture f;
  const StepPlan plan = respace(*f.sched, 100);
  const Correction corr = f.corr(CorrectionKind::identity);
  const Trajectory a = run_trajectory({.method = Method::ps}, plan, *f.prior, corr, f.shape, 9);
  const Trajectory b = run_trajectory({.method = Method::one_m}, plan, *f.prior, corr, f.shape, 9);
  EXPECT_LE(max_abs_diff(a.x0, b.x0), 1e-10);
}

TEST(Trajectory, GaussianDiffPirApproachesOracle) {
  const auto sched = std::make_shared<const Schedule>(Schedule::linear(1000));
  const Shape s{1, 4, 4};
  const auto op = make_gaussian_blur(s, 3, 0.8);
  const auto prior = std::make_shared<const GaussianPrior>(sched, op, Image(s, 0.5), power_law_variance(*op, 0.2, 2.0));
  Rng rng(10);
  const Image truth = prior->sample(rng);
  const Image y = degrade(truth, *op, 0.05, 11);
  const Image oracle = exact_posterior_mean(*prior, *op, y, 0.05);
  const Correction corr({.kind = CorrectionKind::diffpir, .sigma_y = 0.05, .mu = 7.0}, op, y, sched);
  Image avg(s, 0.0);
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    avg += run_trajectory({.method = Method::ps}, respace(*sched, 100), *prior, corr, s, 100 + seed).x0;
  }
  avg *= 1.0 / 16.0;
  // Seed average lands closer to the exact posterior mean than the prior mean does.
  EXPECT_LT(mse(avg, oracle), mse(prior->mean(), oracle));
}

TEST(Trajectory, NonFiniteStateFailsLoudly) {
  Fixture f;
  const StepPlan plan = respace(*f.sched, 20);
  const Correction corr = f.corr(CorrectionKind::identity);
  EXPECT_THROW(run_trajectory({.method = Method::ps}, plan, NanEps(), corr, f.shape, 1), NumericalError);
}

TEST(Trajectory, WarmupMustFitPlan) {
  Fixture f;
  const StepPlan plan = respace(*f.sched, 20);
  const Correction corr = f.corr(CorrectionKind::identity);
  EXPECT_THROW(run_trajectory({.method = Method::lamp, .n_warm = 20}, plan, ConstantEps(0.0), corr, f.shape, 1),
               ConfigError);
}

TEST(StepLog, CsvLayout) {
  Fixture f;
  const StepPlan plan = respace(*f.sched, 20);
  const Correction corr = f.corr(CorrectionKind::ddrm);
  const Trajectory t = run_trajectory({.method = Method::lamp, .gamma = -0.15, .n_warm = 3}, plan, *f.prior, corr, f.shape, 2);
  std::ostringstream os;
  write_step_log(os, t.log);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "step,t,h,h_prev,beta_t,res_norm,temporal_norm");
  std::getline(is, line);
  EXPECT_EQ(line.rfind("0,999,", 0), 0u);
  EXPECT_NE(line.find(",,"), std::string::npos);
  std::size_t rows = 1;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 20u);
}

TEST(Method, StringRoundTrip) {
  for (auto m : {Method::ps, Method::one_m, Method::two_m, Method::lamp}) EXPECT_EQ(method_from_string(to_string(m)), m);
  for (auto m : {BetaMode::from_gamma, BetaMode::constant}) EXPECT_EQ(beta_mode_from_string(to_string(m)), m);
  EXPECT_THROW(method_from_string("dpm3"), ConfigError);
}
