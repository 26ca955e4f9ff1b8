#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lamp/config.hpp"
#include "lamp/errors.hpp"
#include "lamp/experiment.hpp"

using namespace lamp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small(const std::string& corr, std::size_t nfe) {
  return json{{"schedule", {{"nfe", nfe}}},
              {"image", {{"height", 16}, {"width", 16}}},
              {"operator", {{"kind", "gaussian_blur"}, {"kernel_size", 9}, {"sigma", 1.5}}},
              {"correction", {{"kind", corr}}},
              {"sampler", {{"method", "lamp"}, {"gamma", -0.15}, {"n_warm", 3}}},
              {"seed", 4}};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lamp_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::size_t rows(const std::string& csv) {
  std::size_t n = 0;
  for (char c : csv) n += c == '\n';
  return n - 1;
}

std::string field_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(Parse, Defaults) {
  const ExperimentConfig c = parse_config(json::object());
  EXPECT_EQ(c.schedule.nfe, 100u);
  EXPECT_EQ(c.schedule.n_train_steps, 1000u);
  EXPECT_EQ(c.sampler.method, Method::ps);
  EXPECT_EQ(c.correction.kind, CorrectionKind::identity);
  EXPECT_EQ(c.image.height, 64u);
  EXPECT_EQ(c.op.kernel_size, 61u);
}

TEST(Parse, ErrorsCarryDottedPath) {
  json j = small("ddrm", 20);
  j["sampler"]["gama"] = 1.0;
  EXPECT_EQ(field_of(j), "sampler.gama");
  j = small("ddrm", 20);
  j["schedule"]["nfe"] = -3;
  EXPECT_EQ(field_of(j), "schedule.nfe");
  j = small("ddrm", 20);
  j["operator"]["kind"] = "swirl";
  EXPECT_EQ(field_of(j), "operator.kind");
  j = small("ddrm", 20);
  j["sampler"]["n_warm"] = 20;
  EXPECT_EQ(field_of(j), "sampler.n_warm");
  j = small("ddrm", 20);
  j["extra"] = 1;
  EXPECT_EQ(field_of(j), "extra");
}

TEST(Parse, GammaAlias) {
  json j = small("ddrm", 20);
  j["sampler"].erase("gamma");
  j["correction"]["gamma"] = -0.3;
  EXPECT_DOUBLE_EQ(parse_config(j).sampler.gamma, -0.3);
  j["sampler"]["gamma"] = 0.2;
  EXPECT_THROW(parse_config(j), ConfigError);
  j["sampler"]["gamma"] = -0.3;
  EXPECT_NO_THROW(parse_config(j));
}

TEST(Parse, CorrectionNoiseFollowsDegradation) {
  json j = small("diffpir", 20);
  j["degradation"] = {{"sigma_y", 0.1}};
  EXPECT_DOUBLE_EQ(parse_config(j).correction.sigma_y, 0.1);
}

TEST(Snapshot, RoundTrip) {
  const ExperimentConfig c = parse_config(small("ddrm", 20));
  const json snap = snapshot_json(c);
  EXPECT_EQ(snap.at("tool_version"), kToolVersion);
  EXPECT_TRUE(snap.contains("resolved_seeds"));
  const ExperimentConfig back = parse_config(snap);
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(Seeds, DerivedPerStream) {
  const ExperimentConfig c = parse_config(small("ddrm", 20));
  const ResolvedSeeds s = resolve_seeds(c);
  EXPECT_NE(s.ground_truth, s.measurement_noise);
  EXPECT_NE(s.initial_noise, s.operator_kernel);
  json j = small("ddrm", 20);
  j["sampler"]["init_seed"] = 77;
  EXPECT_EQ(resolve_seeds(parse_config(j)).initial_noise, 77u);
  EXPECT_EQ(resolve_seeds(parse_config(j)).ground_truth, s.ground_truth);
}

TEST(Run, DeterministicFiles) {
  ExperimentConfig c = parse_config(small("ddrm", 20));
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  c.output_dir = a.string();
  run(c);
  c.output_dir = b.string();
  run(c);
  for (const char* f : {"x0.ltnsr", "truth.ltnsr", "measurement.ltnsr", "steps.csv", "metrics.json", "x0.pgm"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const std::string ca = slurp(a / "config.json");
  json ja = json::parse(ca), jb = json::parse(slurp(b / "config.json"));
  ja.erase("output_dir");
  jb.erase("output_dir");
  EXPECT_EQ(ja, jb);

  // Replaying the snapshot reproduces the reconstruction.
  ExperimentConfig replay = parse_config(json::parse(ca));
  const fs::path r = scratch("det_r");
  replay.output_dir = r.string();
  run(replay);
  EXPECT_EQ(slurp(a / "x0.ltnsr"), slurp(r / "x0.ltnsr"));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(r);
}

TEST(Run, StepLogLengthAndAccounting) {
  for (auto [corr, nfe] : {std::pair{"ddrm", 20u}, std::pair{"diffpir", 100u}}) {
    ExperimentConfig c = parse_config(small(corr, nfe));
    const fs::path out = scratch(std::string("log_") + corr);
    c.output_dir = out.string();
    const RunResult res = run(c);
    EXPECT_EQ(rows(slurp(out / "steps.csv")), nfe);
    EXPECT_EQ(res.metrics.denoiser_calls, nfe);
    EXPECT_EQ(res.metrics.nfe, nfe);
    EXPECT_TRUE(res.metrics.mse_to_oracle.has_value());
    const json m = json::parse(slurp(out / "metrics.json"));
    EXPECT_EQ(m.at("denoiser_calls"), nfe);
    fs::remove_all(out);
  }
}

TEST(Sweep, UnknownParameterListsNames) {
  const ExperimentConfig c = parse_config(small("ddrm", 20));
  try {
    with_parameter(c, "temperature", 1.0);
    FAIL();
  } catch (const ConfigError& e) {
    for (const auto& p : sweep_parameters()) EXPECT_NE(std::string(e.what()).find(p), std::string::npos) << p;
  }
}

TEST(Sweep, GammaRows) {
  ExperimentConfig c = parse_config(small("ddrm", 20));
  const fs::path out = scratch("sweep");
  c.output_dir = out.string();
  const std::string csv = sweep(c, "gamma", {-3.0, -0.15, 0.0, 0.15});
  EXPECT_EQ(rows(csv), 4u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "param,value,nfe,denoiser_calls,mean_beta,psnr,ssim,mse_to_oracle,mse_to_truth");
  EXPECT_TRUE(fs::exists(out / "sweep.csv"));
  EXPECT_TRUE(fs::exists(out / "gamma_3" / "metrics.json"));

  ExperimentConfig ps = c;
  ps.sampler.method = Method::ps;
  const RunResult base = execute(ps);
  const RunResult zero = execute(with_parameter(c, "gamma", 0.0));
  EXPECT_TRUE(base.x0 == zero.x0);
  EXPECT_EQ(zero.metrics.mean_beta, 0.0);
  fs::remove_all(out);
}

TEST(Sweep, BetaSwitchesToConstant) {
  const ExperimentConfig c = with_parameter(parse_config(small("ddrm", 20)), "beta", 0.2);
  EXPECT_EQ(c.sampler.beta_mode, BetaMode::constant);
  EXPECT_DOUBLE_EQ(c.sampler.beta, 0.2);
  const ExperimentConfig s = with_parameter(c, "sigma_y", 0.1);
  EXPECT_DOUBLE_EQ(s.degradation.sigma_y, 0.1);
  EXPECT_DOUBLE_EQ(s.correction.sigma_y, 0.1);
}
