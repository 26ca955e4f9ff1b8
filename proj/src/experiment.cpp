#include "lamp/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lamp/errors.hpp"
#include "lamp/imaging.hpp"
#include "lamp/tensor_io.hpp"

namespace lamp {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

RunResult execute(const ExperimentConfig& cfg) {
  const Problem p = build_problem(cfg);
  const ResolvedSeeds seeds = resolve_seeds(cfg);
  CountingDenoiser counter(p.denoiser);

  RunResult r;
  r.trajectory = run_trajectory(cfg.sampler, *p.plan, counter, *p.correction, cfg.image, seeds.initial_noise);
  r.x0 = r.trajectory.x0;
  r.truth = p.ground_truth;
  r.measurement = p.measurement;

  RunMetrics& m = r.metrics;
  const Image clamped = clamp01(r.x0);
  m.psnr = psnr(clamped, p.ground_truth);
  m.ssim = (cfg.image.height >= kSsimWindow && cfg.image.width >= kSsimWindow)
               ? ssim(clamped, p.ground_truth)
               : std::nan("");
  m.mse_to_truth = mse(r.x0, p.ground_truth);
  if (p.gaussian_prior) {
    const Image oracle = exact_posterior_mean(*p.gaussian_prior, *p.op, p.measurement, cfg.degradation.sigma_y);
    m.mse_to_oracle = mse(r.x0, oracle);
  }
  m.nfe = p.plan->nfe();
  m.denoiser_calls = counter.count();
  m.mean_beta = r.trajectory.mean_beta;
  m.max_ps_decomposition_dev = r.trajectory.max_ps_decomposition_dev;
  return r;
}

nlohmann::json metrics_json(const ExperimentConfig& cfg, const RunMetrics& m) {
  nlohmann::json j;
  const auto has = [&](const char* name) {
    for (const auto& s : cfg.metrics)
      if (s == name) return true;
    return false;
  };
  // Non-finite values (PSNR of an exact match) serialize as null.
  if (has("psnr")) j["psnr"] = m.psnr;
  if (has("ssim")) j["ssim"] = m.ssim;
  if (has("mse_to_oracle")) j["mse_to_oracle"] = m.mse_to_oracle ? nlohmann::json(*m.mse_to_oracle) : nlohmann::json();
  j["mse_to_truth"] = m.mse_to_truth;
  j["nfe"] = m.nfe;
  j["denoiser_calls"] = m.denoiser_calls;
  j["mean_beta"] = m.mean_beta;
  j["max_ps_decomposition_dev"] = m.max_ps_decomposition_dev;
  return j;
}

nlohmann::json snapshot_json(const ExperimentConfig& cfg) {
  nlohmann::json j = to_json(cfg);
  const ResolvedSeeds s = resolve_seeds(cfg);
  j["tool_version"] = kToolVersion;
  j["resolved_seeds"] = {{"ground_truth", s.ground_truth},
                         {"measurement_noise", s.measurement_noise},
                         {"initial_noise", s.initial_noise},
                         {"operator_kernel", s.operator_kernel}};
  nlohmann::json notes = nlohmann::json::array();
  if (cfg.correction.zeta != 0.0)
    notes.push_back("correction.zeta is recorded but not used by the deterministic sampler");
  j["notes"] = notes;
  return j;
}

RunResult run(const ExperimentConfig& cfg) {
  RunResult r = execute(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  write_image(dir / "x0.ltnsr", r.x0);
  write_image(dir / "truth.ltnsr", r.truth);
  write_image(dir / "measurement.ltnsr", r.measurement);
  if (cfg.image.channels == 1) write_pnm(dir / "x0.pgm", r.x0);
  if (cfg.image.channels == 3) write_pnm(dir / "x0.ppm", r.x0);
  {
    std::ostringstream os;
    write_step_log(os, r.trajectory.log);
    write_text(dir / "steps.csv", os.str());
  }
  write_text(dir / "metrics.json", metrics_json(cfg, r.metrics).dump(2) + "\n");
  write_text(dir / "config.json", snapshot_json(cfg).dump(2) + "\n");
  return r;
}

const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> names{"gamma", "beta", "mu", "eta", "eta_b", "nfe", "sigma_y", "n_warm"};
  return names;
}

ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& param, double value) {
  ExperimentConfig c = cfg;
  const auto as_count = [&](const char* name) {
    if (!(value >= 0.0) || value != std::floor(value))
      throw ConfigError(name, "expects a non-negative integer, got " + num(value));
    return static_cast<std::size_t>(value);
  };
  if (param == "gamma") {
    c.sampler.gamma = value;
  } else if (param == "beta") {
    c.sampler.beta_mode = BetaMode::constant;
    c.sampler.beta = value;
  } else if (param == "mu") {
    c.correction.mu = value;
  } else if (param == "eta") {
    c.correction.eta = value;
  } else if (param == "eta_b") {
    c.correction.eta_b = value;
  } else if (param == "nfe") {
    c.schedule.nfe = as_count("nfe");
  } else if (param == "sigma_y") {
    c.degradation.sigma_y = value;
    c.correction.sigma_y = value;
  } else if (param == "n_warm") {
    c.sampler.n_warm = as_count("n_warm");
  } else {
    std::string valid;
    for (const auto& n : sweep_parameters()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("--param", "unknown parameter '" + param + "'; valid: " + valid);
  }
  c.validate();
  return c;
}

std::string sweep(const ExperimentConfig& cfg, const std::string& param,
                  const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("--values", "empty list");
  std::vector<ExperimentConfig> runs;
  for (std::size_t k = 0; k < values.size(); ++k) {
    ExperimentConfig c = with_parameter(cfg, param, values[k]);
    c.output_dir = (std::filesystem::path(cfg.output_dir) / (param + "_" + std::to_string(k))).string();
    runs.push_back(std::move(c));
  }
  std::ostringstream os;
  os << "param,value,nfe,denoiser_calls,mean_beta,psnr,ssim,mse_to_oracle,mse_to_truth\n";
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const RunMetrics m = run(runs[k]).metrics;
    os << param << ',' << num(values[k]) << ',' << m.nfe << ',' << m.denoiser_calls << ','
       << num(m.mean_beta) << ',' << num(m.psnr) << ',' << num(m.ssim) << ','
       << (m.mse_to_oracle ? num(*m.mse_to_oracle) : "") << ',' << num(m.mse_to_truth) << '\n';
  }
  std::filesystem::create_directories(cfg.output_dir);
  write_text(std::filesystem::path(cfg.output_dir) / "sweep.csv", os.str());
  return os.str();
}

}  // namespace lamp
