// lamp: batch front-end for posterior sampling experiments.
//
//   lamp run     --config cfg.json [--out DIR] [--seed N]
//   lamp sweep   --config cfg.json --param gamma --values -3,-0.15,0 [--out DIR]
//   lamp verify  [--trials N]
//   lamp risk    --config risk.json [--trials N] [--seed N] [--out DIR]
//   lamp op-check --config cfg.json
//
// Exit codes: 0 ok, 1 verification or runtime failure, 2 config error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lamp/config.hpp"
#include "lamp/errors.hpp"
#include "lamp/experiment.hpp"
#include "lamp/risk_lab.hpp"
#include "lamp/verify.hpp"

namespace {

using nlohmann::json;

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used == 0 || used != item.size()) throw lamp::ConfigError("--values", "not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

lamp::ExperimentConfig load(const std::string& path, const std::string& out, std::optional<std::uint64_t> seed) {
  lamp::ExperimentConfig cfg = lamp::load_config(path);
  if (!out.empty()) cfg.output_dir = out;
  if (seed) cfg.seed = *seed;
  return cfg;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lamp::ConfigError("--config", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw lamp::ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
}

std::vector<double> doubles(const json& j, const std::string& key) {
  if (!j.contains(key)) throw lamp::ConfigError(key, "required");
  if (!j.at(key).is_array()) throw lamp::ConfigError(key, "expected an array");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw lamp::ConfigError(key, "expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

int cmd_risk(const std::string& path, std::optional<std::size_t> trials, std::optional<std::uint64_t> seed,
             const std::string& out_dir) {
  const json j = read_json(path);
  static const std::set<std::string> known{"sigma_diag", "rho", "r", "sigma_diag_next", "cov_cross_diag",
                                           "beta_grid", "n_trials", "seed"};
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw lamp::ConfigError(k, "unknown key");
  lamp::risk::ErrorModel m;
  m.sigma_diag = doubles(j, "sigma_diag");
  if (!j.contains("rho") || !j.at("rho").is_number()) throw lamp::ConfigError("rho", "required number");
  m.rho = j.at("rho").get<double>();
  m.r = j.contains("r") ? doubles(j, "r") : std::vector<double>(m.sigma_diag.size(), 0.0);
  if (j.contains("sigma_diag_next")) m.sigma_diag_next = doubles(j, "sigma_diag_next");
  if (j.contains("cov_cross_diag")) m.cov_cross_diag = doubles(j, "cov_cross_diag");
  try {
    m.validate();
  } catch (const lamp::ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw lamp::ConfigError("model", e.what());
  }
  const std::vector<double> grid = doubles(j, "beta_grid");
  const std::size_t n = trials.value_or(j.value("n_trials", std::size_t{100000}));
  const std::uint64_t s = seed.value_or(j.value("seed", std::uint64_t{0}));
  const lamp::risk::Sweep sw = lamp::risk::sweep_beta(m, grid, n, s);
  std::ostringstream os;
  lamp::risk::write_sweep_csv(os, sw);
  std::cout << os.str();
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(std::filesystem::path(out_dir) / "risk_sweep.csv", std::ios::binary) << os.str();
  }
  std::cerr << "argmin beta (closed form): " << sw.rows[sw.argmin].beta << "\n";
  return 0;
}

int cmd_op_check(const lamp::ExperimentConfig& cfg) {
  const lamp::ResolvedSeeds seeds = lamp::resolve_seeds(cfg);
  const lamp::OperatorPtr op = lamp::build_operator(cfg.op, cfg.image, seeds.operator_kernel);
  if (op->in_dim() > lamp::kDenseOracleLimit)
    throw lamp::ConfigError("image", "too large for the dense oracle (limit " +
                                         std::to_string(lamp::kDenseOracleLimit) + " pixels)");
  const Eigen::MatrixXd K = lamp::dense_oracle(*op);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(K);
  std::vector<double> ours = op->spectrum();
  ours.resize(op->paired_dim());
  std::sort(ours.rbegin(), ours.rend());
  double spec = 0.0;
  for (std::size_t i = 0; i < ours.size(); ++i) spec = std::max(spec, std::abs(ours[i] - svd.singularValues()(i)));
  const Eigen::MatrixXd Kt = lamp::dense_adjoint_oracle(*op);
  const double adj = (Kt - K.transpose()).cwiseAbs().maxCoeff();
  double via = 0.0;
  lamp::Rng rng(seeds.ground_truth);
  for (int k = 0; k < 4; ++k) {
    const lamp::Image x = lamp::standard_normal(op->in_shape(), rng);
    via = std::max(via, lamp::max_abs_diff(lamp::apply_via_spectrum(*op, x), op->apply(x)));
  }
  const bool ok = spec <= 1e-8 && adj <= 1e-10 && via <= 1e-10;
  std::printf("operator %s %s\n", lamp::to_string(op->kind()).c_str(), cfg.image.str().c_str());
  std::printf("  spectrum vs dense SVD   %.3g (tol 1e-8)\n", spec);
  std::printf("  adjoint vs transpose    %.3g (tol 1e-10)\n", adj);
  std::printf("  U diag(a) V^H vs apply  %.3g (tol 1e-10)\n", via);
  std::printf("%s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Posterior sampling with lagged measurement-aware corrections"};
  app.set_version_flag("--version", std::string(lamp::kToolVersion));
  app.require_subcommand(1);

  std::string config, out, param, values;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;

  auto* run = app.add_subcommand("run", "Run one reconstruction");
  run->add_option("--config", config, "Experiment config (JSON)")->required();
  run->add_option("--out", out, "Output directory (overrides output_dir)");
  run->add_option("--seed", seed, "Master seed (overrides seed)");

  auto* sweep = app.add_subcommand("sweep", "Run one reconstruction per parameter value");
  sweep->add_option("--config", config, "Experiment config (JSON)")->required();
  sweep->add_option("--param", param, "gamma, beta, mu, eta, eta_b, nfe, sigma_y or n_warm")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--out", out, "Output directory");
  sweep->add_option("--seed", seed, "Master seed");

  auto* verify = app.add_subcommand("verify", "Run every identity and oracle suite");
  verify->add_option("--trials", trials, "Monte Carlo trials for the risk suite");

  auto* risk = app.add_subcommand("risk", "Risk of PS vs LAMP over a beta grid");
  risk->add_option("--config", config, "Error model (JSON)")->required();
  risk->add_option("--trials", trials, "Monte Carlo trials");
  risk->add_option("--seed", seed, "Seed");
  risk->add_option("--out", out, "Also write risk_sweep.csv here");

  auto* op_check = app.add_subcommand("op-check", "Compare an operator with its dense oracle");
  op_check->add_option("--config", config, "Experiment config (JSON)")->required();
  op_check->add_option("--seed", seed, "Master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto cfg = load(config, out, seed);
      const lamp::RunResult r = lamp::run(cfg);
      std::cout << lamp::metrics_json(cfg, r.metrics).dump(2) << "\n";
      return 0;
    }
    if (*sweep) {
      const auto cfg = load(config, out, seed);
      std::cout << lamp::sweep(cfg, param, parse_values(values));
      return 0;
    }
    if (*verify) {
      lamp::verify::Options opts;
      if (trials) opts.risk_trials = *trials;
      const auto results = lamp::verify::run_all(opts);
      lamp::verify::print_report(std::cout, results);
      const bool ok = lamp::verify::all_passed(results);
      std::cout << (ok ? "all suites passed" : "verification FAILED") << "\n";
      return ok ? 0 : 1;
    }
    if (*risk) return cmd_risk(config, trials, seed, out);
    if (*op_check) return cmd_op_check(load(config, "", seed));
  } catch (const lamp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
