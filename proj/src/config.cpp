#include "lamp/config.hpp"

#include <fstream>
#include <set>

#include "lamp/errors.hpp"
#include "lamp/imaging.hpp"
#include "lamp/rng.hpp"
#include "lamp/tensor_io.hpp"

namespace lamp {

namespace {

using nlohmann::json;

// Reads one JSON object, tracking which keys were consumed so that typos
// are reported instead of silently ignored.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    out = convert<T>(j_.at(key), field(key));
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    out = convert<T>(j_.at(key), field(key));
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, field(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
  }

 private:
  template <typename T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where, "expected a number");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
        throw ConfigError(where, "expected a non-negative integer");
      return v.get<T>();
    } else {
      if (!v.is_array()) throw ConfigError(where, "expected an array");
      T out;
      for (std::size_t k = 0; k < v.size(); ++k)
        out.push_back(convert<typename T::value_type>(v[k], where + "[" + std::to_string(k) + "]"));
      return out;
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Rewraps a module error with the config path that produced it.
template <typename F>
auto at_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(e.field().empty() ? path : path + "." + e.field(), e.reason());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

template <typename E, typename Parse>
E parse_enum(const std::string& where, const std::string& s, Parse parse) {
  try {
    return parse(s);
  } catch (const std::exception& e) {
    throw ConfigError(where, e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  Section root(j, "");

  {
    auto s = root.sub("schedule");
    s.get("n_train_steps", cfg.schedule.n_train_steps);
    s.get("beta_start", cfg.schedule.beta_start);
    s.get("beta_end", cfg.schedule.beta_end);
    s.get("nfe", cfg.schedule.nfe);
    s.finish();
  }
  {
    auto s = root.sub("image");
    s.get("channels", cfg.image.channels);
    s.get("height", cfg.image.height);
    s.get("width", cfg.image.width);
    s.finish();
  }
  {
    auto s = root.sub("operator");
    std::string kind = to_string(cfg.op.kind);
    s.get("kind", kind);
    cfg.op.kind = parse_enum<OperatorKind>(s.field("kind"), kind, operator_kind_from_string);
    s.get("kernel_size", cfg.op.kernel_size);
    s.get("sigma", cfg.op.sigma);
    s.get("intensity", cfg.op.intensity);
    s.get("factor", cfg.op.factor);
    s.get("seed", cfg.op.seed);
    s.get("matrix_path", cfg.op.matrix_path);
    s.finish();
  }
  std::optional<double> gamma_alias;
  std::optional<double> sigma_y_corr;
  {
    auto s = root.sub("correction");
    std::string kind = to_string(cfg.correction.kind);
    s.get("kind", kind);
    cfg.correction.kind = parse_enum<CorrectionKind>(s.field("kind"), kind, correction_kind_from_string);
    s.get("sigma_y", sigma_y_corr);
    s.get("mu", cfg.correction.mu);
    s.get("eta", cfg.correction.eta);
    s.get("eta_b", cfg.correction.eta_b);
    s.get("zeta", cfg.correction.zeta);
    // The per-task hyperparameter table lists the LAMP strength next to the
    // correction settings; accept it here as well.
    s.get("gamma", gamma_alias);
    s.finish();
  }
  {
    auto s = root.sub("sampler");
    std::string method = to_string(cfg.sampler.method);
    s.get("method", method);
    cfg.sampler.method = parse_enum<Method>(s.field("method"), method, method_from_string);
    const bool has_gamma = s.has("gamma");
    s.get("gamma", cfg.sampler.gamma);
    if (gamma_alias) {
      if (has_gamma && *gamma_alias != cfg.sampler.gamma)
        throw ConfigError("correction.gamma", "conflicts with sampler.gamma");
      cfg.sampler.gamma = *gamma_alias;
    }
    s.get("n_warm", cfg.sampler.n_warm);
    std::string mode = to_string(cfg.sampler.beta_mode);
    s.get("beta_mode", mode);
    cfg.sampler.beta_mode = parse_enum<BetaMode>(s.field("beta_mode"), mode, beta_mode_from_string);
    s.get("beta", cfg.sampler.beta);
    s.get("init_seed", cfg.init_seed);
    s.finish();
  }
  {
    auto s = root.sub("prior");
    s.get("kind", cfg.prior.kind);
    if (cfg.prior.kind != "gaussian" && cfg.prior.kind != "gmm" && cfg.prior.kind != "tabulated")
      throw ConfigError(s.field("kind"), "expected gaussian, gmm or tabulated, got '" + cfg.prior.kind + "'");
    s.get("mean", cfg.prior.mean);
    s.get("mean_path", cfg.prior.mean_path);
    s.get("var_scale", cfg.prior.var_scale);
    s.get("var_exponent", cfg.prior.var_exponent);
    s.get("weights", cfg.prior.weights);
    s.get("offsets", cfg.prior.offsets);
    s.get("dir", cfg.prior.dir);
    s.get("sample_seed", cfg.prior.sample_seed);
    s.finish();
  }
  {
    auto s = root.sub("degradation");
    s.get("sigma_y", cfg.degradation.sigma_y);
    s.get("seed", cfg.degradation.seed);
    s.get("ground_truth_path", cfg.degradation.ground_truth_path);
    s.finish();
  }
  cfg.correction.sigma_y = sigma_y_corr.value_or(cfg.degradation.sigma_y);

  root.get("seed", cfg.seed);
  root.get("output_dir", cfg.output_dir);
  root.get("metrics", cfg.metrics);
  // Informational keys written into snapshots.
  if (root.has("tool_version")) root.raw("tool_version");
  if (root.has("resolved_seeds")) root.raw("resolved_seeds");
  if (root.has("notes")) root.raw("notes");
  root.finish();

  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (schedule.n_train_steps < 2) throw ConfigError("schedule.n_train_steps", "must be >= 2");
  if (schedule.nfe < 2 || schedule.nfe > schedule.n_train_steps)
    throw ConfigError("schedule.nfe", "must lie in [2, n_train_steps]");
  if (!(schedule.beta_start > 0.0) || !(schedule.beta_end < 1.0) ||
      !(schedule.beta_start <= schedule.beta_end))
    throw ConfigError("schedule", "need 0 < beta_start <= beta_end < 1");
  if (image.size() == 0) throw ConfigError("image", "all dimensions must be positive");
  at_path("correction", [&] { correction.validate(); });
  at_path("sampler", [&] { sampler.validate(schedule.nfe); });
  if (!(degradation.sigma_y >= 0.0)) throw ConfigError("degradation.sigma_y", "must be >= 0");
  switch (op.kind) {
    case OperatorKind::gaussian_blur:
    case OperatorKind::motion_blur:
      if (op.kernel_size == 0 || op.kernel_size % 2 == 0)
        throw ConfigError("operator.kernel_size", "must be odd");
      if (op.kernel_size > image.height || op.kernel_size > image.width)
        throw ConfigError("operator.kernel_size", "larger than the image");
      if (op.kind == OperatorKind::gaussian_blur && !(op.sigma > 0.0))
        throw ConfigError("operator.sigma", "must be > 0");
      if (op.kind == OperatorKind::motion_blur && !(op.intensity >= 0.0))
        throw ConfigError("operator.intensity", "must be >= 0");
      break;
    case OperatorKind::block_sr:
      if (op.factor == 0 || image.height % op.factor || image.width % op.factor)
        throw ConfigError("operator.factor", "must divide the image height and width");
      break;
    case OperatorKind::dense:
      if (!op.matrix_path) throw ConfigError("operator.matrix_path", "required for dense operators");
      break;
  }
  if (prior.kind == "gmm") {
    if (prior.weights.empty() || prior.weights.size() != prior.offsets.size())
      throw ConfigError("prior.weights", "need one weight per offset");
    for (double w : prior.weights)
      if (!(w > 0.0)) throw ConfigError("prior.weights", "must be positive");
  }
  if (prior.kind == "tabulated" && prior.dir.empty())
    throw ConfigError("prior.dir", "required for tabulated priors");
  if (prior.kind == "tabulated" && !degradation.ground_truth_path)
    throw ConfigError("degradation.ground_truth_path", "required with a tabulated prior");
  if (!(prior.var_scale > 0.0)) throw ConfigError("prior.var_scale", "must be > 0");
  static const std::set<std::string> known{"psnr", "ssim", "mse_to_oracle"};
  for (const auto& m : metrics)
    if (!known.count(m)) throw ConfigError("metrics", "unknown metric '" + m + "'");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

ResolvedSeeds resolve_seeds(const ExperimentConfig& cfg) {
  return {
      cfg.prior.sample_seed.value_or(derive_seed(cfg.seed, SeedStream::ground_truth)),
      cfg.degradation.seed.value_or(derive_seed(cfg.seed, SeedStream::measurement_noise)),
      cfg.init_seed.value_or(derive_seed(cfg.seed, SeedStream::initial_noise)),
      cfg.op.seed.value_or(derive_seed(cfg.seed, SeedStream::operator_kernel)),
  };
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["schedule"] = {{"n_train_steps", cfg.schedule.n_train_steps},
                   {"beta_start", cfg.schedule.beta_start},
                   {"beta_end", cfg.schedule.beta_end},
                   {"nfe", cfg.schedule.nfe}};
  j["image"] = {{"channels", cfg.image.channels}, {"height", cfg.image.height}, {"width", cfg.image.width}};
  json op = {{"kind", to_string(cfg.op.kind)}};
  switch (cfg.op.kind) {
    case OperatorKind::gaussian_blur:
      op["kernel_size"] = cfg.op.kernel_size;
      op["sigma"] = cfg.op.sigma;
      break;
    case OperatorKind::motion_blur:
      op["kernel_size"] = cfg.op.kernel_size;
      op["intensity"] = cfg.op.intensity;
      if (cfg.op.seed) op["seed"] = *cfg.op.seed;
      break;
    case OperatorKind::block_sr: op["factor"] = cfg.op.factor; break;
    case OperatorKind::dense: op["matrix_path"] = *cfg.op.matrix_path; break;
  }
  j["operator"] = op;
  j["correction"] = {{"kind", to_string(cfg.correction.kind)},
                     {"sigma_y", cfg.correction.sigma_y},
                     {"mu", cfg.correction.mu},
                     {"eta", cfg.correction.eta},
                     {"eta_b", cfg.correction.eta_b},
                     {"zeta", cfg.correction.zeta}};
  json s = {{"method", to_string(cfg.sampler.method)},
            {"gamma", cfg.sampler.gamma},
            {"n_warm", cfg.sampler.n_warm},
            {"beta_mode", to_string(cfg.sampler.beta_mode)},
            {"beta", cfg.sampler.beta}};
  if (cfg.init_seed) s["init_seed"] = *cfg.init_seed;
  j["sampler"] = s;
  json p = {{"kind", cfg.prior.kind},
            {"mean", cfg.prior.mean},
            {"var_scale", cfg.prior.var_scale},
            {"var_exponent", cfg.prior.var_exponent}};
  if (cfg.prior.mean_path) p["mean_path"] = *cfg.prior.mean_path;
  if (cfg.prior.kind == "gmm") {
    p["weights"] = cfg.prior.weights;
    p["offsets"] = cfg.prior.offsets;
  }
  if (cfg.prior.kind == "tabulated") p["dir"] = cfg.prior.dir;
  if (cfg.prior.sample_seed) p["sample_seed"] = *cfg.prior.sample_seed;
  j["prior"] = p;
  json d = {{"sigma_y", cfg.degradation.sigma_y}};
  if (cfg.degradation.seed) d["seed"] = *cfg.degradation.seed;
  if (cfg.degradation.ground_truth_path) d["ground_truth_path"] = *cfg.degradation.ground_truth_path;
  j["degradation"] = d;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["metrics"] = cfg.metrics;
  return j;
}

std::shared_ptr<const Schedule> build_schedule(const ScheduleSpec& spec) {
  return at_path("schedule", [&] {
    return std::make_shared<const Schedule>(
        Schedule::linear(spec.n_train_steps, spec.beta_start, spec.beta_end));
  });
}

OperatorPtr build_operator(const OperatorSpec& spec, Shape image, std::uint64_t kernel_seed) {
  return at_path("operator", [&]() -> OperatorPtr {
    switch (spec.kind) {
      case OperatorKind::gaussian_blur: return make_gaussian_blur(image, spec.kernel_size, spec.sigma);
      case OperatorKind::motion_blur:
        return make_motion_blur(image, spec.kernel_size, spec.intensity, kernel_seed);
      case OperatorKind::block_sr: return make_block_sr(image, spec.factor);
      case OperatorKind::dense: {
        const Tensor t = read_tensor(std::filesystem::path(*spec.matrix_path));
        if (t.dims.size() != 2 || t.dims[1] != image.size())
          throw ConfigError("matrix_path", "expected a rank-2 tensor with image-sized columns");
        Eigen::MatrixXd m(t.dims[0], t.dims[1]);
        for (std::size_t r = 0; r < t.dims[0]; ++r)
          for (std::size_t c = 0; c < t.dims[1]; ++c) m(r, c) = t.data[r * t.dims[1] + c];
        return make_dense(std::move(m), image, Shape{1, 1, t.dims[0]});
      }
    }
    throw ConfigError("kind", "unsupported");
  });
}

Problem build_problem(const ExperimentConfig& cfg) {
  cfg.validate();
  const ResolvedSeeds seeds = resolve_seeds(cfg);
  Problem p;
  p.schedule = build_schedule(cfg.schedule);
  p.plan = std::make_shared<const StepPlan>(respace(*p.schedule, cfg.schedule.nfe));
  p.op = build_operator(cfg.op, cfg.image, seeds.operator_kernel);

  Image mean(cfg.image, cfg.prior.mean);
  if (cfg.prior.mean_path) {
    mean = at_path("prior.mean_path", [&] { return read_image(*cfg.prior.mean_path); });
    if (!(mean.shape() == cfg.image)) throw ConfigError("prior.mean_path", "shape differs from image");
  }
  const auto var = at_path("prior", [&] {
    return power_law_variance(*p.op, cfg.prior.var_scale, cfg.prior.var_exponent);
  });

  std::optional<Image> truth;
  if (cfg.degradation.ground_truth_path) {
    truth = at_path("degradation.ground_truth_path",
                    [&] { return read_image(*cfg.degradation.ground_truth_path); });
    if (!(truth->shape() == cfg.image))
      throw ConfigError("degradation.ground_truth_path", "shape differs from image");
  }
  Rng gt_rng(seeds.ground_truth);
  if (cfg.prior.kind == "gaussian") {
    auto prior = std::make_shared<const GaussianPrior>(p.schedule, p.op, mean, var);
    p.gaussian_prior = prior;
    p.denoiser = prior;
    if (!truth) truth = prior->sample(gt_rng);
  } else if (cfg.prior.kind == "gmm") {
    std::vector<GmmPrior::Component> comps;
    for (std::size_t k = 0; k < cfg.prior.weights.size(); ++k) {
      Image m = mean;
      for (double& v : m.data()) v += cfg.prior.offsets[k];
      comps.push_back({cfg.prior.weights[k], std::move(m)});
    }
    auto prior = std::make_shared<const GmmPrior>(p.schedule, p.op, std::move(comps), var);
    p.denoiser = prior;
    if (!truth) truth = prior->sample(gt_rng);
  } else {
    p.denoiser = std::make_shared<const TabulatedDenoiser>(cfg.prior.dir);
  }
  p.ground_truth = std::move(*truth);
  p.measurement = degrade(p.ground_truth, *p.op, cfg.degradation.sigma_y, seeds.measurement_noise);
  p.correction = std::make_shared<const Correction>(cfg.correction, p.op, p.measurement, p.schedule);
  return p;
}

}  // namespace lamp
