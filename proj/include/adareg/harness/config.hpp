#pragma once

// Experiment configuration: schema, parsing, the resolved echo, and the
// built-in presets. Coordinates are 1-based in text and 0-based in memory.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adareg/estimators.hpp"
#include "adareg/generators.hpp"
#include "adareg/harness/text_format.hpp"

namespace adareg::harness {

/// How the true parameter is chosen for each replication.
enum class ThetaRule {
  /// theta_1 = 0, theta_{2:d} = 1/sqrt(d-1)
  kTreatmentDefault,
  /// theta_1 = 1, remaining coordinates N(0, 1) drawn per replication
  kLeadOneGaussian,
  /// all coordinates 1
  kOnes,
  kExplicit,
};

inline std::string_view to_string(ThetaRule r) {
  switch (r) {
    case ThetaRule::kTreatmentDefault: return "treatment_default";
    case ThetaRule::kLeadOneGaussian: return "lead_one_gaussian";
    case ThetaRule::kOnes: return "ones";
    case ThetaRule::kExplicit: return "explicit";
  }
  return "unknown";
}

struct ExperimentConfig {
  std::string name = "experiment";
  std::string output_dir = "results";
  std::size_t n_reps = 100;
  std::uint64_t master_seed = 1;
  std::vector<double> alpha_grid = {0.1};
  std::vector<Method> estimators = {Method::kOls};
  /// Sweep over k; empty means the single generator.k.
  std::vector<std::size_t> k_grid;
  bool record_runtime = false;

  struct Generator {
    GeneratorKind kind = GeneratorKind::kIid;
    std::size_t n = 100;
    std::size_t d = 2;
    std::size_t k = 0;
    double sigma = 1.0;
    double p_exploit = 0.8;
    NonadaptiveLaw law = NonadaptiveLaw::kStandardGaussian;
    ThetaRule theta_rule = ThetaRule::kOnes;
    std::vector<double> theta;  // kExplicit only

    bool operator==(const Generator&) const = default;
  } generator;

  struct Estimation {
    /// Known sigma (the generator's) or the residual estimate.
    bool sigma_known = true;
    std::optional<double> tale_s0;
    std::optional<double> wdecorr_lambda;
    std::size_t wdecorr_calibration_draws = 1000;
    /// Coordinate whose estimate, interval and pivot are recorded.
    std::size_t target = 0;
    /// Index set for scaled-MSE; empty means {target}.
    IndexSet scaled_mse_set;

    bool operator==(const Estimation&) const = default;
  } estimation;

  bool operator==(const ExperimentConfig&) const = default;

  std::vector<std::size_t> k_levels() const {
    return k_grid.empty() ? std::vector<std::size_t>{generator.k} : k_grid;
  }

  IndexSet resolved_scaled_mse_set() const {
    return estimation.scaled_mse_set.empty() ? IndexSet{estimation.target}
                                             : estimation.scaled_mse_set;
  }

  void validate() const {
    if (name.empty()) throw ConfigError("name must be non-empty");
    if (name.find_first_of(",\"\n\r") != std::string::npos)
      throw ConfigError("name must not contain commas, quotes or line breaks");
    if (n_reps < 1) throw ConfigError("n_reps must be >= 1");
    for (double a : alpha_grid)
      if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha_grid entries must lie in (0, 1)");
    if (estimators.empty()) throw ConfigError("at least one estimator is required");
    const auto& g = generator;
    if (g.d == 0 || g.n == 0) throw ConfigError("generator n and d must be positive");
    if (!(g.sigma >= 0.0)) throw ConfigError("generator sigma must be non-negative");
    if (g.theta_rule == ThetaRule::kExplicit && g.theta.size() != g.d)
      throw ConfigError("generator theta must have d entries");
    if (g.theta_rule == ThetaRule::kTreatmentDefault && g.d < 2)
      throw ConfigError("treatment_default theta needs d >= 2");
    for (std::size_t k : k_levels()) {
      if (k >= g.d && !(k == 0 && g.kind == GeneratorKind::kIid))
        throw ConfigError("k_grid entries must be < d");
      GeneratorConfig probe = generator_config(k, 0);
      probe.spec.theta_star = Vector::Zero(static_cast<Eigen::Index>(g.d));
      try {
        probe.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("generator: ") + e.what());
      }
      if (g.kind == GeneratorKind::kIid && k != 0)
        throw ConfigError("iid generator requires k = 0");
      for (Method m : estimators)
        if (m == Method::kTale && k != 1) throw ConfigError("tale requires k = 1");
      if (estimation.target >= g.d) throw ConfigError("estimation target out of range");
    }
    for (std::size_t j : resolved_scaled_mse_set())
      if (j >= g.d) throw ConfigError("scaled_mse_coords out of range");
    if (estimation.tale_s0 && !(*estimation.tale_s0 > 0.0))
      throw ConfigError("tale_s0 must be positive");
    if (estimation.wdecorr_lambda && !(*estimation.wdecorr_lambda > 0.0))
      throw ConfigError("wdecorr_lambda must be positive");
    if (!estimation.wdecorr_lambda && estimation.wdecorr_calibration_draws < 100)
      throw ConfigError("wdecorr_calibration_draws must be >= 100");
  }

  /// Generator settings for sweep level k with the given dataset seed; theta
  /// is left for the caller (see resolve_theta).
  GeneratorConfig generator_config(std::size_t k, std::uint64_t seed) const {
    GeneratorConfig c;
    c.kind = generator.kind;
    c.spec.n = generator.n;
    c.spec.d = generator.d;
    c.spec.k = k;
    c.spec.sigma = generator.sigma;
    c.p_exploit = generator.p_exploit;
    c.law = generator.law;
    c.seed = seed;
    return c;
  }

  Vector resolve_theta(std::uint64_t rep_seed) const {
    const auto d = static_cast<Eigen::Index>(generator.d);
    switch (generator.theta_rule) {
      case ThetaRule::kTreatmentDefault: {
        Vector t = Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d - 1)));
        t(0) = 0.0;
        return t;
      }
      case ThetaRule::kLeadOneGaussian: {
        Sampler s(stream_seed(rep_seed, Stream::kTheta));
        Vector t = s.normal_vector(d);
        t(0) = 1.0;
        return t;
      }
      case ThetaRule::kOnes:
        return Vector::Ones(d);
      case ThetaRule::kExplicit:
        return Eigen::Map<const Vector>(generator.theta.data(), d);
    }
    return Vector::Zero(d);
  }

  SigmaMode sigma_mode() const {
    return estimation.sigma_known ? SigmaMode::known(generator.sigma) : SigmaMode::residual();
  }
};

// ---------------------------------------------------------------------------
// Parsing

inline std::vector<std::size_t> to_coords(const std::vector<std::uint64_t>& one_based,
                                          const std::string& key) {
  std::vector<std::size_t> out;
  for (auto j : one_based) {
    if (j == 0) throw ConfigError("key '" + key + "': coordinates are 1-based");
    out.push_back(static_cast<std::size_t>(j - 1));
  }
  return out;
}

inline ExperimentConfig parse_config(std::string_view text, std::string_view origin = "<config>") {
  const auto doc = KeyValueDocument::parse(text, origin);
  ConfigReader r(doc);
  ExperimentConfig c;

  if (auto v = r.string("name")) c.name = *v;
  if (auto v = r.string("output_dir")) c.output_dir = *v;
  if (auto v = r.integer("n_reps")) c.n_reps = *v;
  if (auto v = r.integer("master_seed")) c.master_seed = *v;
  if (auto v = r.numbers("alpha_grid")) c.alpha_grid = *v;
  if (auto v = r.strings("estimators")) {
    c.estimators.clear();
    for (const auto& s : *v) {
      auto m = parse_method(s);
      if (!m) throw ConfigError("unknown estimator '" + s + "'");
      c.estimators.push_back(*m);
    }
  }
  if (auto v = r.integers("k_grid")) c.k_grid.assign(v->begin(), v->end());
  if (auto v = r.boolean("record_runtime")) c.record_runtime = *v;

  auto& g = c.generator;
  if (auto v = r.string("generator.kind")) {
    auto k = parse_generator_kind(*v);
    if (!k) throw ConfigError("unknown generator kind '" + *v + "'");
    g.kind = *k;
  }
  if (auto v = r.integer("generator.n")) g.n = *v;
  if (auto v = r.integer("generator.d")) g.d = *v;
  if (auto v = r.integer("generator.k")) g.k = *v;
  if (auto v = r.number("generator.sigma")) g.sigma = *v;
  if (auto v = r.number("generator.p_exploit")) g.p_exploit = *v;
  if (auto v = r.string("generator.nonadaptive_law")) {
    auto l = parse_nonadaptive_law(*v);
    if (!l) throw ConfigError("unknown nonadaptive_law '" + *v + "'");
    g.law = *l;
  }
  if (const RawValue* v = r.raw("generator.theta")) {
    if (v->kind == RawValue::Kind::kArray) {
      g.theta_rule = ThetaRule::kExplicit;
      g.theta.clear();
      for (const auto& item : v->items) {
        auto x = parse_double(item);
        if (!x) throw ConfigError("generator.theta: '" + item + "' is not a number");
        g.theta.push_back(*x);
      }
    } else {
      bool found = false;
      for (auto rule : {ThetaRule::kTreatmentDefault, ThetaRule::kLeadOneGaussian, ThetaRule::kOnes}) {
        if (v->text == to_string(rule)) {
          g.theta_rule = rule;
          found = true;
        }
      }
      if (!found) throw ConfigError("generator.theta: unknown rule '" + v->text + "'");
    }
  }

  auto& e = c.estimation;
  if (auto v = r.string("estimation.sigma")) {
    if (*v == "known") e.sigma_known = true;
    else if (*v == "residual") e.sigma_known = false;
    else throw ConfigError("estimation.sigma must be \"known\" or \"residual\"");
  }
  if (const RawValue* v = r.raw("estimation.tale_s0")) {
    if (v->text != "auto") {
      auto x = parse_double(v->text);
      if (!x) throw ConfigError("estimation.tale_s0 must be a number or \"auto\"");
      e.tale_s0 = *x;
    }
  }
  if (const RawValue* v = r.raw("estimation.wdecorr_lambda")) {
    if (v->text != "calibrate") {
      auto x = parse_double(v->text);
      if (!x) throw ConfigError("estimation.wdecorr_lambda must be a number or \"calibrate\"");
      e.wdecorr_lambda = *x;
    }
  }
  if (auto v = r.integer("estimation.wdecorr_calibration_draws")) e.wdecorr_calibration_draws = *v;
  if (auto v = r.integer("estimation.target")) {
    if (*v == 0) throw ConfigError("estimation.target is 1-based");
    e.target = *v - 1;
  }
  if (auto v = r.integers("estimation.scaled_mse_coords"))
    e.scaled_mse_set = to_coords(*v, "estimation.scaled_mse_coords");

  r.reject_unknown();
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// Fully resolved config in the input format; parse_config(echo(c)) == c.
inline std::string echo(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "name = " << quote(c.name) << "\n";
  o << "output_dir = " << quote(c.output_dir) << "\n";
  o << "n_reps = " << c.n_reps << "\n";
  o << "master_seed = " << c.master_seed << "\n";
  o << "alpha_grid = " << format_array(c.alpha_grid, format_double) << "\n";
  o << "estimators = "
    << format_array(c.estimators, [](Method m) { return quote(to_string(m)); }) << "\n";
  if (!c.k_grid.empty())
    o << "k_grid = " << format_array(c.k_grid, [](std::size_t k) { return std::to_string(k); })
      << "\n";
  o << "record_runtime = " << (c.record_runtime ? "true" : "false") << "\n";

  const auto& g = c.generator;
  o << "\n[generator]\n";
  o << "kind = " << quote(to_string(g.kind)) << "\n";
  o << "n = " << g.n << "\n";
  o << "d = " << g.d << "\n";
  o << "k = " << g.k << "\n";
  o << "sigma = " << format_double(g.sigma) << "\n";
  o << "p_exploit = " << format_double(g.p_exploit) << "\n";
  o << "nonadaptive_law = " << quote(to_string(g.law)) << "\n";
  if (g.theta_rule == ThetaRule::kExplicit)
    o << "theta = " << format_array(g.theta, format_double) << "\n";
  else
    o << "theta = " << quote(to_string(g.theta_rule)) << "\n";

  const auto& e = c.estimation;
  o << "\n[estimation]\n";
  o << "sigma = " << quote(e.sigma_known ? "known" : "residual") << "\n";
  o << "tale_s0 = " << (e.tale_s0 ? format_double(*e.tale_s0) : quote("auto")) << "\n";
  o << "wdecorr_lambda = "
    << (e.wdecorr_lambda ? format_double(*e.wdecorr_lambda) : quote("calibrate")) << "\n";
  o << "wdecorr_calibration_draws = " << e.wdecorr_calibration_draws << "\n";
  o << "target = " << e.target + 1 << "\n";
  if (!e.scaled_mse_set.empty())
    o << "scaled_mse_coords = "
      << format_array(e.scaled_mse_set, [](std::size_t j) { return std::to_string(j + 1); })
      << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Presets

struct Preset {
  std::string name;
  std::string description;
  ExperimentConfig config;
};

inline std::vector<double> default_alpha_grid() {
  std::vector<double> out;
  for (int i = 1; i <= 19; ++i) out.push_back(i / 20.0);  // 1 - alpha in 0.05 .. 0.95
  return out;
}

inline std::vector<Preset> presets() {
  std::vector<Preset> out;

  {
    ExperimentConfig c;
    c.name = "fig1";
    c.output_dir = "results/fig1";
    c.n_reps = 20;
    c.master_seed = 2023;
    c.alpha_grid = {};
    c.estimators = {Method::kOls, Method::kCenteredOls};
    for (std::size_t k = 2; k <= 200; k += 3) c.k_grid.push_back(k);
    c.generator = {GeneratorKind::kKAdaptiveGreedy, 1000, 300, 2, 1.0, 1.0,
                   NonadaptiveLaw::kShiftedSphere, ThetaRule::kLeadOneGaussian, {}};
    out.push_back({"fig1", "scaled-MSE of OLS and centered OLS vs k (n=1000, d=300, k=2..200 step 3, 20 reps)", c});
  }
  {
    ExperimentConfig c = out.back().config;
    c.name = "fig1-reduced";
    c.output_dir = "results/fig1-reduced";
    c.k_grid.clear();
    for (std::size_t k = 2; k <= 74; k += 8) c.k_grid.push_back(k);
    c.k_grid.push_back(80);
    c.generator.n = 600;
    c.generator.d = 120;
    out.push_back({"fig1-reduced", "desk-scale scaled-MSE sweep (n=600, d=120, k in {2,10,...,74,80}, 20 reps)", c});
  }
  {
    ExperimentConfig c;
    c.name = "fig2-low";
    c.output_dir = "results/fig2-low";
    c.n_reps = 1000;
    c.master_seed = 2024;
    c.alpha_grid = default_alpha_grid();
    c.estimators = {Method::kTale, Method::kOls, Method::kConcentrationCi, Method::kWDecorrelation};
    c.generator = {GeneratorKind::kTreatmentAssignment, 1000, 10, 1, 0.3, 0.8,
                   NonadaptiveLaw::kStandardGaussian, ThetaRule::kTreatmentDefault, {}};
    out.push_back({"fig2-low", "coverage and width, treatment assignment (n=1000, d=10, sigma=0.3, p=0.8, 1000 reps)", c});
  }
  {
    ExperimentConfig c = out.back().config;
    c.name = "fig2-high";
    c.output_dir = "results/fig2-high";
    c.master_seed = 2025;
    c.generator.n = 500;
    c.generator.d = 50;
    out.push_back({"fig2-high", "coverage and width, treatment assignment (n=500, d=50, sigma=0.3, p=0.8, 1000 reps)", c});
  }
  {
    ExperimentConfig c;
    c.name = "prop1-iid";
    c.output_dir = "results/prop1-iid";
    c.n_reps = 5000;
    c.master_seed = 11;
    c.alpha_grid = {0.1};
    c.estimators = {Method::kOls};
    c.generator = {GeneratorKind::kIid, 200, 5, 0, 1.0, 0.0, NonadaptiveLaw::kStandardGaussian,
                   ThetaRule::kOnes, {}};
    c.estimation.scaled_mse_set = {0, 1};
    out.push_back({"prop1-iid", "OLS scaled-MSE under i.i.d. design, I = {1, 2} (n=200, d=5, 5000 reps)", c});
  }
  return out;
}

inline std::optional<ExperimentConfig> find_preset(std::string_view name) {
  for (auto& p : presets())
    if (p.name == name) return p.config;
  return std::nullopt;
}

}  // namespace adareg::harness
