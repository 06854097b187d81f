#pragma once

// Command-line front end. run_cli never exits the process; it returns
//   0  success
//   1  usage, configuration or I/O error
//   2  numerical failure (rank deficiency, degenerate design, domain error)

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adareg/estimators.hpp"
#include "adareg/generators.hpp"
#include "adareg/harness/config.hpp"
#include "adareg/harness/dataset_io.hpp"
#include "adareg/harness/experiment.hpp"

namespace adareg::harness {

namespace cli_detail {

struct GenerateArgs {
  std::optional<std::string> config;
  std::optional<std::string> preset;
  std::optional<std::string> kind;
  std::optional<std::size_t> n, d, k;
  std::optional<double> sigma, p_exploit;
  std::optional<std::string> law;
  std::optional<std::string> theta;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> noise_seed;
  std::string out = "dataset.csv";
};

struct EstimateArgs {
  std::string dataset;
  std::string method = "ols";
  std::vector<std::size_t> adaptive_cols;
  std::vector<double> alphas;
  std::optional<double> sigma;
  std::optional<double> s0;
  std::optional<double> lambda;
  std::optional<std::size_t> target;
  std::optional<std::string> out;
};

struct ExperimentArgs {
  std::optional<std::string> config;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::string> out;
  std::size_t jobs = 0;
};

struct ReportArgs {
  std::vector<std::string> dirs;
  std::optional<std::string> out;
};

inline ExperimentConfig base_config(const std::optional<std::string>& config,
                                    const std::optional<std::string>& preset) {
  if (config && preset) throw ConfigError("--config and --preset are mutually exclusive");
  if (config) return load_config(*config);
  if (preset) {
    auto c = find_preset(*preset);
    if (!c) throw ConfigError("unknown preset '" + *preset + "' (see `presets`)");
    return *c;
  }
  return {};
}

inline Vector theta_from_flag(const std::string& text, const ExperimentConfig& c,
                              std::uint64_t seed) {
  ExperimentConfig tmp = c;
  for (auto rule : {ThetaRule::kTreatmentDefault, ThetaRule::kLeadOneGaussian, ThetaRule::kOnes}) {
    if (text == to_string(rule)) {
      tmp.generator.theta_rule = rule;
      return tmp.resolve_theta(seed);
    }
  }
  std::vector<double> vals;
  for (auto cell : split_commas(text)) {
    auto v = parse_double(cell);
    if (!v) throw ConfigError("--theta: '" + std::string(cell) + "' is not a number");
    vals.push_back(*v);
  }
  if (vals.size() != c.generator.d)
    throw ConfigError("--theta must list d = " + std::to_string(c.generator.d) + " values");
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

inline int cmd_generate(const GenerateArgs& a, std::ostream& out, bool quiet) {
  ExperimentConfig c = base_config(a.config, a.preset);
  auto& g = c.generator;
  if (a.kind) {
    auto k = parse_generator_kind(*a.kind);
    if (!k) throw ConfigError("unknown generator kind '" + *a.kind + "'");
    g.kind = *k;
  }
  if (a.n) g.n = *a.n;
  if (a.d) g.d = *a.d;
  if (a.k) g.k = *a.k;
  if (a.sigma) g.sigma = *a.sigma;
  if (a.p_exploit) g.p_exploit = *a.p_exploit;
  if (a.law) {
    auto l = parse_nonadaptive_law(*a.law);
    if (!l) throw ConfigError("unknown nonadaptive law '" + *a.law + "'");
    g.law = *l;
  }
  if (!a.k && g.kind == GeneratorKind::kTreatmentAssignment) g.k = 1;

  GeneratorConfig gen = c.generator_config(g.k, a.seed);
  gen.noise_seed = a.noise_seed;
  gen.spec.theta_star = a.theta ? theta_from_flag(*a.theta, c, a.seed) : c.resolve_theta(a.seed);
  try {
    gen.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const AdaptiveDataset ds = generate(gen);
  write_dataset(a.out, ds);
  if (!quiet)
    out << "wrote " << a.out << " (n=" << ds.n() << ", d=" << ds.d() << ", adaptive="
        << ds.k() << ")\n";
  return 0;
}

inline int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  AdaptiveDataset ds = read_dataset(a.dataset);
  if (!a.adaptive_cols.empty()) {
    ds.adaptive_idx.clear();
    for (std::size_t j : a.adaptive_cols) {
      if (j == 0 || j > ds.d()) throw ConfigError("--adaptive-cols entries must lie in 1..d");
      ds.adaptive_idx.push_back(j - 1);
    }
  }
  const auto method = parse_method(a.method);
  if (!method) throw ConfigError("unknown method '" + a.method + "'");
  const std::vector<double> alphas = a.alphas.empty() ? std::vector<double>{0.1} : a.alphas;
  const SigmaMode sigma = a.sigma ? SigmaMode::known(*a.sigma) : SigmaMode::residual();
  if (a.target && (*a.target == 0 || *a.target > ds.d()))
    throw ConfigError("--target must lie in 1..d");
  const std::size_t target = a.target ? *a.target - 1 : 0;

  EstimateReport r;
  switch (*method) {
    case Method::kOls: r = ols_report(ds, alphas, sigma); break;
    case Method::kCenteredOls: r = centered_ols(ds, alphas, sigma); break;
    case Method::kTale: {
      if (ds.k() != 1) throw ConfigError("tale needs exactly one adaptive column");
      TaleConfig tc;
      tc.s0 = a.s0;
      tc.sigma = sigma;
      tc.alpha_levels = alphas;
      r = tale_estimate(ds, tc).to_report();
      break;
    }
    case Method::kConcentrationCi: r = concentration_ci(ds, target, alphas, sigma); break;
    case Method::kWDecorrelation:
      if (!a.lambda) throw ConfigError("wdecorrelation needs --lambda");
      r = w_decorrelation(ds, *a.lambda, alphas, sigma);
      break;
  }

  std::ostringstream csv;
  csv << "method,coord,estimate,stderr,alpha,ci_lo,ci_hi,sigma_hat\n";
  for (std::size_t p = 0; p < r.target_idx.size(); ++p) {
    if (a.target && r.target_idx[p] != target) continue;
    const auto e = static_cast<Eigen::Index>(p);
    for (const auto& b : r.bands) {
      csv << to_string(r.method) << ',' << r.target_idx[p] + 1 << ',' << format_double(r.estimate(e))
          << ',' << (r.std_error ? format_double((*r.std_error)(e)) : "") << ','
          << format_double(b.alpha) << ',' << format_double(b.lower(e)) << ','
          << format_double(b.upper(e)) << ',' << format_double(r.sigma_hat) << '\n';
    }
  }
  if (a.out) {
    write_text_file(*a.out, csv.str());
  } else {
    out << csv.str();
  }
  return 0;
}

inline int cmd_experiment(const ExperimentArgs& a, std::ostream& out, bool quiet) {
  if (!a.config && !a.preset) throw ConfigError("experiment needs --config or --preset");
  ExperimentConfig c = base_config(a.config, a.preset);
  if (a.seed) c.master_seed = *a.seed;
  if (a.reps) c.n_reps = *a.reps;
  if (a.out) c.output_dir = *a.out;
  c.validate();

  const ExperimentResult res = simulate(c, RunOptions{a.jobs});
  const std::filesystem::path dir(c.output_dir);
  write_results(dir, c, res);
  if (quiet) return 0;

  out << c.name << ": " << res.records.size() << " replications, " << res.jobs << " worker(s), "
      << format_double(res.wall_seconds) << " s\n";
  out << "results in " << dir.string() << "\n";
  const double headline = 0.1;
  const bool has_headline = std::any_of(c.alpha_grid.begin(), c.alpha_grid.end(),
                                        [&](double x) { return std::abs(x - headline) < 1e-12; });
  const auto groups = group_outcomes(res.records);
  for (const auto& [key, outs] : groups) {
    out << "  k=" << key.first << " " << to_string(c.estimators[key.second]);
    if (has_headline) {
      const auto cov = coverage_and_width(outs, headline);
      out << "  coverage@0.90=" << cov.empirical << " width=" << cov.mean_width;
    }
    std::vector<double> mse;
    for (const auto& o : outs)
      if (o.scaled_mse) mse.push_back(*o.scaled_mse);
    if (!mse.empty()) out << "  scaled_mse=" << mean(mse);
    out << "\n";
  }
  return 0;
}

inline int cmd_report(const ReportArgs& a, std::ostream& out, bool quiet) {
  std::ostringstream csv;
  csv << "run," << kSummaryHeader << '\n';
  std::size_t rows = 0;
  for (const auto& dir : a.dirs) {
    const auto path = std::filesystem::path(dir) / "summary.csv";
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line) || line != kSummaryHeader)
      throw IoError(path.string() + ": not a summary.csv (header mismatch)");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      csv << dir << ',' << line << '\n';
      ++rows;
    }
  }
  if (a.out) {
    write_text_file(*a.out, csv.str());
    if (!quiet) out << "wrote " << *a.out << " (" << rows << " rows from " << a.dirs.size() << " runs)\n";
  } else {
    out << csv.str();
  }
  return 0;
}

inline int cmd_presets(const std::optional<std::string>& show, std::ostream& out) {
  if (show) {
    auto c = find_preset(*show);
    if (!c) throw ConfigError("unknown preset '" + *show + "'");
    out << echo(*c);
    return 0;
  }
  for (const auto& p : presets()) out << p.name << "\t" << p.description << "\n";
  return 0;
}

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"adareg: estimation and inference for adaptively collected linear-model data"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Emit one dataset CSV plus its .meta sidecar");
  gen->add_option("--config", ga.config, "Take generator settings from a config file");
  gen->add_option("--preset", ga.preset, "Take generator settings from a preset");
  gen->add_option("--kind", ga.kind, "iid | treatment_assignment | k_adaptive_greedy");
  gen->add_option("--n", ga.n, "Rows");
  gen->add_option("--d", ga.d, "Columns");
  gen->add_option("--k", ga.k, "Adaptive columns");
  gen->add_option("--sigma", ga.sigma, "Noise level");
  gen->add_option("--p-exploit", ga.p_exploit, "Exploitation probability");
  gen->add_option("--law", ga.law, "standard_gaussian | uniform_sphere | shifted_sphere");
  gen->add_option("--theta", ga.theta, "Rule name or comma-separated values");
  gen->add_option("--seed", ga.seed, "Dataset seed");
  gen->add_option("--noise-seed", ga.noise_seed, "Override the noise stream only");
  gen->add_option("--out", ga.out, "Output CSV path");

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "Run one estimator on a dataset CSV");
  est->add_option("--dataset", ea.dataset, "Dataset CSV")->required();
  est->add_option("--method", ea.method, "ols | centered_ols | tale | concentration | wdecorrelation");
  est->add_option("--adaptive-cols", ea.adaptive_cols, "1-based adaptive columns (overrides .meta)")
      ->delimiter(',');
  est->add_option("--alpha", ea.alphas, "Miscoverage levels (default 0.1)")->delimiter(',');
  est->add_option("--sigma", ea.sigma, "Known noise level (default: residual estimate)");
  est->add_option("--s0", ea.s0, "TALE s0 (default max(log log n, 0.01))");
  est->add_option("--lambda", ea.lambda, "W-decorrelation regularization");
  est->add_option("--target", ea.target, "1-based coordinate to report");
  est->add_option("--out", ea.out, "Write CSV here instead of stdout");

  ExperimentArgs xa;
  auto* exp = app.add_subcommand("experiment", "Run a Monte Carlo experiment");
  exp->add_option("--config", xa.config, "Experiment config file");
  exp->add_option("--preset", xa.preset, "Built-in preset name");
  exp->add_option("--seed", xa.seed, "Override master_seed");
  exp->add_option("--reps", xa.reps, "Override n_reps");
  exp->add_option("--out", xa.out, "Override output_dir");
  exp->add_option("--jobs", xa.jobs, "Worker threads (default: available parallelism)");

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "Concatenate summary.csv files from result directories");
  rep->add_option("dirs", ra.dirs, "Result directories")->required();
  rep->add_option("--out", ra.out, "Write the combined CSV here instead of stdout");

  std::optional<std::string> show;
  auto* pre = app.add_subcommand("presets", "List built-in presets");
  pre->add_option("--show", show, "Print the resolved config of one preset");

  std::vector<const char*> argv;
  argv.push_back("adareg");
  for (const auto& s : args) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(ga, out, quiet);
    if (*est) return cmd_estimate(ea, out);
    if (*exp) return cmd_experiment(xa, out, quiet);
    if (*rep) return cmd_report(ra, out, quiet);
    if (*pre) return cmd_presets(show, out);
  } catch (const RankDeficient& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateDesign& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace adareg::harness
