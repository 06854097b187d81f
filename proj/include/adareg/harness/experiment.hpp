#pragma once

// Replication driver and CSV persistence.
//
// Replication `rep` at sweep level k uses the dataset seed
//   derive_seed(derive_seed(master_seed, k), rep)
// and the W-decorrelation calibration for level k uses
//   derive_seed(derive_seed(master_seed, k), kCalibrationKey).
// Workers claim (k, rep) tasks from a shared counter; results land in a slot
// per task and are written in (k, rep) order once every worker has joined.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "adareg/estimators.hpp"
#include "adareg/generators.hpp"
#include "adareg/harness/config.hpp"
#include "adareg/metrics.hpp"
#include "adareg/records.hpp"

namespace adareg::harness {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr std::uint64_t kCalibrationKey = 0xca11b7a7e0000000ULL;

inline const char* const kReplicationHeader =
    "experiment,name,k,rep,method,coord,estimate,stderr,alpha,ci_lo,ci_hi,covered,scaled_mse,"
    "std_err_pivot,sigma_hat,runtime_ms";
inline const char* const kSummaryHeader =
    "experiment,k,method,coord,alpha,nominal,empirical,empirical_se,mean_width,width_sd,n_reps,"
    "scaled_mse_mean,scaled_mse_sd,pivot_mean,pivot_sd,ks_distance,ks_pvalue";

inline std::uint64_t level_seed(std::uint64_t master, std::size_t k) { return derive_seed(master, k); }

inline std::uint64_t replication_seed(std::uint64_t master, std::size_t k, std::uint64_t rep) {
  return derive_seed(level_seed(master, k), rep);
}

struct RunOptions {
  /// 0 means std::thread::hardware_concurrency().
  std::size_t jobs = 0;
};

/// Per-level inputs shared by all replications of that level.
struct LevelContext {
  std::size_t k = 0;
  std::optional<double> wdecorr_lambda;
};

inline LevelContext prepare_level(const ExperimentConfig& cfg, std::size_t k) {
  LevelContext lv;
  lv.k = k;
  const bool needs_lambda = std::find(cfg.estimators.begin(), cfg.estimators.end(),
                                      Method::kWDecorrelation) != cfg.estimators.end();
  if (!needs_lambda) return lv;
  if (cfg.estimation.wdecorr_lambda) {
    lv.wdecorr_lambda = cfg.estimation.wdecorr_lambda;
    return lv;
  }
  GeneratorConfig gen = cfg.generator_config(k, 0);
  gen.spec.theta_star = cfg.resolve_theta(level_seed(cfg.master_seed, k));
  lv.wdecorr_lambda = calibrate_wdecorr_lambda(
      gen, cfg.estimation.wdecorr_calibration_draws,
      derive_seed(level_seed(cfg.master_seed, k), kCalibrationKey));
  return lv;
}

inline EstimateReport run_method(Method m, const AdaptiveDataset& ds, const ExperimentConfig& cfg,
                                 const LevelContext& lv) {
  const SigmaMode sigma = cfg.sigma_mode();
  const auto& alphas = cfg.alpha_grid;
  switch (m) {
    case Method::kOls: return ols_report(ds, alphas, sigma);
    case Method::kCenteredOls: return centered_ols(ds, alphas, sigma);
    case Method::kTale: {
      TaleConfig tc;
      tc.s0 = cfg.estimation.tale_s0;
      tc.sigma = sigma;
      tc.alpha_levels = alphas;
      return tale_estimate(ds, tc).to_report();
    }
    case Method::kConcentrationCi:
      return concentration_ci(ds, cfg.estimation.target, alphas, sigma);
    case Method::kWDecorrelation:
      return w_decorrelation(ds, *lv.wdecorr_lambda, alphas, sigma);
  }
  throw InvalidArgument("unknown method");
}

inline bool covers_all(const EstimateReport& r, const IndexSet& idx) {
  return std::all_of(idx.begin(), idx.end(), [&](std::size_t j) {
    return std::find(r.target_idx.begin(), r.target_idx.end(), j) != r.target_idx.end();
  });
}

inline std::optional<double> report_scaled_mse(const EstimateReport& r, const AdaptiveDataset& ds,
                                               const Vector& theta, const IndexSet& idx) {
  if (!covers_all(r, idx)) return std::nullopt;
  Vector hat(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const auto pos = std::find(r.target_idx.begin(), r.target_idx.end(), idx[a]) - r.target_idx.begin();
    hat(static_cast<Eigen::Index>(a)) = r.estimate(pos);
  }
  const Vector star = select_entries(theta, idx);
  // Centered OLS is judged against the design it actually fits.
  const Matrix& X = ds.X;
  if (r.method == Method::kCenteredOls) return scaled_mse(hat, star, center_columns(X), idx);
  return scaled_mse(hat, star, X, idx);
}

inline ReplicationRecord run_replication(const ExperimentConfig& cfg, const LevelContext& lv,
                                         std::uint64_t rep) {
  ReplicationRecord rec;
  rec.k = lv.k;
  rec.rep = rep;
  rec.seed = replication_seed(cfg.master_seed, lv.k, rep);

  GeneratorConfig gen = cfg.generator_config(lv.k, rec.seed);
  gen.spec.theta_star = cfg.resolve_theta(rec.seed);
  const AdaptiveDataset ds = generate(gen);
  const std::size_t target = cfg.estimation.target;
  const IndexSet mse_set = cfg.resolved_scaled_mse_set();

  for (Method m : cfg.estimators) {
    const auto start = std::chrono::steady_clock::now();
    const EstimateReport r = run_method(m, ds, cfg, lv);
    const auto stop = std::chrono::steady_clock::now();
    if (!covers_all(r, {target}))
      throw InvalidArgument(std::string(to_string(m)) + " does not report the target coordinate");
    MethodOutcome o = outcome_from_report(r, target, gen.spec.theta_star(static_cast<Eigen::Index>(target)));
    o.scaled_mse = report_scaled_mse(r, ds, gen.spec.theta_star, mse_set);
    if (cfg.record_runtime)
      o.runtime_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    rec.outcomes.push_back(std::move(o));
  }
  return rec;
}

struct ExperimentResult {
  std::vector<LevelContext> levels;
  std::vector<ReplicationRecord> records;  // ordered by (k, rep)
  double wall_seconds = 0.0;
  std::size_t jobs = 1;
};

inline std::size_t resolve_jobs(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

inline ExperimentResult simulate(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult res;
  for (std::size_t k : cfg.k_levels()) res.levels.push_back(prepare_level(cfg, k));

  const std::size_t total = res.levels.size() * cfg.n_reps;
  res.records.resize(total);
  res.jobs = std::min(resolve_jobs(opt.jobs), std::max<std::size_t>(total, 1));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= total || failed.load()) return;
      try {
        res.records[task] = run_replication(cfg, res.levels[task / cfg.n_reps], task % cfg.n_reps);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
    }
  };

  if (res.jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < res.jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

inline void write_outcome_rows(std::ostream& out, const ExperimentConfig& cfg,
                               const ReplicationRecord& rec, const MethodOutcome& o) {
  std::ostringstream prefix;
  prefix << cfg.name << ',' << to_string(cfg.generator.kind) << ',' << rec.k << ',' << rec.rep
         << ',' << to_string(o.method) << ',' << o.coord + 1 << ',' << format_double(o.estimate)
         << ',' << opt(o.std_error) << ',';
  std::ostringstream suffix;
  suffix << opt(o.scaled_mse) << ',' << opt(o.pivot()) << ',' << format_double(o.sigma_hat) << ','
         << opt(o.runtime_ms) << '\n';
  if (o.intervals.empty()) {
    out << prefix.str() << ",,,," << suffix.str();
    return;
  }
  for (const auto& ci : o.intervals) {
    out << prefix.str() << format_double(ci.alpha) << ',' << format_double(ci.lower) << ','
        << format_double(ci.upper) << ',' << (ci.covers(o.truth) ? 1 : 0) << ','
        << suffix.str();
  }
}

inline std::pair<std::string, std::string> mean_sd(const std::vector<double>& xs) {
  if (xs.empty()) return {"", ""};
  return {format_double(mean(xs)), xs.size() > 1 ? format_double(sample_sd(xs)) : ""};
}

}  // namespace detail

inline void write_replications(std::ostream& out, const ExperimentConfig& cfg,
                               const std::vector<ReplicationRecord>& records) {
  out << kReplicationHeader << '\n';
  for (const auto& rec : records)
    for (const auto& o : rec.outcomes) detail::write_outcome_rows(out, cfg, rec, o);
}

/// Per-level, per-method outcomes in replication order.
inline std::map<std::pair<std::size_t, std::size_t>, std::vector<MethodOutcome>> group_outcomes(
    const std::vector<ReplicationRecord>& records) {
  std::map<std::pair<std::size_t, std::size_t>, std::vector<MethodOutcome>> groups;
  for (const auto& rec : records)
    for (std::size_t m = 0; m < rec.outcomes.size(); ++m) groups[{rec.k, m}].push_back(rec.outcomes[m]);
  return groups;
}

inline void write_summary(std::ostream& out, const ExperimentConfig& cfg,
                          const ExperimentResult& res) {
  out << kSummaryHeader << '\n';
  const auto groups = group_outcomes(res.records);
  for (const auto& lv : res.levels) {
    for (std::size_t m = 0; m < cfg.estimators.size(); ++m) {
      const auto it = groups.find({lv.k, m});
      if (it == groups.end()) continue;
      const auto& outs = it->second;

      std::vector<double> mse;
      for (const auto& o : outs)
        if (o.scaled_mse) mse.push_back(*o.scaled_mse);
      const auto [mse_mean, mse_sd] = detail::mean_sd(mse);

      const StandardizedErrors se = standardized_errors(outs);
      const auto [piv_mean, piv_sd] = detail::mean_sd(se.values);
      const std::string ks_d = se.values.empty() ? "" : format_double(se.ks_distance);
      const std::string ks_p = se.values.empty() ? "" : format_double(se.ks_pvalue);

      std::ostringstream head;
      head << cfg.name << ',' << lv.k << ',' << to_string(cfg.estimators[m]) << ','
           << cfg.estimation.target + 1 << ',';
      std::ostringstream tail;
      tail << outs.size() << ',' << mse_mean << ',' << mse_sd << ',' << piv_mean << ',' << piv_sd
           << ',' << ks_d << ',' << ks_p << '\n';

      if (cfg.alpha_grid.empty()) {
        out << head.str() << ",,,,,," << tail.str();
        continue;
      }
      for (double a : cfg.alpha_grid) {
        const CoverageSummary c = coverage_and_width(outs, a);
        out << head.str() << format_double(a) << ',' << format_double(c.nominal) << ','
            << format_double(c.empirical) << ',' << format_double(c.empirical_se) << ','
            << format_double(c.mean_width) << ','
            << (c.n_reps > 1 ? format_double(c.width_sd) : "") << ',' << tail.str();
      }
    }
  }
}

inline nlohmann::json manifest(const ExperimentConfig& cfg, const ExperimentResult& res) {
  nlohmann::json j;
  j["tool"] = "adareg";
  j["version"] = kVersion;
  j["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                       std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);
  j["compiler"] = __VERSION__;
  j["experiment"] = cfg.name;
  j["master_seed"] = cfg.master_seed;
  j["n_reps"] = cfg.n_reps;
  j["jobs"] = res.jobs;
  j["wall_time_seconds"] = res.wall_seconds;
  j["seed_scheme"] = "rep_seed = derive_seed(derive_seed(master_seed, k), rep); splitmix64";
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lv : res.levels) {
    nlohmann::json l;
    l["k"] = lv.k;
    l["level_seed"] = level_seed(cfg.master_seed, lv.k);
    if (lv.wdecorr_lambda) l["wdecorr_lambda"] = *lv.wdecorr_lambda;
    levels.push_back(l);
  }
  j["levels"] = levels;
  j["files"] = {"replications.csv", "summary.csv", "config.echo", "manifest.json"};
  return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

inline void write_results(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                          const ExperimentResult& res) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  std::ostringstream reps;
  write_replications(reps, cfg, res.records);
  write_text_file(dir / "replications.csv", reps.str());

  std::ostringstream summary;
  write_summary(summary, cfg, res);
  write_text_file(dir / "summary.csv", summary.str());

  write_text_file(dir / "config.echo", echo(cfg));
  write_text_file(dir / "manifest.json", manifest(cfg, res).dump(2) + "\n");
}

/// Runs every replication and writes the four result files into
/// cfg.output_dir, which is returned.
inline std::filesystem::path run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const ExperimentResult res = simulate(cfg, opt);
  const std::filesystem::path dir(cfg.output_dir);
  write_results(dir, cfg, res);
  return dir;
}

}  // namespace adareg::harness
