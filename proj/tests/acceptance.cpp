// Acceptance runner. Prints one PASS/FAIL line per criterion.
//   acceptance            run all criteria
//   acceptance --only N   run criterion N

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "adareg/estimators.hpp"
#include "adareg/harness/config.hpp"
#include "adareg/harness/experiment.hpp"
#include "adareg/metrics.hpp"

using namespace adareg;
using namespace adareg::harness;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream o;
  o.precision(digits);
  o << v;
  return o.str();
}

std::vector<MethodOutcome> outcomes_for(const ExperimentConfig& cfg, const ExperimentResult& res,
                                        Method m, std::size_t k) {
  const auto pos = std::find(cfg.estimators.begin(), cfg.estimators.end(), m) - cfg.estimators.begin();
  const auto groups = group_outcomes(res.records);
  const auto it = groups.find({k, static_cast<std::size_t>(pos)});
  return it == groups.end() ? std::vector<MethodOutcome>{} : it->second;
}

double coverage(const ExperimentConfig& cfg, const ExperimentResult& res, Method m, double alpha) {
  const auto os = outcomes_for(cfg, res, m, cfg.k_levels().front());
  return coverage_and_width(os, alpha).empirical;
}

double mean_width(const ExperimentConfig& cfg, const ExperimentResult& res, Method m, double alpha) {
  const auto os = outcomes_for(cfg, res, m, cfg.k_levels().front());
  return coverage_and_width(os, alpha).mean_width;
}

// The low-dimensional treatment run backs criteria 3, 5 and 6.
struct LowDimRun {
  ExperimentConfig cfg;
  ExperimentResult res;
  double seconds = 0.0;
};

const LowDimRun& low_dim_run() {
  static const LowDimRun run = [] {
    LowDimRun r;
    r.cfg = *find_preset("fig2-low");
    const auto t0 = Clock::now();
    r.res = simulate(r.cfg);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

Verdict criterion_1() {
  const auto t0 = Clock::now();
  const auto cfg = *find_preset("prop1-iid");
  const auto res = simulate(cfg);
  std::vector<double> v;
  for (const auto& rec : res.records) v.push_back(*rec.outcomes.front().scaled_mse);
  const double m = mean(v);
  const double secs = seconds_since(t0);
  return {std::abs(m - 2.0) <= 0.1 && secs < 30.0,
          "mean scaled-MSE " + fmt(m, 6) + " (target 2.0 +/- 0.1), " + fmt(secs, 3) + " s"};
}

Verdict criterion_2() {
  const auto t0 = Clock::now();
  const auto cfg = *find_preset("fig1-reduced");
  const auto res = simulate(cfg);
  std::vector<double> ks, means;
  for (std::size_t k : cfg.k_levels()) {
    std::vector<double> v;
    for (const auto& o : outcomes_for(cfg, res, Method::kOls, k)) v.push_back(*o.scaled_mse);
    ks.push_back(static_cast<double>(k));
    means.push_back(mean(v));
  }
  const auto trend = fit_linear_trend(ks, means);
  const double ratio = means.back() / means.front();
  const double secs = seconds_since(t0);
  return {trend.slope > 0.0 && trend.t_stat > 3.0 && ratio >= 3.0 && secs < 300.0,
          "slope " + fmt(trend.slope) + ", t " + fmt(trend.t_stat) + ", k=" + fmt(ks.back()) + "/k=" +
              fmt(ks.front()) + " ratio " + fmt(ratio) + ", " + fmt(secs, 3) + " s"};
}

Verdict criterion_3() {
  const auto& run = low_dim_run();
  const double tale = coverage(run.cfg, run.res, Method::kTale, 0.1);
  const double ols = coverage(run.cfg, run.res, Method::kOls, 0.1);
  const bool pass = tale >= 0.87 && tale <= 0.95 && ols < tale && ols < 0.87 && run.seconds < 600.0;
  return {pass, "TALE " + fmt(tale) + " (need [0.87, 0.95]), OLS " + fmt(ols) +
                    " (need < TALE and < 0.87), " + fmt(run.seconds, 3) + " s"};
}

Verdict criterion_4() {
  const auto t0 = Clock::now();
  const auto cfg = *find_preset("fig2-high");
  const auto res = simulate(cfg);
  const double tale = coverage(cfg, res, Method::kTale, 0.1);
  const double ols = coverage(cfg, res, Method::kOls, 0.1);
  const double wd = coverage(cfg, res, Method::kWDecorrelation, 0.1);
  const double secs = seconds_since(t0);
  return {tale >= 0.85 && ols < tale && wd < tale && secs < 600.0,
          "TALE " + fmt(tale) + " (need >= 0.85), OLS " + fmt(ols) + ", W-decorrelation " + fmt(wd) +
              " (both need < TALE), " + fmt(secs, 3) + " s"};
}

Verdict criterion_5() {
  const auto& run = low_dim_run();
  const auto k = run.cfg.k_levels().front();
  const auto tale = standardized_errors(outcomes_for(run.cfg, run.res, Method::kTale, k));
  const auto ols = standardized_errors(outcomes_for(run.cfg, run.res, Method::kOls, k));
  return {tale.passes_ks(0.01) && !ols.passes_ks(0.01),
          "TALE KS D=" + fmt(tale.ks_distance) + " p=" + fmt(tale.ks_pvalue) + ", OLS KS D=" +
              fmt(ols.ks_distance) + " p=" + fmt(ols.ks_pvalue) + " (level 0.01)"};
}

Verdict criterion_6() {
  const auto& run = low_dim_run();
  const double cov = coverage(run.cfg, run.res, Method::kConcentrationCi, 0.1);
  const double w = mean_width(run.cfg, run.res, Method::kConcentrationCi, 0.1);
  const double wt = mean_width(run.cfg, run.res, Method::kTale, 0.1);
  return {cov >= 0.97 && w > wt, "concentration coverage " + fmt(cov) + " (need >= 0.97), width " +
                                     fmt(w) + " vs TALE " + fmt(wt)};
}

// ---------------------------------------------------------------------------
// Invariant suite

struct Rng {
  std::mt19937_64 eng;
  std::normal_distribution<double> nd{0.0, 1.0};
  explicit Rng(std::uint64_t s) : eng(s) {}
  double normal() { return nd(eng); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
  Matrix gaussian(int r, int c) {
    Matrix m(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) m(i, j) = normal();
    return m;
  }
};

std::string weight_bound() {
  Rng rng(701);
  const double bound = 1.0 / std::log(2.0) + 1e-9;
  for (int t = 0; t < 1000; ++t) {
    const int n = rng.integer(1, 2000);
    Vector x(n);
    for (int i = 0; i < n; ++i)
      x(i) = t % 2 ? rng.normal() : (rng.uniform(0, 1) < 0.5 ? 1.0 : 0.0);
    const double s = tale_weights(x, std::exp(rng.uniform(-6, 6))).w.squaredNorm();
    if (!(s <= bound)) return "weight bound violated: " + fmt(s, 17);
  }
  return {};
}

std::string centered_equivalence() {
  Rng rng(702);
  for (int t = 0; t < 100; ++t) {
    const int d = rng.integer(1, 8);
    const int n = d + 2 + rng.integer(0, 40);
    AdaptiveDataset ds;
    ds.X = rng.gaussian(n, d);
    for (int j = 0; j < d; ++j) ds.X.col(j).array() += rng.uniform(-3, 3);
    ds.y = rng.gaussian(n, 1).col(0).array() + 1.5;
    Matrix aug(n, d + 1);
    aug << Matrix::Ones(n, 1), ds.X;
    const Vector oracle = aug.colPivHouseholderQr().solve(ds.y);
    const double gap = (centered_ols(ds, {}).estimate - oracle.tail(d)).cwiseAbs().maxCoeff();
    if (!(gap <= 1e-9)) return "centered OLS differs from augmented OLS by " + fmt(gap);
  }
  return {};
}

std::string scaled_mse_dual() {
  Rng rng(703);
  for (int t = 0; t < 100; ++t) {
    const int d = rng.integer(2, 8);
    const Matrix X = rng.gaussian(d + rng.integer(2, 40), d);
    IndexSet idx;
    for (int j = 0; j < d; ++j)
      if (rng.uniform(0, 1) < 0.4) idx.push_back(static_cast<std::size_t>(j));
    if (idx.empty()) idx.push_back(0);
    const Matrix Sinv = (X.transpose() * X).inverse();
    Matrix block(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b)
        block(a, b) = Sinv(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]));
    const Vector e = rng.gaussian(static_cast<int>(idx.size()), 1).col(0);
    const double oracle = e.dot(block.inverse() * e);
    const double v = scaled_mse(e, Vector::Zero(e.size()), X, idx);
    if (!(std::abs(v - oracle) <= 1e-8 * oracle)) return "scaled-MSE forms disagree: " + fmt(v) + " vs " + fmt(oracle);
  }
  return {};
}

std::string tale_residual() {
  Rng rng(704);
  for (int t = 0; t < 100; ++t) {
    const int d = rng.integer(2, 12);
    const int n = d + 10 + rng.integer(0, 200);
    AdaptiveDataset ds;
    ds.X = rng.gaussian(n, d);
    for (int i = 0; i < n; ++i) ds.X(i, 0) = rng.uniform(0, 1) < 0.6 ? 1.0 : 0.0;
    ds.y = ds.X * rng.gaussian(d, 1).col(0) + rng.gaussian(n, 1).col(0);
    ds.adaptive_idx = {0};
    TaleConfig cfg;
    cfg.s0 = rng.uniform(0.1, 3.0);
    const auto r = tale_estimate(ds, cfg);
    const Vector w = tale_weights(ds.X.col(0), *cfg.s0).w;
    const IndexSet nad = ds.nonadaptive_idx();
    const Vector prior = select_entries(solve_least_squares(ds.X, ds.y).coefficients, nad);
    const Vector resid = ds.y - ds.X.col(0) * r.theta_hat - select_columns(ds.X, nad) * prior;
    const double scale = w.cwiseAbs().dot(ds.y.cwiseAbs() + ds.X.cwiseAbs().rowwise().sum());
    if (!(std::abs(w.dot(resid)) <= 1e-9 * scale)) return "TALE estimating equation residual " + fmt(w.dot(resid));
  }
  return {};
}

std::string weight_integral() {
  using boost::math::quadrature::gauss_kronrod;
  // f(e^t)^2 e^t after x = e^t
  auto g = [](double t) {
    const double l = 2.0 + t;
    return 1.0 / (l * std::log(l) * std::log(l));
  };
  for (double t : {0.0, 3.0, 300.0}) {
    const double fx = f_weight(std::exp(t));
    if (!(std::abs(g(t) - fx * fx * std::exp(t)) <= 1e-12 * g(t))) return "integrand mismatch at t=" + fmt(t);
  }
  const double T = 1e300;
  auto h = [&](double s) { return g(std::expm1(s)) * std::exp(s); };
  const double total = gauss_kronrod<double, 61>::integrate(h, 0.0, std::log1p(T), 20, 1e-13) +
                       1.0 / std::log(2.0 + T);
  if (!(std::abs(total - 1.0 / std::log(2.0)) <= 1e-3)) return "f^2 integral " + fmt(total, 10);
  return {};
}

std::string projection_properties() {
  Rng rng(705);
  for (int t = 0; t < 25; ++t) {
    const int n = rng.integer(6, 30);
    const Matrix M = rng.gaussian(n, rng.integer(1, 5));
    Matrix P(n, n);
    for (int j = 0; j < n; ++j) P.col(j) = projection_onto_columns(M, Vector::Unit(n, j));
    if (!((P - P.transpose()).norm() <= 1e-10 && (P * P - P).norm() <= 1e-10))
      return "projection not symmetric idempotent";
  }
  return {};
}

Verdict criterion_7() {
  const auto t0 = Clock::now();
  const std::vector<std::pair<const char*, std::function<std::string()>>> checks = {
      {"weight bound", weight_bound},
      {"centered OLS", centered_equivalence},
      {"scaled-MSE dual form", scaled_mse_dual},
      {"TALE residual", tale_residual},
      {"weight integral", weight_integral},
      {"projection", projection_properties},
  };
  std::string failures;
  for (const auto& [name, fn] : checks) {
    const std::string msg = fn();
    if (!msg.empty()) failures += std::string(failures.empty() ? "" : "; ") + name + ": " + msg;
  }
  const double secs = seconds_since(t0);
  return {failures.empty() && secs < 10.0,
          (failures.empty() ? std::to_string(checks.size()) + " invariant groups hold" : failures) + ", " +
              fmt(secs, 3) + " s"};
}

Verdict criterion_8() {
  const auto cfg = *find_preset("fig2-low");
  auto text = [&](std::size_t jobs) {
    std::ostringstream o;
    write_replications(o, cfg, simulate(cfg, RunOptions{jobs}).records);
    return o.str();
  };
  const std::string a = text(1);
  const std::string b = text(1);
  const std::string c = text(8);
  return {a == b && a == c, std::string("rerun ") + (a == b ? "identical" : "differs") + ", 1 vs 8 workers " +
                                (a == c ? "identical" : "differs") + " (" + std::to_string(a.size()) +
                                " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Verdict()>> criteria = {
      {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4},
      {5, criterion_5}, {6, criterion_6}, {7, criterion_7}, {8, criterion_8},
  };
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--only N]\n";
      return 2;
    }
  }
  if (only != 0 && !criteria.count(only)) {
    std::cerr << "unknown criterion " << only << '\n';
    return 2;
  }

  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (only != 0 && id != only) continue;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
