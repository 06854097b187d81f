#pragma once

// Estimator suite for the (k,d)-adaptive linear model: OLS, centered OLS,
// the two-stage adaptive linear estimating equation (TALE), a self-normalized
// concentration interval and the W-decorrelation baseline.
//
// Estimators never draw random numbers; calibrate_wdecorr_lambda is the one
// routine here that samples, and it does so only through explicit seeds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adareg/generators.hpp"
#include "adareg/model_core.hpp"
#include "adareg/random.hpp"
#include "adareg/stats.hpp"

namespace adareg {

class DegenerateDesign : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { kOls, kCenteredOls, kTale, kConcentrationCi, kWDecorrelation };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kOls: return "ols";
    case Method::kCenteredOls: return "centered_ols";
    case Method::kTale: return "tale";
    case Method::kConcentrationCi: return "concentration";
    case Method::kWDecorrelation: return "wdecorrelation";
  }
  return "unknown";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (auto m : {Method::kOls, Method::kCenteredOls, Method::kTale, Method::kConcentrationCi,
                 Method::kWDecorrelation})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

/// Known noise level, or the residual estimate from the fit.
struct SigmaMode {
  std::optional<double> plugin;

  static SigmaMode known(double sigma) { return SigmaMode{sigma}; }
  static SigmaMode residual() { return SigmaMode{}; }
};

struct ConfidenceBand {
  double alpha = 0.1;
  Vector lower;
  Vector upper;
};

struct EstimateReport {
  Method method = Method::kOls;
  Vector estimate;
  std::optional<Vector> std_error;
  std::vector<ConfidenceBand> bands;
  /// Coordinates of the full parameter that `estimate` covers, in order.
  IndexSet target_idx;
  double sigma_hat = 0.0;

  const ConfidenceBand* band(double alpha) const {
    for (const auto& b : bands)
      if (std::abs(b.alpha - alpha) <= 1e-12) return &b;
    return nullptr;
  }
};

namespace detail {

inline void check_alphas(std::span<const double> alphas) {
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("alpha levels must lie in (0, 1)");
}

inline std::vector<ConfidenceBand> normal_bands(const Vector& est, const Vector& se,
                                                std::span<const double> alphas) {
  std::vector<ConfidenceBand> out;
  out.reserve(alphas.size());
  for (double a : alphas) {
    const double z = two_sided_z(a);
    out.push_back({a, est - z * se, est + z * se});
  }
  return out;
}

inline double residual_sigma(const Vector& residual, std::size_t dof) {
  if (dof == 0) throw InvalidArgument("residual sigma needs positive degrees of freedom");
  return std::sqrt(residual.squaredNorm() / static_cast<double>(dof));
}

}  // namespace detail

/// sqrt(RSS / (n - d)) from the full OLS fit.
inline double estimate_sigma(const AdaptiveDataset& ds) {
  if (ds.n() <= ds.d()) throw InvalidArgument("estimate_sigma requires n > d");
  const auto fit = solve_least_squares(ds.X, ds.y);
  return detail::residual_sigma(ds.y - ds.X * fit.coefficients, ds.n() - ds.d());
}

inline EstimateReport ols_report(const AdaptiveDataset& ds, std::span<const double> alphas,
                                 SigmaMode sigma = SigmaMode::residual()) {
  detail::check_alphas(alphas);
  const auto fit = solve_least_squares(ds.X, ds.y);
  EstimateReport r;
  r.method = Method::kOls;
  r.estimate = fit.coefficients;
  r.target_idx = iota_set(0, ds.d());
  r.sigma_hat = sigma.plugin ? *sigma.plugin
                             : detail::residual_sigma(ds.y - ds.X * fit.coefficients,
                                                      ds.n() - ds.d());
  Vector se = r.sigma_hat * fit.gram_inverse.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.bands = detail::normal_bands(r.estimate, se, alphas);
  r.std_error = std::move(se);
  return r;
}

/// Centers every column and the response by its sample mean, then runs OLS on
/// the centered system. Standard errors come from the centered gram inverse;
/// the residual noise estimate uses n - d - 1 degrees of freedom (the mean
/// absorbs one).
inline EstimateReport centered_ols(const AdaptiveDataset& ds, std::span<const double> alphas,
                                   SigmaMode sigma = SigmaMode::residual()) {
  detail::check_alphas(alphas);
  if (ds.n() < ds.d() + 1) throw RankDeficient(ds.n() > 0 ? ds.n() - 1 : 0, ds.d());
  const Matrix Xc = center_columns(ds.X);
  const Vector yc = center(ds.y);
  const auto fit = solve_least_squares(Xc, yc);
  EstimateReport r;
  r.method = Method::kCenteredOls;
  r.estimate = fit.coefficients;
  r.target_idx = iota_set(0, ds.d());
  r.sigma_hat = sigma.plugin ? *sigma.plugin
                             : detail::residual_sigma(yc - Xc * fit.coefficients,
                                                      ds.n() - ds.d() - 1);
  Vector se = r.sigma_hat * fit.gram_inverse.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.bands = detail::normal_bands(r.estimate, se, alphas);
  r.std_error = std::move(se);
  return r;
}

// ---------------------------------------------------------------------------
// TALE

/// f(x) = 1 / sqrt(x log(e^2 x) (log log(e^2 x))^2), defined for x >= 1.
inline double f_weight(double x) {
  if (!(x >= 1.0)) throw DomainError("f_weight: argument must be >= 1");
  const double l = 2.0 + std::log(x);  // log(e^2 x)
  const double ll = std::log(l);
  return 1.0 / std::sqrt(x * l * ll * ll);
}

struct TaleWeights {
  Vector w;
  /// s_i = s0 + sum_{t <= i} x_t^2
  Vector s;
};

/// w_i = f(s_i / s0) x_i / sqrt(s0). w_i depends on x_1..x_i only.
inline TaleWeights tale_weights(const Vector& x_ad, double s0) {
  if (!(s0 > 0.0)) throw InvalidArgument("tale_weights: s0 must be positive");
  TaleWeights out{Vector(x_ad.size()), Vector(x_ad.size())};
  const double root = std::sqrt(s0);
  double running = s0;
  for (Eigen::Index i = 0; i < x_ad.size(); ++i) {
    running += x_ad(i) * x_ad(i);
    out.s(i) = running;
    out.w(i) = f_weight(running / s0) * x_ad(i) / root;
  }
  return out;
}

/// log log n, clamped below at 1e-2 where it would be tiny or undefined.
inline double default_s0(std::size_t n) {
  const double v = n >= 2 ? std::log(std::log(static_cast<double>(n))) : 0.0;
  return std::isfinite(v) ? std::max(v, 1e-2) : 1e-2;
}

struct TaleConfig {
  std::optional<double> s0;
  SigmaMode sigma = SigmaMode::residual();
  std::vector<double> alpha_levels;
  /// Prior for the non-adaptive block; the OLS fit when absent.
  std::optional<Vector> prior_nad;
};

struct TaleInterval {
  double alpha;
  double lower;
  double upper;
};

struct TaleResult {
  std::size_t coord = 0;
  double theta_hat = 0.0;
  double weight_sum_sq = 0.0;
  double design_sum = 0.0;
  double sigma_hat = 0.0;
  double std_error = 0.0;
  double s0 = 0.0;
  std::vector<TaleInterval> intervals;
  /// sum_i w_i e_i with e the full-OLS residuals.
  double v_proxy = 0.0;
  /// sum_i w_i x_nad,i^T (theta_ols_nad - prior_nad); zero with the OLS prior.
  double b_proxy = 0.0;

  /// Standardized error (theta_hat - truth) / std_error.
  double pivot(double truth) const { return (theta_hat - truth) / std_error; }

  EstimateReport to_report() const {
    EstimateReport r;
    r.method = Method::kTale;
    r.estimate = Vector::Constant(1, theta_hat);
    r.std_error = Vector::Constant(1, std_error);
    r.target_idx = {coord};
    r.sigma_hat = sigma_hat;
    for (const auto& ci : intervals)
      r.bands.push_back({ci.alpha, Vector::Constant(1, ci.lower), Vector::Constant(1, ci.upper)});
    return r;
  }
};

/// Solves sum_i w_i (y_i - x_ad,i theta - x_nad,i^T prior) = 0 for theta.
/// The equation is affine in theta, so the solution is closed form.
inline TaleResult tale_estimate(const AdaptiveDataset& ds, const TaleConfig& cfg) {
  detail::check_alphas(cfg.alpha_levels);
  if (ds.k() != 1) throw InvalidArgument("tale_estimate: exactly one adaptive coordinate required");
  if (ds.n() <= ds.d()) throw InvalidArgument("tale_estimate requires n > d");

  const std::size_t coord = ds.adaptive_idx.front();
  const IndexSet nad = ds.nonadaptive_idx();
  const Vector x_ad = ds.X.col(static_cast<Eigen::Index>(coord));
  const Matrix X_nad = select_columns(ds.X, nad);

  TaleResult out;
  out.coord = coord;
  out.s0 = cfg.s0 ? *cfg.s0 : default_s0(ds.n());
  const TaleWeights tw = tale_weights(x_ad, out.s0);

  out.design_sum = tw.w.dot(x_ad);
  if (out.design_sum == 0.0 || !std::isfinite(out.design_sum))
    throw DegenerateDesign("tale_estimate: sum_i w_i x_ad,i is zero");
  out.weight_sum_sq = tw.w.squaredNorm();

  const auto fit = solve_least_squares(ds.X, ds.y);
  const Vector ols_nad = select_entries(fit.coefficients, nad);
  const Vector prior = cfg.prior_nad ? *cfg.prior_nad : ols_nad;
  if (static_cast<std::size_t>(prior.size()) != nad.size())
    throw InvalidArgument("tale_estimate: prior has the wrong length");

  const Vector partial = ds.y - X_nad * prior;
  out.theta_hat = tw.w.dot(partial) / out.design_sum;

  const Vector ols_residual = ds.y - ds.X * fit.coefficients;
  out.v_proxy = tw.w.dot(ols_residual);
  out.b_proxy = tw.w.dot(X_nad * (ols_nad - prior));

  out.sigma_hat = cfg.sigma.plugin
                      ? *cfg.sigma.plugin
                      : detail::residual_sigma(ols_residual, ds.n() - ds.d());
  out.std_error = out.sigma_hat * std::sqrt(out.weight_sum_sq) / std::abs(out.design_sum);
  for (double a : cfg.alpha_levels) {
    const double z = two_sided_z(a);
    out.intervals.push_back({a, out.theta_hat - z * out.std_error,
                             out.theta_hat + z * out.std_error});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Self-normalized concentration interval

/// OLS-centred interval of radius
///   sqrt(V_jj * 2 sigma^2 * log(det(X^T X)^{1/2} / delta)),  V = (X^T X + I)^{-1}.
/// The log term is clamped at zero.
inline EstimateReport concentration_ci(const AdaptiveDataset& ds, std::size_t target,
                                       std::span<const double> deltas,
                                       SigmaMode sigma = SigmaMode::residual()) {
  detail::check_alphas(deltas);
  if (target >= ds.d()) throw InvalidArgument("concentration_ci: target out of range");
  const OrthogonalFactorization qr(ds.X);
  const Vector coef = qr.solve(ds.y);
  const auto j = static_cast<Eigen::Index>(target);

  const Matrix gram = ds.X.transpose() * ds.X;
  const Matrix regularized = gram + Matrix::Identity(gram.rows(), gram.cols());
  const Eigen::LDLT<Matrix> ldlt(regularized);
  Vector e = Vector::Zero(gram.rows());
  e(j) = 1.0;
  const double v_jj = ldlt.solve(e)(j);
  const double half_log_det = 0.5 * qr.log_det_gram();

  EstimateReport r;
  r.method = Method::kConcentrationCi;
  r.estimate = Vector::Constant(1, coef(j));
  r.target_idx = {target};
  r.sigma_hat = sigma.plugin ? *sigma.plugin
                             : detail::residual_sigma(ds.y - ds.X * coef, ds.n() - ds.d());
  for (double delta : deltas) {
    const double log_term = std::max(0.0, half_log_det - std::log(delta));
    const double radius = std::sqrt(v_jj * 2.0 * r.sigma_hat * r.sigma_hat * log_term);
    r.bands.push_back({delta, Vector::Constant(1, coef(j) - radius),
                       Vector::Constant(1, coef(j) + radius)});
  }
  return r;
}

inline EstimateReport concentration_ci(const AdaptiveDataset& ds, std::size_t target, double delta,
                                       SigmaMode sigma = SigmaMode::residual()) {
  const double deltas[] = {delta};
  return concentration_ci(ds, target, deltas, sigma);
}

// ---------------------------------------------------------------------------
// W-decorrelation

/// Online decorrelation of OLS:
///   w_t = (I - sum_{s<t} w_s x_s^T) x_t / (lambda + |x_t|^2),
///   theta_d = theta_ols + W (y - X theta_ols),
/// with normal intervals from sigma^2 W W^T.
inline EstimateReport w_decorrelation(const AdaptiveDataset& ds, double lambda,
                                      std::span<const double> alphas,
                                      SigmaMode sigma = SigmaMode::residual()) {
  detail::check_alphas(alphas);
  if (!(lambda > 0.0)) throw InvalidArgument("w_decorrelation: lambda must be positive");
  const auto fit = solve_least_squares(ds.X, ds.y);
  const Eigen::Index d = ds.X.cols();
  const Vector residual = ds.y - ds.X * fit.coefficients;

  Matrix accumulated = Matrix::Zero(d, d);  // sum_s w_s x_s^T
  Matrix spread = Matrix::Zero(d, d);       // W W^T
  Vector correction = Vector::Zero(d);      // W residual
  for (Eigen::Index t = 0; t < ds.X.rows(); ++t) {
    const Vector x = ds.X.row(t).transpose();
    const Vector w = (x - accumulated * x) / (lambda + x.squaredNorm());
    accumulated.noalias() += w * x.transpose();
    spread.noalias() += w * w.transpose();
    correction += w * residual(t);
  }

  EstimateReport r;
  r.method = Method::kWDecorrelation;
  r.estimate = fit.coefficients + correction;
  r.target_idx = iota_set(0, ds.d());
  r.sigma_hat = sigma.plugin ? *sigma.plugin : detail::residual_sigma(residual, ds.n() - ds.d());
  Vector se = r.sigma_hat * spread.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.bands = detail::normal_bands(r.estimate, se, alphas);
  r.std_error = std::move(se);
  return r;
}

/// Linear-interpolation sample quantile (the "type 7" convention).
inline double empirical_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw InvalidArgument("empirical_quantile: no values");
  if (!(level >= 0.0 && level <= 1.0)) throw InvalidArgument("empirical_quantile: bad level");
  std::sort(values.begin(), values.end());
  const double pos = level * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

inline double min_gram_eigenvalue(const Matrix& X) {
  const Matrix gram = X.transpose() * X;
  return Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

/// Quantile at `level` of lambda_min(X^T X) over n_mc draws; draw i receives
/// derive_seed(seed, i).
inline double min_gram_eigen_quantile(const std::function<Matrix(std::uint64_t)>& draw,
                                      double level, std::size_t n_mc, std::uint64_t seed) {
  std::vector<double> mins;
  mins.reserve(n_mc);
  for (std::size_t i = 0; i < n_mc; ++i) mins.push_back(min_gram_eigenvalue(draw(derive_seed(seed, i))));
  return empirical_quantile(std::move(mins), level);
}

/// lambda such that lambda log n is the 1/n-quantile of lambda_min(X^T X) over
/// covariate matrices drawn from `gen` with the adaptive rule switched off.
inline double calibrate_wdecorr_lambda(const GeneratorConfig& gen, std::size_t n_mc,
                                       std::uint64_t seed) {
  if (n_mc < 100) throw InvalidArgument("calibrate_wdecorr_lambda: n_mc must be >= 100");
  const double n = static_cast<double>(gen.spec.n);
  GeneratorConfig iid = gen;
  iid.p_exploit = 0.0;
  auto draw = [&iid](std::uint64_t s) {
    GeneratorConfig c = iid;
    c.seed = s;
    c.noise_seed.reset();
    return generate(c).X;
  };
  return min_gram_eigen_quantile(draw, 1.0 / n, n_mc, seed) / std::log(n);
}

}  // namespace adareg
