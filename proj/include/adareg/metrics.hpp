#pragma once

// Scaled-MSE, coverage aggregation and normality diagnostics.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "adareg/model_core.hpp"
#include "adareg/records.hpp"
#include "adareg/stats.hpp"

namespace adareg {

class MissingAlpha : public std::runtime_error {
 public:
  explicit MissingAlpha(double alpha)
      : std::runtime_error("record has no interval at alpha = " + std::to_string(alpha)) {}
};

// ---------------------------------------------------------------------------
// Scaled-MSE

/// X_I^T (I - P_{X_{I^c}}) X_I, the inverse of the I-block of (X^T X)^{-1},
/// formed from the residuals of X_I against X_{I^c}.
inline Matrix scaled_mse_weight(const Matrix& X, const IndexSet& idx) {
  if (idx.empty()) throw InvalidArgument("scaled_mse: index set must be non-empty");
  const auto d = static_cast<std::size_t>(X.cols());
  // X_I collinear with itself would pass the complement-only check below.
  OrthogonalFactorization{X};
  const Matrix XI = select_columns(X, idx);
  const Matrix residual = residualize_columns(XI, select_columns(X, complement(idx, d)));
  return residual.transpose() * residual;
}

inline double scaled_mse(const Vector& theta_hat_I, const Vector& theta_star_I, const Matrix& X,
                         const IndexSet& idx) {
  if (static_cast<std::size_t>(theta_hat_I.size()) != idx.size() ||
      theta_star_I.size() != theta_hat_I.size())
    throw InvalidArgument("scaled_mse: estimate length must match the index set");
  const Vector err = theta_hat_I - theta_star_I;
  const Matrix weight = scaled_mse_weight(X, idx);
  return std::max(0.0, err.dot(weight * err));
}

struct ScaledMseRecord {
  IndexSet idx_set;
  double value = 0.0;
  Method method = Method::kOls;
};

// ---------------------------------------------------------------------------
// Coverage

struct CoverageSummary {
  double alpha = 0.1;
  double nominal = 0.9;
  double empirical = 0.0;
  /// sqrt(p (1 - p) / n_reps)
  double empirical_se = 0.0;
  double mean_width = 0.0;
  double width_sd = 0.0;
  std::size_t n_reps = 0;
};

inline CoverageSummary coverage_and_width(std::span<const MethodOutcome> outcomes, double alpha) {
  CoverageSummary s;
  s.alpha = alpha;
  s.nominal = 1.0 - alpha;
  s.n_reps = outcomes.size();
  if (outcomes.empty()) return s;

  std::vector<double> widths;
  widths.reserve(outcomes.size());
  std::size_t hits = 0;
  for (const auto& o : outcomes) {
    const IntervalOutcome* ci = o.interval(alpha);
    if (!ci) throw MissingAlpha(alpha);
    if (ci->covers(o.truth)) ++hits;
    // An infinite interval has no finite width; it still counts as a hit.
    widths.push_back(ci->width());
  }
  const double n = static_cast<double>(outcomes.size());
  s.empirical = static_cast<double>(hits) / n;
  s.empirical_se = std::sqrt(s.empirical * (1.0 - s.empirical) / n);
  s.mean_width = mean(widths);
  s.width_sd = sample_sd(widths);
  return s;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov against N(0, 1)

/// sup_x |F_n(x) - Phi(x)|
inline double ks_distance_normal(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = normal_cdf(values[i]);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  return d;
}

/// P(K > lambda) for the limiting Kolmogorov distribution.
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.0) {
    // Theta-function form converges fast for small lambda.
    double cdf = 0.0;
    for (int j = 1; j <= 50; ++j) {
      const double t = (2.0 * j - 1.0) * pi / lambda;
      cdf += std::exp(-t * t / 8.0);
    }
    return 1.0 - std::sqrt(2.0 * pi) / lambda * cdf;
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

inline double ks_pvalue(double distance, std::size_t n) {
  return kolmogorov_survival(std::sqrt(static_cast<double>(n)) * distance);
}

/// Asymptotic critical distance c_alpha / sqrt(n), with P(K > c_alpha) = alpha.
inline double ks_critical_value(std::size_t n, double alpha) {
  double lo = 0.1;
  double hi = 5.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_survival(mid) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) / std::sqrt(static_cast<double>(n));
}

struct StandardizedErrors {
  std::vector<double> values;
  double ks_distance = 0.0;
  double ks_pvalue = 1.0;

  bool passes_ks(double level) const {
    return !values.empty() && ks_distance < ks_critical_value(values.size(), level);
  }
};

/// (estimate - truth) / std_error per outcome; outcomes without a standard
/// error are skipped.
inline StandardizedErrors standardized_errors(std::span<const MethodOutcome> outcomes) {
  StandardizedErrors out;
  for (const auto& o : outcomes) {
    if (!o.std_error) continue;
    const double se = *o.std_error;
    const double diff = o.estimate - o.truth;
    out.values.push_back(diff == 0.0 ? 0.0 : diff / se);
  }
  out.ks_distance = ks_distance_normal(out.values);
  out.ks_pvalue = ks_pvalue(out.ks_distance, out.values.size());
  return out;
}

// ---------------------------------------------------------------------------
// Histogram (binned counts for plotting)

struct Histogram {
  double lo = -5.0;
  double hi = 5.0;
  std::vector<std::size_t> counts;
  std::size_t below = 0;
  std::size_t above = 0;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
};

inline Histogram histogram(std::span<const double> values, std::size_t bins = 50, double lo = -5.0,
                           double hi = 5.0) {
  if (bins == 0 || !(hi > lo)) throw InvalidArgument("histogram: need bins > 0 and hi > lo");
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0), 0, 0};
  for (double v : values) {
    if (v < lo) {
      ++h.below;
    } else if (v >= hi) {
      // The last bin is closed on the right.
      if (v == hi) ++h.counts.back(); else ++h.above;
    } else {
      auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
      ++h.counts[std::min(b, bins - 1)];
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Simple linear trend (used for scaled-MSE versus k)

struct LinearTrend {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
  double t_stat = 0.0;
};

inline LinearTrend fit_linear_trend(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw InvalidArgument("fit_linear_trend: need at least three paired points");
  const double mx = mean(x);
  const double my = mean(y);
  CompensatedSum sxx, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
  }
  if (!(sxx.value() > 0.0)) throw InvalidArgument("fit_linear_trend: x has no spread");
  LinearTrend t;
  t.slope = sxy.value() / sxx.value();
  t.intercept = my - t.slope * mx;
  CompensatedSum rss;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - t.intercept - t.slope * x[i];
    rss.add(r * r);
  }
  const double s2 = rss.value() / static_cast<double>(x.size() - 2);
  t.slope_se = std::sqrt(s2 / sxx.value());
  t.t_stat = t.slope_se > 0.0 ? t.slope / t.slope_se : std::copysign(INFINITY, t.slope);
  return t;
}

}  // namespace adareg
