#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "adareg/estimators.hpp"

namespace adareg {

struct IntervalOutcome {
  double alpha = 0.1;
  double lower = 0.0;
  double upper = 0.0;

  bool covers(double truth) const { return lower <= truth && truth <= upper; }
  double width() const { return upper - lower; }
};

/// One estimator's result for one coordinate in one replication.
struct MethodOutcome {
  Method method = Method::kOls;
  std::size_t coord = 0;
  double truth = 0.0;
  double estimate = 0.0;
  std::optional<double> std_error;
  std::vector<IntervalOutcome> intervals;
  std::optional<double> scaled_mse;
  double sigma_hat = 0.0;
  std::optional<double> runtime_ms;

  const IntervalOutcome* interval(double alpha) const {
    for (const auto& ci : intervals)
      if (std::abs(ci.alpha - alpha) <= 1e-12) return &ci;
    return nullptr;
  }

  /// (estimate - truth) / std_error, when a positive standard error exists.
  std::optional<double> pivot() const {
    if (!std_error || !(*std_error > 0.0)) return std::nullopt;
    return (estimate - truth) / *std_error;
  }
};

struct ReplicationRecord {
  std::size_t k = 0;
  std::uint64_t rep = 0;
  std::uint64_t seed = 0;
  std::vector<MethodOutcome> outcomes;
};

/// Copies the outcome for `coord` out of a report, against the true value.
inline MethodOutcome outcome_from_report(const EstimateReport& r, std::size_t coord, double truth) {
  std::size_t pos = r.target_idx.size();
  for (std::size_t i = 0; i < r.target_idx.size(); ++i)
    if (r.target_idx[i] == coord) pos = i;
  if (pos == r.target_idx.size()) throw InvalidArgument("report does not cover the coordinate");
  const auto p = static_cast<Eigen::Index>(pos);

  MethodOutcome o;
  o.method = r.method;
  o.coord = coord;
  o.truth = truth;
  o.estimate = r.estimate(p);
  if (r.std_error) o.std_error = (*r.std_error)(p);
  for (const auto& b : r.bands) o.intervals.push_back({b.alpha, b.lower(p), b.upper(p)});
  o.sigma_hat = r.sigma_hat;
  return o;
}

}  // namespace adareg
