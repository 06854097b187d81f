#pragma once

// (k,d)-adaptive dataset generators. Every generator is a pure function of
// its GeneratorConfig: covariates, noise, assignment coins and the optional
// sphere shift each come from their own stream derived from `seed`, so the
// same config always reproduces the same bytes.

#include <charconv>
#include <optional>
#include <string>
#include <string_view>

#include "adareg/model_core.hpp"
#include "adareg/random.hpp"

namespace adareg {

enum class GeneratorKind { kIid, kTreatmentAssignment, kKAdaptiveGreedy };
enum class NonadaptiveLaw { kStandardGaussian, kUniformSphere, kShiftedSphere };

inline std::string_view to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kIid: return "iid";
    case GeneratorKind::kTreatmentAssignment: return "treatment_assignment";
    case GeneratorKind::kKAdaptiveGreedy: return "k_adaptive_greedy";
  }
  return "unknown";
}

inline std::string_view to_string(NonadaptiveLaw law) {
  switch (law) {
    case NonadaptiveLaw::kStandardGaussian: return "standard_gaussian";
    case NonadaptiveLaw::kUniformSphere: return "uniform_sphere";
    case NonadaptiveLaw::kShiftedSphere: return "shifted_sphere";
  }
  return "unknown";
}

inline std::optional<GeneratorKind> parse_generator_kind(std::string_view s) {
  for (auto k : {GeneratorKind::kIid, GeneratorKind::kTreatmentAssignment,
                 GeneratorKind::kKAdaptiveGreedy})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

inline std::optional<NonadaptiveLaw> parse_nonadaptive_law(std::string_view s) {
  for (auto l : {NonadaptiveLaw::kStandardGaussian, NonadaptiveLaw::kUniformSphere,
                 NonadaptiveLaw::kShiftedSphere})
    if (s == to_string(l)) return l;
  return std::nullopt;
}

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::kIid;
  ModelSpec spec;
  double p_exploit = 0.8;
  NonadaptiveLaw law = NonadaptiveLaw::kStandardGaussian;
  std::uint64_t seed = 0;
  /// Overrides the noise stream only; covariate and assignment streams stay
  /// tied to `seed`.
  std::optional<std::uint64_t> noise_seed;

  std::uint64_t covariate_seed() const { return stream_seed(seed, Stream::kCovariates); }
  std::uint64_t resolved_noise_seed() const {
    return noise_seed ? *noise_seed : stream_seed(seed, Stream::kNoise);
  }

  void validate() const {
    spec.validate();
    if (!(p_exploit >= 0.0 && p_exploit <= 1.0))
      throw InvalidArgument("GeneratorConfig: p_exploit must lie in [0, 1]");
    switch (kind) {
      case GeneratorKind::kIid:
        break;
      case GeneratorKind::kTreatmentAssignment:
        if (spec.k != 1) throw InvalidArgument("treatment_assignment requires k = 1");
        if (spec.d < 2) throw InvalidArgument("treatment_assignment requires d >= 2");
        if (spec.n <= spec.d) throw InvalidArgument("treatment_assignment requires n > d");
        break;
      case GeneratorKind::kKAdaptiveGreedy:
        if (spec.k < 1 || spec.k >= spec.d)
          throw InvalidArgument("k_adaptive_greedy requires 1 <= k < d");
        if (spec.n <= spec.d) throw InvalidArgument("k_adaptive_greedy requires n > d");
        if (spec.k >= 2 && spec.n / 3 < spec.k - 1)
          throw InvalidArgument("k_adaptive_greedy requires n >= 3 (k - 1) so every arm is probed");
        break;
    }
  }
};

namespace detail {

/// Draws rows of the non-adaptive block. The ShiftedSphere mean is drawn once
/// per dataset from its own stream.
class NonadaptiveRows {
 public:
  NonadaptiveRows(NonadaptiveLaw law, Eigen::Index dim, std::uint64_t seed)
      : law_(law), dim_(dim), sampler_(stream_seed(seed, Stream::kCovariates)) {
    if (law_ == NonadaptiveLaw::kShiftedSphere) {
      Sampler shift(stream_seed(seed, Stream::kShift));
      shift_ = shift.normal_vector(dim_).array() + 1.0;
    }
  }

  Matrix draw(Eigen::Index rows) {
    Matrix out(rows, dim_);
    if (dim_ == 0) return out;
    for (Eigen::Index i = 0; i < rows; ++i) {
      switch (law_) {
        case NonadaptiveLaw::kStandardGaussian:
          out.row(i) = sampler_.normal_vector(dim_).transpose();
          break;
        case NonadaptiveLaw::kUniformSphere:
          out.row(i) = sampler_.unit_sphere(dim_).transpose();
          break;
        case NonadaptiveLaw::kShiftedSphere:
          out.row(i) = (sampler_.unit_sphere(dim_) + shift_).transpose();
          break;
      }
    }
    return out;
  }

 private:
  NonadaptiveLaw law_;
  Eigen::Index dim_;
  Sampler sampler_;
  Vector shift_;
};

inline std::string exact(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline DatasetMeta make_meta(const GeneratorConfig& cfg) {
  DatasetMeta meta;
  meta.generator = std::string(to_string(cfg.kind));
  meta.seed = cfg.seed;
  meta.params["n"] = std::to_string(cfg.spec.n);
  meta.params["d"] = std::to_string(cfg.spec.d);
  meta.params["k"] = std::to_string(cfg.spec.k);
  meta.params["sigma"] = exact(cfg.spec.sigma);
  meta.params["p_exploit"] = exact(cfg.p_exploit);
  meta.params["nonadaptive_law"] = std::string(to_string(cfg.law));
  if (cfg.noise_seed) meta.params["noise_seed"] = std::to_string(*cfg.noise_seed);
  return meta;
}

/// Treatment-style assignment of coordinate 0: warm-up rows i < d + 1 get 1;
/// afterwards, with probability p the value is 1 iff the full-history OLS
/// estimate of coordinate 0 is strictly positive, otherwise it is 1.
/// `X` must already hold the non-adaptive columns 1..d-1.
inline void fill_sign_rule_column(const GeneratorConfig& cfg, Matrix& X, Vector& y,
                                  const Vector& noise) {
  const auto n = X.rows();
  const auto d = X.cols();
  const Vector& theta = cfg.spec.theta_star;
  Sampler coin(stream_seed(cfg.seed, Stream::kAssignment));

  Matrix gram = Matrix::Zero(d, d);
  Vector xty = Vector::Zero(d);
  Eigen::LLT<Matrix> chol;
  for (Eigen::Index i = 0; i < n; ++i) {
    double assign = 1.0;
    if (i > d) {
      const bool exploit = coin.bernoulli(cfg.p_exploit);
      if (exploit) {
        chol.compute(gram);
        if (chol.info() == Eigen::Success) {
          const Vector running = chol.solve(xty);
          assign = running(0) > 0.0 ? 1.0 : 0.0;
        }
      }
    }
    X(i, 0) = assign;
    y(i) = X.row(i).dot(theta) + noise(i);
    gram.noalias() += X.row(i).transpose() * X.row(i);
    xty += X.row(i).transpose() * y(i);
  }
}

inline Vector draw_noise(const GeneratorConfig& cfg) {
  Sampler s(cfg.resolved_noise_seed());
  Vector eps(static_cast<Eigen::Index>(cfg.spec.n));
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = cfg.spec.sigma * s.normal();
  return eps;
}

}  // namespace detail

inline AdaptiveDataset gen_iid(const GeneratorConfig& cfg) {
  cfg.validate();
  if (cfg.kind != GeneratorKind::kIid) throw InvalidArgument("gen_iid: kind must be iid");
  const auto n = static_cast<Eigen::Index>(cfg.spec.n);
  const auto d = static_cast<Eigen::Index>(cfg.spec.d);
  detail::NonadaptiveRows rows(cfg.law, d, cfg.seed);
  AdaptiveDataset ds;
  ds.X = rows.draw(n);
  ds.y = ds.X * cfg.spec.theta_star + detail::draw_noise(cfg);
  ds.meta = detail::make_meta(cfg);
  return ds;
}

inline AdaptiveDataset gen_treatment_assignment(const GeneratorConfig& cfg) {
  cfg.validate();
  if (cfg.kind != GeneratorKind::kTreatmentAssignment)
    throw InvalidArgument("gen_treatment_assignment: kind must be treatment_assignment");
  const auto n = static_cast<Eigen::Index>(cfg.spec.n);
  const auto d = static_cast<Eigen::Index>(cfg.spec.d);
  detail::NonadaptiveRows rows(cfg.law, d - 1, cfg.seed);
  AdaptiveDataset ds;
  ds.X = Matrix::Zero(n, d);
  ds.X.rightCols(d - 1) = rows.draw(n);
  ds.y = Vector::Zero(n);
  detail::fill_sign_rule_column(cfg, ds.X, ds.y, detail::draw_noise(cfg));
  ds.adaptive_idx = {0};
  ds.meta = detail::make_meta(cfg);
  return ds;
}

/// k = 1 reuses the treatment sign rule with the configured non-adaptive law.
///
/// k >= 2 runs a noise-coupled design on the adaptive block. Coordinate 0 is
/// the target; coordinates u = 1..k-1 are arms. Rows are split in thirds:
///   probe    x_u = 1 for arm u (round-robin); the arm's accumulated noise
///            m_u += y_i - theta_u - theta_nad^T x_nad is tracked with the
///            true parameter;
///   couple   x_0 = 1 and, for arm u (round-robin), x_u = sign(m_u) with
///            probability p (m_u == 0 counts as negative), else x_u = 1;
///   null     x_ad = 0.
/// Each coupled row inherits the sign of its arm's estimation error, so the
/// bias on coordinate 0 accumulates over the k - 1 arms.
inline AdaptiveDataset gen_k_adaptive_greedy(const GeneratorConfig& cfg) {
  cfg.validate();
  if (cfg.kind != GeneratorKind::kKAdaptiveGreedy)
    throw InvalidArgument("gen_k_adaptive_greedy: kind must be k_adaptive_greedy");
  const auto n = static_cast<Eigen::Index>(cfg.spec.n);
  const auto d = static_cast<Eigen::Index>(cfg.spec.d);
  const auto k = static_cast<Eigen::Index>(cfg.spec.k);
  const Vector& theta = cfg.spec.theta_star;

  detail::NonadaptiveRows rows(cfg.law, d - k, cfg.seed);
  AdaptiveDataset ds;
  ds.X = Matrix::Zero(n, d);
  ds.X.rightCols(d - k) = rows.draw(n);
  ds.y = Vector::Zero(n);
  const Vector noise = detail::draw_noise(cfg);
  ds.adaptive_idx = iota_set(0, static_cast<std::size_t>(k));
  ds.meta = detail::make_meta(cfg);

  if (k == 1) {
    detail::fill_sign_rule_column(cfg, ds.X, ds.y, noise);
    return ds;
  }

  const Eigen::Index arms = k - 1;
  const Eigen::Index third = n / 3;
  const Vector theta_nad = theta.tail(d - k);
  Vector tracked = Vector::Zero(k);
  Sampler coin(stream_seed(cfg.seed, Stream::kAssignment));

  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = ds.X.row(i);
    if (i < third) {
      const Eigen::Index arm = 1 + i % arms;
      row(arm) = 1.0;
      ds.y(i) = row.dot(theta) + noise(i);
      tracked(arm) += ds.y(i) - theta(arm) - theta_nad.dot(row.tail(d - k));
    } else if (i < 2 * third) {
      const Eigen::Index arm = 1 + (i - third) % arms;
      row(0) = 1.0;
      const bool exploit = coin.bernoulli(cfg.p_exploit);
      row(arm) = exploit ? (tracked(arm) > 0.0 ? 1.0 : -1.0) : 1.0;
      ds.y(i) = row.dot(theta) + noise(i);
    } else {
      ds.y(i) = row.dot(theta) + noise(i);
    }
  }
  return ds;
}

inline AdaptiveDataset generate(const GeneratorConfig& cfg) {
  switch (cfg.kind) {
    case GeneratorKind::kIid: return gen_iid(cfg);
    case GeneratorKind::kTreatmentAssignment: return gen_treatment_assignment(cfg);
    case GeneratorKind::kKAdaptiveGreedy: return gen_k_adaptive_greedy(cfg);
  }
  throw InvalidArgument("generate: unknown generator kind");
}

}  // namespace adareg
