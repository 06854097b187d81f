#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "adareg/generators.hpp"
#include "support.hpp"

using namespace adareg;

namespace {

GeneratorConfig make(GeneratorKind kind, std::size_t n, std::size_t d, std::size_t k, double sigma,
                     std::uint64_t seed, double p = 0.8,
                     NonadaptiveLaw law = NonadaptiveLaw::kStandardGaussian) {
  GeneratorConfig c;
  c.kind = kind;
  c.spec.n = n;
  c.spec.d = d;
  c.spec.k = k;
  c.spec.sigma = sigma;
  c.spec.theta_star = Vector::LinSpaced(static_cast<Eigen::Index>(d), 0.5, -0.5);
  c.p_exploit = p;
  c.law = law;
  c.seed = seed;
  return c;
}

bool same(const AdaptiveDataset& a, const AdaptiveDataset& b) {
  return a.X == b.X && a.y == b.y && a.adaptive_idx == b.adaptive_idx;
}

}  // namespace

TEST(GenIid, ZeroNoiseIsExactlyLinear) {
  const auto c = make(GeneratorKind::kIid, 50, 4, 0, 0.0, 9);
  const auto ds = gen_iid(c);
  EXPECT_TRUE(ds.y == ds.X * c.spec.theta_star);
  EXPECT_TRUE(ds.adaptive_idx.empty());
  EXPECT_EQ(ds.meta.generator, "iid");
  EXPECT_EQ(ds.meta.seed, 9u);
}

TEST(GenIid, SeedDeterminism) {
  const auto c = make(GeneratorKind::kIid, 80, 6, 0, 1.0, 77);
  EXPECT_TRUE(same(gen_iid(c), gen_iid(c)));
  auto c2 = c;
  c2.seed = 78;
  EXPECT_FALSE(same(gen_iid(c), gen_iid(c2)));
}

TEST(GenIid, LawOfLargeNumbersForGaussianColumns) {
  const auto ds = gen_iid(make(GeneratorKind::kIid, 10000, 3, 0, 1.0, 5));
  const double n = 10000.0;
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double m = ds.X.col(j).mean();
    const double var = (ds.X.col(j).array() - m).square().sum() / (n - 1.0);
    EXPECT_LT(std::abs(m), 4.0 / std::sqrt(n));
    EXPECT_NEAR(var, 1.0, 0.1);
  }
}

TEST(GenIid, UniformSphereRowsHaveUnitNorm) {
  const auto ds = gen_iid(make(GeneratorKind::kIid, 200, 7, 0, 1.0, 3, 0.8, NonadaptiveLaw::kUniformSphere));
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) EXPECT_NEAR(ds.X.row(i).norm(), 1.0, 1e-12);
}

TEST(GenIid, ShiftedSphereRowsShareOneCenter) {
  const auto ds = gen_iid(make(GeneratorKind::kIid, 20000, 4, 0, 1.0, 8, 0.8, NonadaptiveLaw::kShiftedSphere));
  const Eigen::RowVectorXd center = ds.X.colwise().mean();
  // A uniform sphere has mean zero, so the column means estimate the shift.
  for (Eigen::Index i = 0; i < 50; ++i) EXPECT_NEAR((ds.X.row(i) - center).norm(), 1.0, 0.05);
  EXPECT_GT(center.norm(), 0.1);
}

TEST(GenTreatment, PureExplorationGivesOnes) {
  const auto ds = gen_treatment_assignment(make(GeneratorKind::kTreatmentAssignment, 300, 5, 1, 0.3, 12, 0.0));
  EXPECT_TRUE(ds.X.col(0).isOnes());
  EXPECT_EQ(ds.adaptive_idx, (IndexSet{0}));
}

TEST(GenTreatment, StructureAndWarmUp) {
  const std::size_t d = 6;
  const auto ds = gen_treatment_assignment(make(GeneratorKind::kTreatmentAssignment, 400, d, 1, 0.3, 13));
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
    const double x = ds.X(i, 0);
    EXPECT_TRUE(x == 0.0 || x == 1.0);
  }
  for (std::size_t i = 0; i <= d; ++i) EXPECT_EQ(ds.X(static_cast<Eigen::Index>(i), 0), 1.0);
}

TEST(GenTreatment, GreedyRuleReplaysAgainstIndependentOls) {
  // With p = 1 every post-warm-up row follows the sign of the full-history OLS.
  auto c = make(GeneratorKind::kTreatmentAssignment, 250, 4, 1, 1.0, 21, 1.0);
  c.spec.theta_star(0) = 0.0;
  const auto ds = gen_treatment_assignment(c);
  int zeros = 0;
  for (Eigen::Index i = 5; i < ds.X.rows(); ++i) {
    const auto fit = solve_least_squares(ds.X.topRows(i), ds.y.head(i));
    EXPECT_EQ(ds.X(i, 0), fit.coefficients(0) > 0.0 ? 1.0 : 0.0) << "row " << i;
    zeros += ds.X(i, 0) == 0.0;
  }
  EXPECT_GT(zeros, 0);
}

TEST(GenTreatment, ExplorationBranchOnlyAssignsOne) {
  auto c = make(GeneratorKind::kTreatmentAssignment, 300, 3, 1, 1.0, 22, 0.5);
  c.spec.theta_star(0) = 0.0;
  const auto ds = gen_treatment_assignment(c);
  for (Eigen::Index i = 4; i < ds.X.rows(); ++i) {
    if (ds.X(i, 0) != 0.0) continue;
    const auto fit = solve_least_squares(ds.X.topRows(i), ds.y.head(i));
    EXPECT_LE(fit.coefficients(0), 0.0) << "row " << i;
  }
}

TEST(GenTreatment, Determinism) {
  const auto c = make(GeneratorKind::kTreatmentAssignment, 500, 10, 1, 0.3, 99);
  EXPECT_TRUE(same(gen_treatment_assignment(c), gen_treatment_assignment(c)));
}

TEST(GenTreatment, NoiseSeedLeavesCovariatesUnderPureExploration) {
  auto c = make(GeneratorKind::kTreatmentAssignment, 200, 5, 1, 1.0, 31, 0.0);
  const auto a = gen_treatment_assignment(c);
  c.noise_seed = 12345;
  const auto b = gen_treatment_assignment(c);
  EXPECT_TRUE(a.X == b.X);
  EXPECT_FALSE(a.y == b.y);
}

TEST(GenTreatment, NoiseSeedLeavesNonadaptiveColumnsUnderGreedy) {
  auto c = make(GeneratorKind::kTreatmentAssignment, 300, 5, 1, 1.0, 32, 0.8);
  const auto a = gen_treatment_assignment(c);
  c.noise_seed = 777;
  const auto b = gen_treatment_assignment(c);
  EXPECT_TRUE(a.X.rightCols(4) == b.X.rightCols(4));
}

TEST(GenTreatment, RejectsInvalidShapes) {
  EXPECT_THROW(gen_treatment_assignment(make(GeneratorKind::kTreatmentAssignment, 100, 5, 2, 1.0, 1)),
               InvalidArgument);
  EXPECT_THROW(gen_treatment_assignment(make(GeneratorKind::kTreatmentAssignment, 5, 5, 1, 1.0, 1)),
               InvalidArgument);
  EXPECT_THROW(gen_treatment_assignment(make(GeneratorKind::kIid, 100, 5, 1, 1.0, 1)), InvalidArgument);
  auto bad = make(GeneratorKind::kTreatmentAssignment, 100, 5, 1, 1.0, 1);
  bad.p_exploit = 1.5;
  EXPECT_THROW(generate(bad), InvalidArgument);
}

TEST(GenKAdaptive, SingleCoordinateMatchesTreatmentAssignment) {
  auto c = make(GeneratorKind::kKAdaptiveGreedy, 300, 6, 1, 0.5, 41);
  const auto a = gen_k_adaptive_greedy(c);
  c.kind = GeneratorKind::kTreatmentAssignment;
  const auto b = gen_treatment_assignment(c);
  EXPECT_TRUE(same(a, b));
}

TEST(GenKAdaptive, AdaptiveBlockShapeAndValues) {
  for (std::size_t k : {1u, 2u, 5u, 9u}) {
    const auto ds = gen_k_adaptive_greedy(
        make(GeneratorKind::kKAdaptiveGreedy, 120, 12, k, 1.0, 50 + k, 0.8, NonadaptiveLaw::kUniformSphere));
    EXPECT_EQ(ds.adaptive_idx.size(), k);
    EXPECT_EQ(ds.adaptive_idx, iota_set(0, k));
    std::set<double> values;
    for (Eigen::Index i = 0; i < ds.X.rows(); ++i)
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(k); ++j) values.insert(ds.X(i, j));
    for (double v : values) {
      if (k == 1) EXPECT_TRUE(v == 0.0 || v == 1.0);
      else EXPECT_TRUE(v == -1.0 || v == 0.0 || v == 1.0);
    }
    const auto nad = static_cast<Eigen::Index>(12 - k);
    for (Eigen::Index i = 0; i < ds.X.rows(); ++i) EXPECT_NEAR(ds.X.row(i).tail(nad).norm(), 1.0, 1e-12);
  }
}

TEST(GenKAdaptive, ResponseFollowsModel) {
  auto c = make(GeneratorKind::kKAdaptiveGreedy, 90, 8, 3, 0.0, 61, 1.0, NonadaptiveLaw::kShiftedSphere);
  const auto ds = gen_k_adaptive_greedy(c);
  EXPECT_LT((ds.y - ds.X * c.spec.theta_star).norm(), 1e-12);
  ds.validate();
}

TEST(GenKAdaptive, DeterminismAndNoiseIsolation) {
  auto c = make(GeneratorKind::kKAdaptiveGreedy, 150, 10, 4, 1.0, 71, 0.0);
  EXPECT_TRUE(same(gen_k_adaptive_greedy(c), gen_k_adaptive_greedy(c)));
  const auto a = gen_k_adaptive_greedy(c);
  c.noise_seed = 5;
  const auto b = gen_k_adaptive_greedy(c);
  EXPECT_TRUE(a.X == b.X);
}

TEST(GenKAdaptive, RejectsInvalidK) {
  EXPECT_THROW(generate(make(GeneratorKind::kKAdaptiveGreedy, 100, 5, 0, 1.0, 1)), InvalidArgument);
  EXPECT_THROW(generate(make(GeneratorKind::kKAdaptiveGreedy, 100, 5, 5, 1.0, 1)), InvalidArgument);
  EXPECT_THROW(generate(make(GeneratorKind::kKAdaptiveGreedy, 12, 11, 6, 1.0, 1)), InvalidArgument);
}

TEST(Tags, RoundTrip) {
  for (auto k : {GeneratorKind::kIid, GeneratorKind::kTreatmentAssignment, GeneratorKind::kKAdaptiveGreedy})
    EXPECT_EQ(parse_generator_kind(to_string(k)), k);
  for (auto l : {NonadaptiveLaw::kStandardGaussian, NonadaptiveLaw::kUniformSphere, NonadaptiveLaw::kShiftedSphere})
    EXPECT_EQ(parse_nonadaptive_law(to_string(l)), l);
  EXPECT_FALSE(parse_generator_kind("bandit").has_value());
}

TEST(Seeds, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 30; ++k)
    for (std::uint64_t r = 0; r < 300; ++r) seen.insert(derive_seed(derive_seed(42, k), r));
  EXPECT_EQ(seen.size(), 30u * 300u);
  EXPECT_NE(stream_seed(1, Stream::kNoise), stream_seed(1, Stream::kCovariates));
}
