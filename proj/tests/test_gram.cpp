#include "gkdv/evolution.hpp"
#include "gkdv/gram.hpp"
#include "gkdv/profiles.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

using namespace gkdv;

namespace {

GridSpec centred_grid(std::size_t n, double length) { return {n, length, -0.5 * length}; }

StepperConfig stepper(double dt) {
  StepperConfig s;
  s.dt = dt;
  return s;
}

}  // namespace

TEST(ExtractGram, GaussianCubicMatchesClosedForms) {
  // u = exp(-x^2), p = 3, Gaussian moment integrals.
  const double rp = std::sqrt(pi);
  const double M = std::sqrt(pi / 2.0);
  const double Ixx = 3.0 * std::sqrt(pi / 2.0);
  const double Ix = std::sqrt(pi / 2.0);
  const double I2p = std::sqrt(pi / 6.0);
  const double Ip1 = rp / 2.0;
  const double Im = 3.0 * rp / 4.0;
  const double a = std::sqrt(Ixx / M), b = std::sqrt(I2p / M);
  auto f = Field::sample(centred_grid(512, 40.0), [](double x) { return std::exp(-x * x); });
  const auto g = extract_gram(f, 3.0);
  EXPECT_NEAR(g.mass, M, 1e-12);
  EXPECT_NEAR(g.a, a, 1e-8);
  EXPECT_NEAR(g.b, b, 1e-8);
  EXPECT_NEAR(g.q, Ix / (a * M), 1e-8);
  EXPECT_NEAR(g.r, Ip1 / (b * M), 1e-8);
  EXPECT_NEAR(g.s, Im / (a * b * M), 1e-8);
  EXPECT_LE(g.gram_consistency, 1e-10);
}

TEST(ExtractGram, UnitIntervalAndByPartsConsistency) {
  auto g = centred_grid(1024, 80.0);
  for (double p : {std::sqrt(3.0), 3.0, 5.0}) {
    for (const Field& f : {ground_state(p, g), gaussian(1.3, 0.8, 2.0, g), gaussian(0.2, 4.0, -5.0, g)}) {
      const auto st = extract_gram(f, p);
      for (double v : {st.q, st.r, st.s}) {
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0 + 1e-12);
      }
      EXPECT_LE(st.gram_consistency, 1e-10);
      EXPECT_TRUE(st.satisfies_rst());
    }
  }
}

TEST(ExtractGram, ZeroFieldIsDegenerate) {
  EXPECT_THROW(extract_gram(Field::zeros(centred_grid(64, 10.0), true), 3.0), DegenerateInputError);
  EXPECT_THROW(extract_gram(Field::zeros(centred_grid(64, 10.0), false), 3.0), ModelError);
}

TEST(PsdCheck, BoundaryMatrices) {
  auto id = gram_psd_check(0.0, 0.0, 0.0);
  for (double e : id.eigenvalues) EXPECT_NEAR(e, 1.0, 1e-15);
  EXPECT_TRUE(id.psd);
  auto ones = gram_psd_check(1.0, 1.0, 1.0);
  EXPECT_NEAR(ones.eigenvalues[0], 0.0, 1e-14);
  EXPECT_NEAR(ones.eigenvalues[1], 0.0, 1e-14);
  EXPECT_NEAR(ones.eigenvalues[2], 3.0, 1e-14);
  EXPECT_TRUE(ones.psd);
  EXPECT_NEAR(ones.det, 0.0, 1e-15);
  auto bad = gram_psd_check(0.9, 0.9, 0.0);
  EXPECT_FALSE(bad.psd);
  EXPECT_LT(bad.det, 0.0);
}

TEST(PsdCheck, EigenvaluesAgreeWithDeterminantAndTrace) {
  for (double q : {0.1, 0.5, 0.93})
    for (double r : {0.2, 0.7})
      for (double s : {0.05, 0.6, 0.99}) {
        const auto c = gram_psd_check(q, r, s);
        const auto& e = c.eigenvalues;
        EXPECT_NEAR(e[0] + e[1] + e[2], 3.0, 1e-13);
        EXPECT_NEAR(e[0] * e[1] * e[2], c.det, 1e-13);
        EXPECT_EQ(c.psd, c.det >= -1e-10 && e[0] >= -1e-10);
      }
}

TEST(AlgInequality, DegenerateAndBoundaryCases) {
  for (double p : {2.0, 5.0}) {
    const auto z = alg_inequality(1.2, 0.7, 0.0, 0.0, 0.4, p);
    EXPECT_NEAR(z.expand_value, 1.5 * 1.44 + 2.0 * 1.2 * 0.7 * 0.4 + 0.5 * 0.49, 1e-14);
    EXPECT_GT(z.expand_value, 0.0);
    const auto one = alg_inequality(1.2, 0.7, 1.0, 1.0, 1.0, p);
    EXPECT_NEAR(one.expand_value, 1.2 * 0.7 * (2.0 - (p + 3.0) / (p + 1.0)), 1e-14);
    EXPECT_GE(one.expand_value, 0.0);
  }
}

TEST(AlgInequality, ReducedFormEqualsDifferenceAndBoundsExpand) {
  for (double p : {1.5, 3.0, 5.0})
    for (double q : {0.2, 0.8})
      for (double r : {0.3, 0.9})
        for (double s : {0.1, 0.7}) {
          const auto v = alg_inequality(0.9, 1.7, q, r, s, p);
          EXPECT_NEAR(v.reduced, v.lhs - v.rhs, 1e-13);
          EXPECT_LE(v.expand_value, v.reduced + 1e-14);
        }
}

TEST(RegionScan, NoViolationsAtOrAboveThreshold) {
  for (double p : {std::sqrt(3.0), 2.0, 5.0}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = region_scan(p, 0.01);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_TRUE(rep.violations.empty()) << "p = " << p << " violations " << rep.violations.size();
    EXPECT_GE(rep.min_expand_value, -1e-12);
    EXPECT_EQ(rep.disagreements, 0u);
    EXPECT_GT(rep.points_tested, 300000u);
    EXPECT_LE(secs, 120.0);
  }
}

TEST(RegionScan, ViolationCountMonotoneInP) {
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double p : {1.05, 1.3, 1.6, std::sqrt(3.0), 3.0, 5.0}) {
    const auto rep = region_scan(p, 0.02);
    EXPECT_LE(rep.violations.size(), prev) << "p = " << p;
    EXPECT_EQ(rep.violations.empty(), rep.min_expand_value >= -1e-12);
    EXPECT_EQ(rep.disagreements, 0u);
    prev = rep.violations.size();
  }
}

TEST(RegionScan, LowPowerProbeFindsChainFailure) {
  // (q, r, s) = (0.6, 0.8, 0) is on the boundary det = 0; with p = 1.05 the
  // coefficient (p+3)/(p+1) exceeds sqrt(3) and the quadratic form goes negative.
  const double c = 4.05 / 2.05;
  EXPECT_GT(c * 0.48, std::sqrt(3.0 * 0.64 * 0.36));
  const auto rep = region_scan(1.05, 0.02);
  EXPECT_FALSE(rep.violations.empty());
  EXPECT_LT(rep.min_expand_value, -1e-12);
}

TEST(RegionScan, ResolutionBounds) {
  EXPECT_THROW(region_scan(2.0, 0.0), DomainError);
  EXPECT_THROW(region_scan(2.0, 0.2), DomainError);
}

TEST(MonotonicityGap, CubicDefocusingGaussianStaysPositive) {
  auto g = centred_grid(1024, 200.0);
  auto traj = evolve(gaussian(0.9, 3.0, 0.0, g), ModelSpec::gkdv(3, 1), stepper(1e-3), 2.0, 0.05);
  const auto series = monotonicity_gap_series(traj);
  EXPECT_TRUE(series.all_positive);
  EXPECT_GT(series.min_gap, 0.0);
  EXPECT_LE(series.max_relative_mismatch, 1e-8);
  for (const auto& f : traj.snapshots) {
    const auto st = extract_gram(f, 3.0);
    EXPECT_TRUE(gram_psd_check(st).psd);
    EXPECT_TRUE(st.satisfies_rst());
    EXPECT_TRUE(alg_inequality(st, 3.0).strict);
  }
}

TEST(MonotonicityGap, QuinticRunStrictAtEverySnapshot) {
  auto g = centred_grid(1024, 100.0);
  auto traj = evolve(gaussian(1.0, 2.0, 0.0, g), ModelSpec::gkdv(5, 1), stepper(5e-4), 0.5, 0.01);
  std::size_t checked = 0;
  for (const auto& f : traj.snapshots) {
    const auto st = extract_gram(f, 5.0);
    const auto psd = gram_psd_check(st);
    EXPECT_GE(psd.eigenvalues[0], -1e-10);
    EXPECT_TRUE(alg_inequality(st, 5.0).strict);
    ++checked;
  }
  EXPECT_GE(checked, 50u);
  EXPECT_TRUE(monotonicity_gap_series(traj).all_positive);
}

TEST(MonotonicityGap, Preconditions) {
  auto g = centred_grid(256, 40.0);
  auto zero = evolve(Field::zeros(g, true), ModelSpec::gkdv(3, 1), stepper(1e-3), 0.1, 0.05);
  EXPECT_THROW(monotonicity_gap_series(zero), DegenerateInputError);
  auto foc = evolve(gaussian(0.5, 2.0, 0.0, g), ModelSpec::gkdv(3, -1), stepper(1e-3), 0.1, 0.05);
  EXPECT_THROW(monotonicity_gap_series(foc), ModelError);
  auto low = evolve(gaussian(0.5, 2.0, 0.0, g), ModelSpec::gkdv(1.5, 1), stepper(1e-3), 0.1, 0.05);
  EXPECT_THROW(monotonicity_gap_series(low), DomainError);
}
