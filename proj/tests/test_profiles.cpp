#include "gkdv/diagnostics.hpp"
#include "gkdv/profiles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace gkdv;

namespace {

GridSpec centred_grid(std::size_t n, double length) { return {n, length, -0.5 * length}; }

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(GroundState, PeakValues) {
  auto g = centred_grid(1024, 80.0);
  const std::size_t mid = g.num_points / 2;
  EXPECT_NEAR(ground_state(5.0, g)[mid].real(), 1.3160740129524924, 1e-15);
  EXPECT_NEAR(ground_state(3.0, g)[mid].real(), std::sqrt(2.0), 1e-15);
}

TEST(GroundState, CubicIsScaledSech) {
  auto g = centred_grid(1024, 80.0);
  auto q = ground_state(3.0, g);
  auto exact = Field::sample(g, [](double x) { return std::sqrt(2.0) / std::cosh(x); });
  EXPECT_LE(max_abs_diff(q, exact), 1e-14);
}

TEST(GroundState, SolvesProfileEquation) {
  for (double p : {2.0, 3.0, 5.0, std::sqrt(3.0)}) {
    auto g = centred_grid(2048, 80.0);
    auto q = ground_state(p, g);
    auto res = derivative(q, 2) + map_values(q, [p](cplx v) { return cplx(std::pow(v.real(), p)); }) - q;
    EXPECT_LE(res.max_abs(), 1e-8 * q.max_abs()) << "p = " << p;
  }
}

TEST(GroundState, EvenPositiveAndDecreasing) {
  auto g = centred_grid(1024, 80.0);
  for (double p : {1.5, 3.0, 5.0, 7.0}) {
    auto q = ground_state(p, g);
    const std::size_t n = g.num_points, mid = n / 2;
    for (std::size_t i = 1; i < mid; ++i) {
      EXPECT_EQ(q[mid + i].real(), q[mid - i].real());
      EXPECT_LE(q[mid + i].real(), q[mid + i - 1].real());
    }
    for (const auto& v : q.values()) EXPECT_GT(v.real(), 0.0);
  }
}

TEST(GroundState, ShortDomainIsResolutionError) {
  EXPECT_THROW(ground_state(5.0, centred_grid(256, 20.0)), ResolutionError);
  EXPECT_THROW(ground_state(1.0, centred_grid(256, 80.0)), DomainError);
}

TEST(GroundStateMass, ClosedForms) {
  EXPECT_NEAR(ground_state_mass(3.0), 4.0, 1e-10);
  // Q_5^2 = sqrt(3) sech(2x)
  EXPECT_NEAR(ground_state_mass(5.0), std::sqrt(3.0) * pi / 2.0, 1e-10);
  EXPECT_THROW(ground_state_mass(0.5), DomainError);
}

TEST(GroundStateMass, AgreesWithGridQuadrature) {
  auto g = centred_grid(4096, 80.0);
  for (double p : {2.0, 4.0, 5.0}) EXPECT_NEAR(mass(ground_state(p, g)), ground_state_mass(p), 1e-10);
}

TEST(GroundStateMass, QuinticMassIsScaleInvariant) {
  // lambda^{-1/2} Q_5(x / lambda) keeps the mass of Q_5.
  const double M = ground_state_mass(5.0);
  for (double lambda : {0.5, 2.0}) {
    auto g = centred_grid(4096, 160.0);
    auto f = Field::sample(g, [lambda](double x) { return std::pow(lambda, -0.5) * ground_state_value(5.0, x / lambda); });
    EXPECT_NEAR(mass(f), M, 1e-10);
  }
}

TEST(GroundStateMass, DecreasesWithP) {
  double prev = std::numeric_limits<double>::infinity();
  for (double p : {1.5, 2.0, 3.0, 4.0, 5.0, 7.0}) {
    const double m = ground_state_mass(p);
    EXPECT_LT(m, prev) << "p = " << p;
    prev = m;
  }
}

TEST(Gaussian, ZeroAmplitudeMassAndTranslation) {
  auto g = centred_grid(512, 40.0);
  EXPECT_EQ(gaussian(0.0, 1.0, 0.0, g).max_abs(), 0.0);
  for (double w : {0.7, 1.0, 2.5}) {
    const double A = 1.3;
    EXPECT_NEAR(mass(gaussian(A, w, 0.0, g)), A * A * w * std::sqrt(pi / 2.0), 1e-10);
  }
  const double shift = 2.345;
  auto moved = gaussian(1.0, 1.2, shift, g);
  auto translated = translate(gaussian(1.0, 1.2, 0.0, g), shift);
  EXPECT_LE(max_abs_diff(moved, translated), 1e-10);
  EXPECT_THROW(gaussian(1.0, 0.0, 0.0, g), DomainError);
}

TEST(ProfileSpec, Validation) {
  ProfileSpec s;
  s.kind = ProfileKind::gaussian;
  s.width = -1.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = ProfileSpec{};
  s.kind = ProfileKind::ground_state;
  s.p = 1.0;
  EXPECT_THROW(s.validate(), ValidationError);
  EXPECT_EQ(profile_kind_from_string(to_string(ProfileKind::soliton)), ProfileKind::soliton);
}

namespace {

GridSpec ansatz_grid(double N, const GridSpec& gn) {
  // Domain sqrt(3N) L_nls rounded up so that the carrier is periodic.
  const double need = ansatz_dilation(N) * gn.domain_length;
  const double cycles = std::ceil(N * need / (2.0 * pi));
  const double L = 2.0 * pi * cycles / N;
  std::size_t n = 8;
  while ((2.0 / 3.0) * pi * static_cast<double>(n) / L < 5.0 * N + 10.0) n *= 2;
  return {n, L, -0.5 * L};
}

Field nls_gaussian(const GridSpec& g, double A, double w) {
  return gaussian(A, w, 0.0, g, false);
}

}  // namespace

TEST(EmbeddingAnsatz, ZeroEnvelopeGivesZero) {
  auto gn = centred_grid(256, 32.0);
  auto go = ansatz_grid(8.0, gn);
  EXPECT_EQ(embedding_ansatz(Field::zeros(gn, false), 8.0, 0.0, go).max_abs(), 0.0);
}

TEST(EmbeddingAnsatz, MassRatioTendsToSqrtSixFifths) {
  auto gn = centred_grid(256, 32.0);
  auto u = nls_gaussian(gn, 0.5, 1.5);
  for (double N : {8.0, 16.0}) {
    auto uN = embedding_ansatz(u, N, 0.0, ansatz_grid(N, gn));
    EXPECT_TRUE(uN.is_real());
    EXPECT_NEAR(mass(uN) / mass(u), std::sqrt(6.0 / 5.0), 1e-6) << "N = " << N;
  }
}

TEST(EmbeddingAnsatz, AmplitudeAndEnvelopePlacement) {
  auto gn = centred_grid(256, 32.0);
  auto u = nls_gaussian(gn, 0.5, 1.5);
  const double N = 8.0;
  auto go = ansatz_grid(N, gn);
  auto uN = embedding_ansatz(u, N, 0.0, go);
  const double expect = std::pow(8.0 / 5.0, 0.25) * std::pow(N, -0.25) * 0.5;
  EXPECT_NEAR(uN.max_abs(), expect, 1e-3 * expect);
  // Direct evaluation at t = 0: the envelope is the Gaussian in y = x / sqrt(3N).
  const double s = std::sqrt(3.0 * N);
  auto direct = Field::sample(go, [&](double x) {
    const double y = x / s;
    return std::pow(8.0 / 5.0, 0.25) * std::pow(N, -0.25) * 0.5 * std::exp(-y * y / 2.25) * std::cos(N * x);
  });
  EXPECT_LE(max_abs_diff(uN, direct), 1e-12);
}

TEST(EmbeddingAnsatz, MovingFrameMatchesDirectFormula) {
  auto gn = centred_grid(256, 32.0);
  auto u = Field::sample(gn, [](double y) { return std::exp(-y * y / 2.0) * std::exp(cplx(0.0, 0.4 * y)); });
  const double N = 4.0, t = 0.03;
  auto go = ansatz_grid(N, gn);
  auto uN = embedding_ansatz(u, N, t, go);
  const double s = std::sqrt(3.0 * N), A = std::pow(8.0 / 5.0, 0.25) * std::pow(N, -0.25);
  const Chart chart{-3.0 * N * N * t, go.domain_length};
  auto direct = Field::sample(go, [&](double x) {
    const double xc = chart.wrap(x);
    const double y = (xc + 3.0 * N * N * t) / s;
    const cplx env = std::exp(-y * y / 2.0) * std::exp(cplx(0.0, 0.4 * y));
    return A * (std::exp(cplx(0.0, N * x + N * N * N * t)) * env).real();
  });
  EXPECT_LE(max_abs_diff(uN, direct), 1e-12);
}

TEST(EmbeddingAnsatz, SpectrumConcentratedNearCarrier) {
  auto gn = centred_grid(256, 32.0);
  auto u = nls_gaussian(gn, 0.5, 1.5);
  const double N = 16.0;
  auto go = ansatz_grid(N, gn);
  auto uN = embedding_ansatz(u, N, 0.0, go);
  const auto spec = uN.spectrum();
  const double B = envelope_bandwidth(u, N);
  double in = 0.0, total = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double w = std::norm(spec[i]);
    total += w;
    if (std::abs(std::abs(go.wavenumber(i)) - N) <= B) in += w;
  }
  EXPECT_GE(in / total, 0.9999);
}

TEST(EmbeddingAnsatz, CarrierAboveDealiasLimitIsResolutionError) {
  auto gn = centred_grid(256, 32.0);
  auto u = nls_gaussian(gn, 0.5, 1.5);
  const double N = 8.0;
  auto go = ansatz_grid(N, gn);
  GridSpec coarse = go;
  coarse.num_points /= 4;
  EXPECT_THROW(embedding_ansatz(u, N, 0.0, coarse), ResolutionError);
  GridSpec shortd = go;
  shortd.domain_length *= 0.5;
  shortd.origin *= 0.5;
  EXPECT_THROW(embedding_ansatz(u, N, 0.0, shortd), ResolutionError);
}
