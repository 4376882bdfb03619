#include "gkdv/diagnostics.hpp"
#include "gkdv/evolution.hpp"
#include "gkdv/profiles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gkdv;

namespace {

GridSpec centred_grid(std::size_t n, double length) { return {n, length, -0.5 * length}; }

StepperConfig stepper(double dt) { return {dt, Scheme::etdrk4, 2.0}; }

}  // namespace

TEST(Mass, ZeroCubicGroundStateAndSolitonConservation) {
  auto g = centred_grid(1024, 80.0);
  EXPECT_EQ(mass(Field::zeros(g, true)), 0.0);
  EXPECT_NEAR(mass(ground_state(3.0, g)), 4.0, 1e-10);
  auto traj = evolve(ground_state(5.0, g), ModelSpec::gkdv(5, -1), stepper(5e-4), 1.0, 0.1);
  const double m0 = mass(traj.snapshots.front());
  for (const auto& s : traj.snapshots) EXPECT_NEAR(mass(s) / m0, 1.0, 1e-9);
}

TEST(Energy, ZeroAndCriticalGroundState) {
  auto g = centred_grid(1024, 80.0);
  EXPECT_EQ(energy(Field::zeros(g, true), ModelSpec::gkdv(5, 1)), 0.0);
  EXPECT_NEAR(energy(ground_state(5.0, g), ModelSpec::gkdv(5, -1)), 0.0, 1e-8);
}

TEST(Energy, GaussianMatchesClosedFormMoments) {
  // u = A exp(-x^2/w^2): int u_x^2 = A^2 sqrt(pi/2) / w, int u^4 = A^4 w sqrt(pi) / 2.
  auto g = centred_grid(512, 40.0);
  const double A = 0.9, w = 1.3;
  auto u = gaussian(A, w, 0.0, g);
  const double kin = A * A * std::sqrt(pi / 2.0) / w;
  const double quart = std::pow(A, 4) * w * std::sqrt(pi) / 2.0;
  EXPECT_NEAR(energy(u, ModelSpec::gkdv(3, 1)), 0.5 * kin + 0.25 * quart, 1e-10);
  EXPECT_NEAR(energy(u, ModelSpec::gkdv(3, -1)), 0.5 * kin - 0.25 * quart, 1e-10);
}

TEST(Energy, SchrodingerUsesModulus) {
  auto g = centred_grid(512, 40.0);
  auto u = Field::sample(g, [](double x) { return std::exp(-x * x) * std::exp(cplx(0.0, 2.0 * x)); });
  auto ur = gaussian(1.0, 1.0, 0.0, g);
  // |u_x|^2 = (4x^2 + 4) e^{-2x^2} -> extra 4 int e^{-2x^2} = 4 sqrt(pi/2)
  EXPECT_NEAR(energy(u, ModelSpec::nls(5, 0 + 1)) - energy(ur, ModelSpec::gkdv(5, 1)),
              0.5 * 4.0 * std::sqrt(pi / 2.0), 1e-10);
}

TEST(Densities, ZeroFieldAndQuadratureConsistency) {
  auto g = centred_grid(256, 40.0);
  auto z = density_fields(Field::zeros(g, true), ModelSpec::gkdv(5, 1));
  for (const Field* f : {&z.rho, &z.j, &z.e, &z.k}) EXPECT_EQ(f->max_abs(), 0.0);
  auto u = gaussian(0.8, 1.1, 0.5, g);
  for (double mu : {-1.0, 1.0}) {
    const auto model = ModelSpec::gkdv(5, mu);
    auto d = density_fields(u, model);
    EXPECT_NEAR(integrate(d.rho).real(), mass(u), 1e-12 * mass(u));
    const double E = energy(u, model);
    EXPECT_NEAR(integrate(d.e).real(), E, 1e-12 * std::abs(E));
    for (const auto& v : d.rho.values()) EXPECT_GE(v.real(), 0.0);
  }
}

TEST(Densities, CubicCurrentIsSixTimesEnergyDensity) {
  auto g = centred_grid(256, 40.0);
  for (unsigned seed = 0; seed < 4; ++seed) {
    auto u = gaussian(0.5 + 0.3 * seed, 0.8 + 0.2 * seed, 0.3 * seed, g) +
             gaussian(0.2, 0.5, -3.0 + seed, g);
    for (double mu : {-1.0, 1.0})
      for (KVariant v : {KVariant::corrected, KVariant::paper_literal}) {
        auto d = density_fields(u, ModelSpec::gkdv(3, mu), v);
        const double scale = d.j.max_abs();
        EXPECT_LE((d.j - 6.0 * d.e).max_abs(), 1e-12 * scale);
      }
  }
}

TEST(Densities, DefocusingCurrentsAreNonNegative) {
  auto g = centred_grid(256, 40.0);
  auto u = gaussian(1.2, 0.9, 0.0, g) - gaussian(0.7, 0.6, 2.0, g);
  for (double p : {2.0, 3.0, 5.0, std::sqrt(3.0)})
    for (KVariant v : {KVariant::corrected, KVariant::paper_literal}) {
      auto d = density_fields(u, ModelSpec::gkdv(p, 1), v);
      for (std::size_t i = 0; i < u.size(); ++i) {
        EXPECT_GE(d.j[i].real(), 0.0);
        EXPECT_GE(d.k[i].real(), 0.0);
      }
    }
}

TEST(Densities, VariantsDifferByFactorPInMiddleTerm) {
  auto g = centred_grid(256, 40.0);
  auto u = gaussian(1.0, 1.0, 0.0, g);
  auto ux = derivative(u, 1);
  for (double p : {1.0, 2.0, 5.0}) {
    auto c = density_fields(u, p, 1.0, KVariant::corrected);
    auto l = density_fields(u, p, 1.0, KVariant::paper_literal);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double middle = 2.0 * std::pow(std::abs(u[i].real()), p - 1.0) * std::norm(ux[i]);
      EXPECT_NEAR(c.k[i].real() - l.k[i].real(), (p - 1.0) * middle, 1e-13);
    }
    if (p == 1.0) {
      EXPECT_EQ((c.k - l.k).max_abs(), 0.0);
    }
  }
}

TEST(ConservationResidual, NeedsFiveSnapshots) {
  auto g = centred_grid(64, 20.0);
  auto traj = evolve(gaussian(1.0, 1.0, 0.0, g), ModelSpec::airy(), stepper(0.01), 0.03, 0.01);
  EXPECT_THROW(conservation_residual(traj, ConservationLaw::mass_law), InsufficientDataError);
}

TEST(ConservationResidual, AiryPlaneWaveClosesWithThreeUxSquared) {
  const double L = 2.0 * pi;
  GridSpec g{64, L, 0.0};
  auto u0 = Field::sample(g, [](double x) { return std::cos(2.0 * x) + 0.5 * std::sin(3.0 * x); });
  auto traj = evolve(u0, ModelSpec::airy(), stepper(1e-4), 0.01, 1e-4);
  auto r = conservation_residual(traj, ConservationLaw::mass_law);
  double scale = 0.0;
  for (double s : r.flux_scale) scale = std::max(scale, s);
  EXPECT_LE(r.max_residual(), 1e-8 * scale);
}

TEST(ConservationResidual, CubicSolitonConvergesAtFourthOrder) {
  auto g = centred_grid(512, 60.0);
  auto u0 = ground_state(3.0, g);
  const auto model = ModelSpec::gkdv(3, -1);
  for (ConservationLaw law : {ConservationLaw::mass_law, ConservationLaw::energy_law}) {
    std::vector<double> hs, rs;
    for (double h : {0.16, 0.08, 0.04}) {
      auto traj = evolve(u0, model, stepper(2.5e-3), 0.96, h);
      hs.push_back(h);
      rs.push_back(conservation_residual(traj, law).max_residual());
    }
    const auto fit = fit_power_law(hs, rs);
    EXPECT_NEAR(fit.slope, 4.0, 0.5) << "law " << static_cast<int>(law);
  }
}

// The time differences only resolve the density once k^3 h is small for every
// significant wavenumber k, hence the wide Gaussian.
TEST(ConservationResidual, QuinticGaussianCorrectedConvergesPrintedPlateaus) {
  auto g = centred_grid(1024, 100.0);
  auto u0 = gaussian(1.0, 3.0, 0.0, g);
  const auto model = ModelSpec::gkdv(5, 1);
  std::vector<double> hs, mass_r, corrected, literal;
  for (double h : {0.005, 0.0025, 0.00125}) {
    auto traj = evolve(u0, model, stepper(1.25e-3), 0.1, h);
    hs.push_back(h);
    mass_r.push_back(conservation_residual(traj, ConservationLaw::mass_law).max_residual());
    corrected.push_back(conservation_residual(traj, ConservationLaw::energy_law, KVariant::corrected).max_residual());
    literal.push_back(conservation_residual(traj, ConservationLaw::energy_law, KVariant::paper_literal).max_residual());
  }
  EXPECT_NEAR(fit_power_law(hs, mass_r).slope, 4.0, 0.5);
  EXPECT_NEAR(fit_power_law(hs, corrected).slope, 4.0, 0.5);
  EXPECT_GE(literal.back(), 10.0 * corrected.back());
  EXPECT_GE(literal.back(), 0.5 * literal.front());
}

TEST(Centres, FocusingSolitonMovesRightAtUnitSpeed) {
  auto g = centred_grid(1024, 80.0);
  auto traj = evolve(ground_state(5.0, g), ModelSpec::gkdv(5, -1), stepper(1e-3), 1.0, 0.1);
  auto recs = centres(traj);
  for (const auto& r : recs) EXPECT_NEAR(r.xM - recs.front().xM, r.t, 1e-6);
  // Zero energy at t = 0; later samples carry the integrator's energy drift.
  EXPECT_FALSE(recs.front().energy_defined());
  auto cons = centre_velocity_consistency(recs, traj.sample_dt);
  EXPECT_LE(cons.max_mismatch(), 1e-6);
}

TEST(Centres, CubicDefocusingCentreOfMassMovesLinearly) {
  auto g = centred_grid(1024, 200.0);
  auto traj = evolve(gaussian(0.9, 3.0, 0.0, g), ModelSpec::gkdv(3, 1), stepper(1e-3), 1.0, 0.05);
  ASSERT_GT(traj.first_wrap_time, traj.t_final());
  auto recs = centres(traj);
  for (const auto& r : recs) {
    EXPECT_NEAR(r.vM, -6.0 * r.energy / r.mass, 1e-10 * std::abs(r.vM));
    EXPECT_LT(r.vM, 0.0);
    EXPECT_LT(r.vE, 0.0);
    EXPECT_GT(r.gap, 0.0);
  }
  // linear motion: xM(t) = xM(0) + vM t
  for (const auto& r : recs) EXPECT_NEAR(r.xM, recs.front().xM + recs.front().vM * r.t, 1e-6);
  auto cons = centre_velocity_consistency(recs, traj.sample_dt);
  EXPECT_LE(cons.max_mismatch(), 1e-6);
}

TEST(Centres, CentreIsChartIndependentAcrossTheSeam) {
  auto g = centred_grid(256, 40.0);
  auto u = gaussian(1.0, 1.0, 19.5, g);
  auto r = centre_record(u, 0.0, ModelSpec::gkdv(5, 1), KVariant::corrected);
  const double x = r.xM - 40.0 * std::round((r.xM - 19.5) / 40.0);
  EXPECT_NEAR(x, 19.5, 1e-10);
}

TEST(Dispersion, StationaryDataMatchesFirstAbsoluteMoment) {
  auto g = centred_grid(512, 40.0);
  auto u = gaussian(0.8, 1.0, 0.0, g);
  const auto model = ModelSpec::gkdv(5, 1);
  Trajectory traj;
  traj.model = model;
  traj.grid = g;
  traj.sample_dt = 1.0;
  traj.times = {0.0};
  traj.snapshots = {u};
  auto rep = dispersion_functional(traj, {});
  // Independent quadrature of |x| (u^2 + 1/2 u_x^2 + u^6 / 6) from the closed form.
  const int n = 200000;
  const double a = 20.0, h = 2.0 * a / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = -a + i * h;
    const double v = 0.8 * std::exp(-x * x), vx = -2.0 * x * v;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    s += w * std::abs(x) * (v * v + 0.5 * vx * vx + std::pow(v, 6) / 6.0);
  }
  s *= h;
  EXPECT_NEAR(rep.values[0], s, 1e-6 * s);
}

TEST(Dispersion, SolitonTrackedAtItsPeakIsConstant) {
  auto g = centred_grid(1024, 80.0);
  auto traj = evolve(ground_state(3.0, g), ModelSpec::gkdv(3, -1), stepper(1e-3), 2.0, 0.25);
  auto rep = dispersion_functional(traj, {1.0, 2.0}, [](double t) { return t; });
  for (double v : rep.values) EXPECT_NEAR(v / rep.values.front(), 1.0, 1e-4);
  EXPECT_THROW(dispersion_functional(traj, {3.0}), ValidationError);
}

TEST(MixedNorm, ConstantFieldClosedForm) {
  GridSpec g{64, 5.0, 0.0};
  const double c = 1.7, T = 2.0;
  Trajectory traj;
  traj.model = ModelSpec::airy();
  traj.grid = g;
  traj.sample_dt = 0.5;
  for (int i = 0; i <= 4; ++i) {
    traj.times.push_back(0.5 * i);
    traj.snapshots.push_back(Field::sample(g, [c](double) { return c; }));
  }
  const double expect = std::pow(T * 5.0 * std::pow(c, 6), 1.0 / 6.0);
  EXPECT_NEAR(mixed_norm(traj, NormKind::time_outer, 6, 6).value, expect, 1e-12 * expect);
  EXPECT_NEAR(mixed_norm(traj, NormKind::space_outer, 6, 6).value, expect, 1e-12 * expect);
  const auto inf = std::numeric_limits<double>::infinity();
  EXPECT_NEAR(mixed_norm(traj, NormKind::time_outer, inf, inf).value, c, 1e-14);
}

TEST(MixedNorm, AirySelfConvergenceAndRestriction) {
  auto run = [](std::size_t n, double h) {
    auto g = centred_grid(n, 60.0);
    return evolve(gaussian(1.0, 1.0, 0.0, g), ModelSpec::airy(), stepper(h), 2.0, h);
  };
  auto coarse = run(256, 0.02), fine = run(512, 0.01);
  const double a = mixed_norm(coarse, NormKind::space_outer, 10, 5).value;
  const double b = mixed_norm(fine, NormKind::space_outer, 10, 5).value;
  EXPECT_LE(std::abs(a - b) / b, 0.01);
  double prev = 0.0;
  for (std::size_t last : {10u, 40u, 100u}) {
    const double v = mixed_norm(restrict_samples(fine, 0, last), NormKind::space_outer, 10, 5).value;
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_LE(mixed_norm(restrict_samples(fine, 20, 60), NormKind::time_outer, 6, 6, 1.0 / 6.0).value,
            mixed_norm(fine, NormKind::time_outer, 6, 6, 1.0 / 6.0).value);
}
