#pragma once

#include "gkdv/diagnostics.hpp"
#include "gkdv/errors.hpp"
#include "gkdv/grid.hpp"
#include "gkdv/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace gkdv {

// The five normalised quantities of one real field:
//   a^2 M = int u_xx^2,   b^2 M = int |u|^{2p},   a q M = int u_x^2,
//   b r M = int |u|^{p+1},   a b s M = p int |u|^{p-1} u_x^2.
struct GramStats {
  double a = 0.0;
  double b = 0.0;
  double q = 0.0;
  double r = 0.0;
  double s = 0.0;
  double mass = 0.0;
  double p = 0.0;
  // Largest deviation between (q, r, s) and the inner products of the three
  // normalised vectors {u, -u_xx/a, |u|^{p-1}u/b}.
  double gram_consistency = 0.0;

  double det() const { return 1.0 - q * q - r * r - s * s + 2.0 * q * r * s; }
  // Completed square of the determinant condition: (s - qr)^2 <= (1-q^2)(1-r^2).
  bool satisfies_rst() const {
    return det() >= -1e-10 && s >= q * r - std::sqrt(std::max(0.0, (1.0 - q * q) * (1.0 - r * r))) - 1e-10;
  }
};

inline constexpr double gram_tolerance = 1e-10;

inline GramStats extract_gram(const Field& f, double p) {
  if (!f.is_real()) throw ModelError("extract_gram: requires a real field");
  if (!(p > 1.0)) throw DomainError("extract_gram: p must exceed 1");
  const Field ux = derivative(f, 1);
  const Field uxx = derivative(f, 2);
  const double dx = f.grid().spacing();
  double M = 0.0, Ixx = 0.0, I2p = 0.0, Ix = 0.0, Ip1 = 0.0, Im = 0.0;
  double g12 = 0.0, g13 = 0.0, g23 = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double u = f[i].real(), au = std::abs(u);
    const double d1 = ux[i].real(), d2 = uxx[i].real();
    const double pw = std::pow(au, p - 1.0);
    M += u * u;
    Ixx += d2 * d2;
    I2p += std::pow(au, 2.0 * p);
    Ix += d1 * d1;
    Ip1 += pw * au * au;
    Im += pw * d1 * d1;
    // inner products of u, -u_xx and |u|^{p-1}u before normalisation
    g12 += -u * d2;
    g13 += pw * u * u;
    g23 += -d2 * pw * u;
  }
  M *= dx;
  Ixx *= dx;
  I2p *= dx;
  Ix *= dx;
  Ip1 *= dx;
  Im *= p * dx;
  if (!(M > 0.0) || !(Ixx > 0.0) || !(I2p > 0.0))
    throw DegenerateInputError("extract_gram: field is identically zero or constant");
  GramStats g;
  g.p = p;
  g.mass = M;
  g.a = std::sqrt(Ixx / M);
  g.b = std::sqrt(I2p / M);
  g.q = Ix / (g.a * M);
  g.r = Ip1 / (g.b * M);
  g.s = Im / (g.a * g.b * M);
  const double q2 = g12 * dx / (g.a * M), r2 = g13 * dx / (g.b * M), s2 = g23 * dx / (g.a * g.b * M);
  g.gram_consistency = std::max({std::abs(q2 - g.q), std::abs(r2 - g.r), std::abs(s2 - g.s)});
  return g;
}

struct PsdCheck {
  // Ascending.
  std::array<double, 3> eigenvalues{};
  double det = 0.0;
  bool psd = false;
};

// Eigenvalues of a symmetric 3x3 matrix by the trigonometric closed form.
inline std::array<double, 3> symmetric_eigenvalues(const std::array<std::array<double, 3>, 3>& A) {
  const double p1 = A[0][1] * A[0][1] + A[0][2] * A[0][2] + A[1][2] * A[1][2];
  const double tr = A[0][0] + A[1][1] + A[2][2];
  std::array<double, 3> e{};
  if (p1 == 0.0) {
    e = {A[0][0], A[1][1], A[2][2]};
    std::sort(e.begin(), e.end());
    return e;
  }
  const double m = tr / 3.0;
  const double p2 = (A[0][0] - m) * (A[0][0] - m) + (A[1][1] - m) * (A[1][1] - m) +
                    (A[2][2] - m) * (A[2][2] - m) + 2.0 * p1;
  const double pp = std::sqrt(p2 / 6.0);
  std::array<std::array<double, 3>, 3> B{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) B[i][j] = (A[i][j] - (i == j ? m : 0.0)) / pp;
  const double detB = B[0][0] * (B[1][1] * B[2][2] - B[1][2] * B[2][1]) -
                      B[0][1] * (B[1][0] * B[2][2] - B[1][2] * B[2][0]) +
                      B[0][2] * (B[1][0] * B[2][1] - B[1][1] * B[2][0]);
  const double rr = std::clamp(detB / 2.0, -1.0, 1.0);
  const double phi = std::acos(rr) / 3.0;
  const double hi = m + 2.0 * pp * std::cos(phi);
  const double lo = m + 2.0 * pp * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  e = {lo, tr - hi - lo, hi};
  std::sort(e.begin(), e.end());
  return e;
}

inline PsdCheck gram_psd_check(double q, double r, double s) {
  PsdCheck c;
  c.eigenvalues = symmetric_eigenvalues({{{1.0, q, r}, {q, 1.0, s}, {r, s, 1.0}}});
  c.det = 1.0 - q * q - r * r - s * s + 2.0 * q * r * s;
  c.psd = c.eigenvalues[0] >= -gram_tolerance;
  return c;
}

inline PsdCheck gram_psd_check(const GramStats& g) { return gram_psd_check(g.q, g.r, g.s); }

struct AlgInequality {
  double lhs = 0.0;
  double rhs = 0.0;
  // lhs - rhs = 3/2 a^2 (1-q^2) + ab (2s - (p+3)/(p+1) qr) + 1/2 b^2 (1 - 4p r^2/(p+1)^2)
  double reduced = 0.0;
  // 3/2 a^2 (1-q^2) + ab (2s - (p+3)/(p+1) qr) + 1/2 b^2 (1-r^2), a lower bound for `reduced`
  double expand_value = 0.0;
  bool strict = false;
};

inline AlgInequality alg_inequality(double a, double b, double q, double r, double s, double p) {
  AlgInequality out;
  out.lhs = 1.5 * a * a + 2.0 * a * b * s + 0.5 * b * b;
  out.rhs = (0.5 * a * q + b * r / (p + 1.0)) * (3.0 * a * q + 2.0 * p / (p + 1.0) * b * r);
  const double c = (p + 3.0) / (p + 1.0);
  out.reduced = 1.5 * a * a * (1.0 - q * q) + a * b * (2.0 * s - c * q * r) +
                0.5 * b * b * (1.0 - 4.0 * p * r * r / ((p + 1.0) * (p + 1.0)));
  out.expand_value = 1.5 * a * a * (1.0 - q * q) + a * b * (2.0 * s - c * q * r) + 0.5 * b * b * (1.0 - r * r);
  out.strict = out.lhs > out.rhs;
  return out;
}

inline AlgInequality alg_inequality(const GramStats& g, double p) {
  return alg_inequality(g.a, g.b, g.q, g.r, g.s, p);
}

// ---------------------------------------------------------------------------
// Region scan

struct ScanPoint {
  double q, r, s, expand_value;
};

struct RegionScanReport {
  double p = 0.0;
  double grid_resolution = 0.0;
  std::size_t points_tested = 0;
  // Minimum over tested points of the expand form on the closed quadrant
  // a, b >= 0, a^2 + b^2 = 1.
  double min_expand_value = std::numeric_limits<double>::infinity();
  std::vector<ScanPoint> violations;
  // Points where the ray minimisation and the discriminant test disagree
  // by more than rounding.
  std::size_t disagreements = 0;
};

inline constexpr double expand_violation_tolerance = 1e-12;

// Minimum of A x^2 + B x y + C y^2 over x, y >= 0, x^2 + y^2 = 1.
inline double quadrant_minimum(double A, double B, double C) {
  if (B >= 0.0) return std::min(A, C);
  // Negative coupling: the lowest eigenvector lies in the open quadrant.
  return 0.5 * (A + C) - std::sqrt(0.25 * (A - C) * (A - C) + 0.25 * B * B);
}

inline RegionScanReport region_scan(double p, double resolution) {
  if (!(resolution > 0.0) || resolution > 0.1)
    throw DomainError("region_scan: resolution must lie in (0, 0.1]");
  if (!(p > 1.0)) throw DomainError("region_scan: p must exceed 1");
  const double c = (p + 3.0) / (p + 1.0);
  const auto m = static_cast<long long>(std::floor(1.0 / resolution + 1e-9));
  RegionScanReport rep;
  rep.p = p;
  rep.grid_resolution = resolution;
  for (long long iq = 1; iq <= m; ++iq) {
    const double q = static_cast<double>(iq) * resolution;
    const double A = 1.5 * (1.0 - q * q);
    for (long long ir = 1; ir <= m; ++ir) {
      const double r = static_cast<double>(ir) * resolution;
      const double C = 0.5 * (1.0 - r * r);
      const double disc_bound = std::sqrt(3.0 * (1.0 - q * q) * (1.0 - r * r));
      for (long long is = 0; is <= m; ++is) {
        const double s = static_cast<double>(is) * resolution;
        if (1.0 - q * q - r * r - s * s + 2.0 * q * r * s < -gram_tolerance) continue;
        ++rep.points_tested;
        const double B = 2.0 * s - c * q * r;
        const double v = quadrant_minimum(A, B, C);
        rep.min_expand_value = std::min(rep.min_expand_value, v);
        const bool ray_violation = v < -expand_violation_tolerance;
        // Quadratic-formula test: negative for some a/b > 0 iff B < 0 and B^2 > 4AC.
        const bool disc_violation = -B > disc_bound;
        if (ray_violation != disc_violation && std::abs(v) > 1e-9) ++rep.disagreements;
        if (ray_violation) rep.violations.push_back({q, r, s, v});
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Monotonicity gap along a trajectory

struct GapSample {
  double t = 0.0;
  // M int k - E int j from the currents.
  double gap = 0.0;
  // The same quantity from the Gram quantities: M^2 (lhs - rhs).
  double gap_gram = 0.0;
  // vM - vE from the centre velocities, and gap / (M E).
  double velocity_difference = 0.0;
  double normalised_gap = 0.0;
  double relative_mismatch = 0.0;
};

struct GapSeries {
  std::vector<GapSample> samples;
  bool all_positive = false;
  double min_gap = 0.0;
  double max_relative_mismatch = 0.0;
};

inline GapSeries monotonicity_gap_series(const Trajectory& traj, KVariant variant = KVariant::corrected) {
  const auto& m = traj.model;
  if (m.family != Family::gkdv || m.mu != 1.0) throw ModelError("monotonicity_gap_series: requires defocusing gKdV");
  if (m.p < std::sqrt(3.0) * (1.0 - 1e-12)) throw DomainError("monotonicity_gap_series: requires p >= sqrt(3)");
  GapSeries out;
  out.all_positive = true;
  out.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& f = traj.snapshots[i];
    if (f.max_abs() == 0.0) throw DegenerateInputError("monotonicity_gap_series: zero field");
    const auto rec = centre_record(f, traj.times[i], m, variant);
    if (!(rec.energy > 0.0))
      throw ConsistencyError("monotonicity_gap_series: non-positive energy " + std::to_string(rec.energy) +
                             " for defocusing data");
    const auto g = extract_gram(f, m.p);
    const auto alg = alg_inequality(g, m.p);
    GapSample s;
    s.t = traj.times[i];
    s.gap = rec.gap;
    s.gap_gram = g.mass * g.mass * (alg.lhs - alg.rhs);
    s.velocity_difference = rec.vM - rec.vE;
    s.normalised_gap = rec.gap / (rec.mass * rec.energy);
    s.relative_mismatch = std::max(std::abs(s.gap - s.gap_gram) / std::abs(s.gap),
                                   std::abs(s.normalised_gap - s.velocity_difference) / std::abs(s.velocity_difference));
    out.all_positive = out.all_positive && s.gap > 0.0 && s.velocity_difference > 0.0;
    out.min_gap = std::min(out.min_gap, s.gap);
    out.max_relative_mismatch = std::max(out.max_relative_mismatch, s.relative_mismatch);
    out.samples.push_back(s);
  }
  return out;
}

}  // namespace gkdv
