#pragma once

#include "gkdv/chart.hpp"
#include "gkdv/errors.hpp"
#include "gkdv/grid.hpp"
#include "gkdv/model.hpp"
#include "gkdv/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gkdv {

inline double mass(const Field& f) {
  double s = 0.0;
  for (const auto& v : f.values()) s += std::norm(v);
  return s * f.grid().spacing();
}

// E = int 1/2 |u_x|^2 + mu/(p+1) |u|^{p+1}.
inline double energy(const Field& f, const ModelSpec& model) {
  const Field ux = derivative(f, 1);
  const double dx = f.grid().spacing();
  double kin = 0.0, pot = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    kin += std::norm(ux[i]);
    if (model.mu != 0.0) pot += std::pow(std::abs(f[i]), model.p + 1.0);
  }
  return dx * (0.5 * kin + model.mu / (model.p + 1.0) * pot);
}

// ---------------------------------------------------------------------------
// Densities and currents of the gKdV conservation laws
//   rho_t + rho_xxx = j_x,   e_t + e_xxx = k_x.

enum class KVariant { corrected, paper_literal };

inline std::string_view to_string(KVariant v) {
  return v == KVariant::corrected ? "corrected" : "paper-literal";
}

inline KVariant k_variant_from_string(std::string_view s) {
  if (s == "corrected") return KVariant::corrected;
  if (s == "paper-literal" || s == "paper_literal") return KVariant::paper_literal;
  throw ValidationError("unknown k variant '" + std::string(s) + "' (corrected | paper-literal)");
}

struct DensityFields {
  Field rho;
  Field j;
  Field e;
  Field k;
  KVariant k_variant;
};

// Pointwise densities for a real field with exponent p >= 1 and sign mu.
//   j = 3 u_x^2 + 2 mu p/(p+1) |u|^{p+1}
//   e = 1/2 u_x^2 + mu/(p+1) |u|^{p+1}
//   k = 3/2 u_xx^2 + 2 mu c |u|^{p-1} u_x^2 + mu^2/2 |u|^{2p},  c = p (corrected) or 1
inline DensityFields density_fields(const Field& f, double p, double mu, KVariant variant) {
  if (!f.is_real()) throw ModelError("density_fields: requires a real field");
  if (!(p >= 1.0)) throw DomainError("density_fields: p must be at least 1");
  const Field ux = derivative(f, 1);
  const Field uxx = derivative(f, 2);
  const std::size_t n = f.size();
  const double c = variant == KVariant::corrected ? p : 1.0;
  std::vector<double> rho(n), j(n), e(n), k(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = f[i].real(), a = std::abs(u);
    const double d1 = ux[i].real(), d2 = uxx[i].real();
    const double ap1 = std::pow(a, p + 1.0);
    rho[i] = u * u;
    j[i] = 3.0 * d1 * d1 + 2.0 * mu * p / (p + 1.0) * ap1;
    e[i] = 0.5 * d1 * d1 + mu / (p + 1.0) * ap1;
    k[i] = 1.5 * d2 * d2 + 2.0 * mu * c * std::pow(a, p - 1.0) * d1 * d1 +
           0.5 * mu * mu * std::pow(a, 2.0 * p);
  }
  const auto& g = f.grid();
  return {Field::from_real(g, rho), Field::from_real(g, j), Field::from_real(g, e),
          Field::from_real(g, k), variant};
}

inline DensityFields density_fields(const Field& f, const ModelSpec& model,
                                    KVariant variant = KVariant::corrected) {
  if (!model.real_valued()) throw ModelError("density_fields: requires gKdV or Airy");
  return density_fields(f, model.p, model.mu, variant);
}

// ---------------------------------------------------------------------------
// Conservation-law residuals

enum class ConservationLaw { mass_law, energy_law };

struct ConservationResidual {
  // Interior sample indices (the first and last two samples are skipped).
  std::vector<std::size_t> indices;
  std::vector<double> times;
  // L^2_x norm of rho_t + rho_xxx - j_x (or the energy analogue).
  std::vector<double> residual;
  // L^2_x norm of the flux divergence j_x (or k_x) at the same times.
  std::vector<double> flux_scale;

  double max_residual() const {
    double m = 0.0;
    for (double r : residual) m = std::max(m, r);
    return m;
  }
  double max_relative() const {
    double m = 0.0;
    for (std::size_t i = 0; i < residual.size(); ++i)
      m = std::max(m, residual[i] / std::max(flux_scale[i], 1e-300));
    return m;
  }
};

// Time derivative of the density by 4th-order centred differences of the
// snapshots, space derivatives spectrally.
inline ConservationResidual conservation_residual(const Trajectory& traj, ConservationLaw which,
                                                  KVariant variant = KVariant::corrected) {
  if (!traj.model.real_valued()) throw ModelError("conservation_residual: requires gKdV or Airy");
  if (traj.size() < 5) throw InsufficientDataError("conservation_residual: need at least 5 snapshots");
  const double p = traj.model.p, mu = traj.model.mu;
  std::vector<Field> dens, flux;
  dens.reserve(traj.size());
  flux.reserve(traj.size());
  for (const auto& s : traj.snapshots) {
    auto d = density_fields(s, p, mu, variant);
    if (which == ConservationLaw::mass_law) {
      dens.push_back(std::move(d.rho));
      flux.push_back(std::move(d.j));
    } else {
      dens.push_back(std::move(d.e));
      flux.push_back(std::move(d.k));
    }
  }
  const double h = traj.sample_dt;
  ConservationResidual out;
  for (std::size_t i = 2; i + 2 < traj.size(); ++i) {
    const Field dt_rho = (1.0 / (12.0 * h)) * (dens[i - 2] - 8.0 * dens[i - 1] + 8.0 * dens[i + 1] - dens[i + 2]);
    const Field div = derivative(flux[i], 1);
    const Field r = dt_rho + derivative(dens[i], 3) - div;
    out.indices.push_back(i);
    out.times.push_back(traj.times[i]);
    out.residual.push_back(l2_norm(r));
    out.flux_scale.push_back(l2_norm(div));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Centres of mass and energy

struct CentreRecord {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double xM = 0.0;
  // NaN when the energy is too small for the centre of energy to make sense.
  double xE = std::numeric_limits<double>::quiet_NaN();
  double vM = 0.0;
  double vE = std::numeric_limits<double>::quiet_NaN();
  double gap = 0.0;
  double tail_mass = 0.0;
  double int_j = 0.0;
  double int_k = 0.0;

  bool energy_defined() const { return std::isfinite(xE); }
};

// Relative size below which E is treated as zero: |E| < 1e-10 * (kinetic + |potential|).
inline constexpr double energy_zero_tolerance = 1e-10;

inline CentreRecord centre_record(const Field& f, double t, const ModelSpec& model, KVariant variant) {
  if (model.family != Family::gkdv && model.family != Family::airy)
    throw ModelError("centres: requires gKdV or Airy");
  const auto d = density_fields(f, model.p, model.mu, variant);
  const auto& g = f.grid();
  const double dx = g.spacing();
  const Chart chart = mass_chart(f);
  double M = 0.0, E = 0.0, mx = 0.0, ex = 0.0, J = 0.0, K = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = chart.wrap(g.coordinate(i));
    const double r = d.rho[i].real(), e = d.e[i].real();
    M += r;
    E += e;
    mx += x * r;
    ex += x * e;
    J += d.j[i].real();
    K += d.k[i].real();
    scale += std::abs(e);
  }
  CentreRecord c;
  c.t = t;
  c.mass = M * dx;
  c.energy = E * dx;
  c.int_j = J * dx;
  c.int_k = K * dx;
  c.tail_mass = tail_mass_fraction(f, chart);
  if (c.mass > 0.0) {
    c.xM = mx / M;
    c.vM = -c.int_j / c.mass;
  } else {
    c.xM = std::numeric_limits<double>::quiet_NaN();
    c.vM = std::numeric_limits<double>::quiet_NaN();
  }
  if (std::abs(E) >= energy_zero_tolerance * scale && E != 0.0) {
    c.xE = ex / E;
    c.vE = -c.int_k / c.energy;
  }
  c.gap = c.mass * c.int_k - c.energy * c.int_j;
  return c;
}

namespace detail {

// Removes jumps of the chart by whole periods so the series is continuous.
inline void unwrap_periodic(std::vector<CentreRecord>& recs, double L, double CentreRecord::*field) {
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const double prev = recs[i - 1].*field, cur = recs[i].*field;
    if (!std::isfinite(prev) || !std::isfinite(cur)) continue;
    recs[i].*field = cur - L * std::round((cur - prev) / L);
  }
}

}  // namespace detail

inline std::vector<CentreRecord> centres(const Trajectory& traj, KVariant variant = KVariant::corrected) {
  std::vector<CentreRecord> out;
  out.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i)
    out.push_back(centre_record(traj.snapshots[i], traj.times[i], traj.model, variant));
  detail::unwrap_periodic(out, traj.grid.domain_length, &CentreRecord::xM);
  detail::unwrap_periodic(out, traj.grid.domain_length, &CentreRecord::xE);
  return out;
}

struct VelocityConsistency {
  std::vector<double> times;
  // |d(xM)/dt - vM| with the derivative by 4th-order centred differences.
  std::vector<double> mismatch;
  std::vector<double> tail_mass;
  double max_mismatch() const {
    double m = 0.0;
    for (double v : mismatch) m = std::max(m, v);
    return m;
  }
};

inline VelocityConsistency centre_velocity_consistency(const std::vector<CentreRecord>& recs,
                                                       double sample_dt) {
  if (recs.size() < 5) throw InsufficientDataError("centre_velocity_consistency: need at least 5 records");
  VelocityConsistency out;
  for (std::size_t i = 2; i + 2 < recs.size(); ++i) {
    const double d = (recs[i - 2].xM - 8.0 * recs[i - 1].xM + 8.0 * recs[i + 1].xM - recs[i + 2].xM) /
                     (12.0 * sample_dt);
    out.times.push_back(recs[i].t);
    out.mismatch.push_back(std::abs(d - recs[i].vM));
    out.tail_mass.push_back(recs[i].tail_mass);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dispersion functional  int |x - x(t)| (rho + e) dx

struct DispersionReport {
  std::vector<double> times;
  std::vector<double> values;
  // Growth fit: sup of the values over [0, T] for each window T.
  std::vector<double> windows;
  std::vector<double> sups;
  LinearFit fit;
};

// int |x - c| w(x) dx on the torus, with |x - c| read in the chart centred at
// c. The kink at c defeats the rectangle rule, so the weight is paired with
// the Fourier series of the periodic triangle wave instead (exact for
// band-limited w).
inline double absolute_moment(const Field& w, double c) {
  const auto& g = w.grid();
  const double L = g.domain_length;
  const auto spec = w.spectrum();
  const double n = static_cast<double>(g.num_points);
  double s = 0.25 * L * spec[0].real() / n;
  for (std::size_t i = 1; i < spec.size(); ++i) {
    if (i == g.nyquist_slot()) continue;
    const auto m = g.mode_index(i);
    if (m % 2 == 0) continue;
    const double k = g.wavenumber(i);
    const double tau = -4.0 / (L * k * k);
    s += tau * (spec[i] / n * std::exp(cplx(0.0, k * (c - g.origin)))).real();
  }
  return L * s;
}

inline double dispersion_value(const Field& f, const ModelSpec& model, double centre) {
  const auto d = density_fields(f, model.p, model.mu, KVariant::corrected);
  return absolute_moment(d.rho + d.e, centre);
}

// x_of_t defaults to the centre of mass. Windows must lie in (0, t_final];
// the optional tail limit rejects snapshots whose mass reaches the outer half
// of the domain.
inline DispersionReport dispersion_functional(const Trajectory& traj,
                                              const std::vector<double>& windows,
                                              const std::function<double(double)>& x_of_t = {},
                                              std::optional<double> tail_limit = std::nullopt) {
  if (!traj.model.real_valued()) throw ModelError("dispersion_functional: requires gKdV");
  DispersionReport rep;
  std::vector<CentreRecord> recs;
  if (!x_of_t) recs = centres(traj);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& f = traj.snapshots[i];
    if (tail_limit) {
      const double tail = tail_mass_fraction(f);
      if (tail > *tail_limit)
        throw ValidationError("dispersion_functional: tail mass " + std::to_string(tail) + " at t = " +
                              std::to_string(traj.times[i]) + " exceeds limit");
    }
    const double c = x_of_t ? x_of_t(traj.times[i]) : recs[i].xM;
    rep.times.push_back(traj.times[i]);
    rep.values.push_back(dispersion_value(f, traj.model, c));
  }
  for (double T : windows) {
    if (!(T > 0.0) || T > traj.t_final() * (1.0 + 1e-12))
      throw ValidationError("dispersion_functional: window " + std::to_string(T) + " outside (0, " +
                            std::to_string(traj.t_final()) + "]");
    double sup = 0.0;
    for (std::size_t i = 0; i < rep.times.size(); ++i)
      if (rep.times[i] <= T * (1.0 + 1e-12)) sup = std::max(sup, rep.values[i]);
    rep.windows.push_back(T);
    rep.sups.push_back(sup);
  }
  if (rep.windows.size() >= 2) rep.fit = fit_power_law(rep.windows, rep.sups);
  return rep;
}

// ---------------------------------------------------------------------------
// Mixed spacetime norms

// time_outer: L^q_t L^r_x; space_outer: L^r_x L^q_t. q is always the time
// exponent and r the space exponent.
enum class NormKind { time_outer, space_outer };

struct NormReport {
  NormKind kind = NormKind::time_outer;
  double q = 2.0;
  double r = 2.0;
  double frac_order = 0.0;
  double value = 0.0;
  std::size_t num_points = 0;
  double domain_length = 0.0;
  double sample_dt = 0.0;
  std::size_t num_samples = 0;
};

namespace detail {

// Trapezoid weights on a uniform time grid.
inline double trapezoid_weight(std::size_t i, std::size_t n, double h) {
  return (i == 0 || i + 1 == n) ? 0.5 * h : h;
}

// L^exp norm of values with weights w (max for exp = inf).
template <class Get>
double weighted_norm(std::size_t n, double exp, Get&& value_weight) {
  if (std::isinf(exp)) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, value_weight(i).first);
    return m;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [v, w] = value_weight(i);
    s += w * std::pow(v, exp);
  }
  return std::pow(s, 1.0 / exp);
}

}  // namespace detail

inline NormReport mixed_norm(const Trajectory& traj, NormKind kind, double q, double r,
                             double frac_order = 0.0) {
  if (!(q >= 1.0) || !(r >= 1.0)) throw DomainError("mixed_norm: exponents must lie in [1, inf]");
  if (frac_order < 0.0) throw DomainError("mixed_norm: frac_order must be non-negative");
  if (traj.size() < 2) throw InsufficientDataError("mixed_norm: need at least two samples");
  const std::size_t nt = traj.size();
  const std::size_t nx = traj.grid.num_points;
  const double dx = traj.grid.spacing(), h = traj.sample_dt;
  std::vector<std::vector<double>> mod(nt, std::vector<double>(nx));
  for (std::size_t i = 0; i < nt; ++i) {
    const Field f = frac_order == 0.0 ? traj.snapshots[i] : fractional_derivative(traj.snapshots[i], frac_order);
    for (std::size_t k = 0; k < nx; ++k) mod[i][k] = std::abs(f[k]);
  }
  NormReport rep{kind, q, r, frac_order, 0.0, nx, traj.grid.domain_length, h, nt};
  if (kind == NormKind::time_outer) {
    std::vector<double> inner(nt);
    for (std::size_t i = 0; i < nt; ++i)
      inner[i] = detail::weighted_norm(nx, r, [&](std::size_t k) { return std::pair{mod[i][k], dx}; });
    rep.value = detail::weighted_norm(
        nt, q, [&](std::size_t i) { return std::pair{inner[i], detail::trapezoid_weight(i, nt, h)}; });
  } else {
    std::vector<double> inner(nx);
    for (std::size_t k = 0; k < nx; ++k)
      inner[k] = detail::weighted_norm(
          nt, q, [&](std::size_t i) { return std::pair{mod[i][k], detail::trapezoid_weight(i, nt, h)}; });
    rep.value = detail::weighted_norm(nx, r, [&](std::size_t k) { return std::pair{inner[k], dx}; });
  }
  return rep;
}

// Restriction of a trajectory to samples [first, last].
inline Trajectory restrict_samples(const Trajectory& traj, std::size_t first, std::size_t last) {
  if (first > last || last >= traj.size()) throw DomainError("restrict_samples: invalid range");
  Trajectory out = traj;
  out.times.assign(traj.times.begin() + static_cast<std::ptrdiff_t>(first),
                   traj.times.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  out.snapshots.assign(traj.snapshots.begin() + static_cast<std::ptrdiff_t>(first),
                       traj.snapshots.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  return out;
}

}  // namespace gkdv
