#pragma once

#include "gkdv/chart.hpp"
#include "gkdv/errors.hpp"
#include "gkdv/evolution.hpp"
#include "gkdv/grid.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gkdv {

// Q_p(x) = ((p+1) / (2 cosh^2((p-1)x/2)))^{1/(p-1)}, the positive even
// solution of Q'' + Q^p = Q. Evaluated in log form so the tails underflow
// gracefully instead of overflowing cosh.
inline double ground_state_value(double p, double x) {
  if (!(p > 1.0)) throw DomainError("ground_state: p must exceed 1, got " + std::to_string(p));
  const double y = std::abs(0.5 * (p - 1.0) * x);
  const double log_sech = -y + std::log(2.0) - std::log1p(std::exp(-2.0 * y));
  return std::exp((std::log(0.5 * (p + 1.0)) + 2.0 * log_sech) / (p - 1.0));
}

inline constexpr double ground_state_tail_tolerance = 1e-12;

// Q_p centred at x0 (default: grid midpoint). The distance to x0 is measured
// on the torus.
inline Field ground_state(double p, const GridSpec& grid, std::optional<double> x0 = std::nullopt) {
  grid.validate();
  const double c = x0.value_or(grid.centre());
  const double peak = ground_state_value(p, 0.0);
  const double edge = ground_state_value(p, 0.5 * grid.domain_length);
  if (edge > ground_state_tail_tolerance * peak)
    throw ResolutionError("ground_state: domain too short, tail/peak = " + std::to_string(edge / peak));
  const Chart chart{c, grid.domain_length};
  return Field::sample(grid, [&](double x) { return ground_state_value(p, chart.wrap(x) - c); });
}

// Travelling wave Q_p(x - x0 - t) of focusing gKdV.
inline Field soliton(double p, const GridSpec& grid, double t, double x0) {
  return ground_state(p, grid, x0 + t);
}

// Standing wave e^{+-it} Q_p(x - x0) of focusing NLS. With the printed sign
// the phase rotates as e^{-it}; with the conventional sign as e^{+it}.
inline Field nls_soliton(double p, const GridSpec& grid, double t, double x0, NlsSign sign) {
  const Field q = ground_state(p, grid, x0);
  const cplx phase = std::exp(cplx(0.0, sign == NlsSign::printed ? -t : t));
  std::vector<cplx> v(q.values().begin(), q.values().end());
  for (auto& x : v) x *= phase;
  return Field(grid, std::move(v), false);
}

// A exp(-(x-c)^2/w^2), distance measured on the torus around c.
inline Field gaussian(double amplitude, double width, double center, const GridSpec& grid,
                      bool is_real = true) {
  grid.validate();
  if (!(width > 0.0)) throw DomainError("gaussian: width must be positive");
  const Chart chart{center, grid.domain_length};
  std::vector<cplx> v(grid.num_points);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = (chart.wrap(grid.coordinate(i)) - center) / width;
    v[i] = amplitude * std::exp(-d * d);
  }
  return Field(grid, std::move(v), is_real);
}

// M(Q_p) by trapezoid quadrature, doubling the resolution until two
// successive values agree to 1e-12 relative.
inline double ground_state_mass(double p) {
  if (!(p > 1.0)) throw DomainError("ground_state_mass: p must exceed 1");
  // Q_p^2 decays like e^{-2|x|}; |x| <= 40 leaves a tail below 1e-34.
  const double half = 40.0;
  const double h_start = 0.05;
  auto trap = [&](double h) {
    const auto m = static_cast<long long>(std::ceil(half / h));
    double s = 0.0;
    for (long long i = -m; i <= m; ++i) {
      const double q = ground_state_value(p, static_cast<double>(i) * h);
      s += q * q;
    }
    return s * h;
  };
  double h = h_start;
  double prev = trap(h);
  for (int iter = 0; iter < 12; ++iter) {
    h *= 0.5;
    const double cur = trap(h);
    if (std::abs(cur - prev) <= 1e-12 * cur) return cur;
    prev = cur;
  }
  throw ConsistencyError("ground_state_mass: quadrature did not converge");
}

// ---------------------------------------------------------------------------
// Profile specifications

enum class ProfileKind { ground_state, soliton, gaussian, embedding_ansatz };

inline std::string_view to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::ground_state: return "ground_state";
    case ProfileKind::soliton: return "soliton";
    case ProfileKind::gaussian: return "gaussian";
    case ProfileKind::embedding_ansatz: return "embedding_ansatz";
  }
  return "?";
}

inline ProfileKind profile_kind_from_string(std::string_view s) {
  if (s == "ground_state") return ProfileKind::ground_state;
  if (s == "soliton") return ProfileKind::soliton;
  if (s == "gaussian") return ProfileKind::gaussian;
  if (s == "embedding_ansatz") return ProfileKind::embedding_ansatz;
  throw ValidationError("unknown profile kind '" + std::string(s) + "'");
}

struct ProfileSpec {
  ProfileKind kind = ProfileKind::gaussian;
  double p = 5.0;
  double amplitude = 1.0;
  double width = 1.0;
  double center = 0.0;
  // Carrier frequency; embedding ansatz only.
  double N = 8.0;

  void validate() const {
    if ((kind == ProfileKind::ground_state || kind == ProfileKind::soliton) && !(p > 1.0))
      throw ValidationError("profile.p: must exceed 1");
    if (kind == ProfileKind::gaussian && !(width > 0.0))
      throw ValidationError("profile.width: must be positive");
    if (kind == ProfileKind::embedding_ansatz && !(N > 0.0))
      throw ValidationError("profile.N: must be positive");
  }

  bool operator==(const ProfileSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Embedding ansatz
//
// u_N(t,x) = (8/5)^{1/4} N^{-1/4} Re[e^{iNx} e^{iN^3 t} u(t, y)],
// y = (x + 3N^2 t) / sqrt(3N).

inline double ansatz_amplitude(double N) { return std::pow(8.0 / 5.0, 0.25) * std::pow(N, -0.25); }
inline double ansatz_dilation(double N) { return std::sqrt(3.0 * N); }

// Envelope bandwidth in x of a Schrodinger field once dilated by sqrt(3N).
inline double envelope_bandwidth(const Field& u_nls, double N) {
  return significant_bandwidth(u_nls, 1e-12) / ansatz_dilation(N);
}

// Checks that grid_out can carry u_N built from u_nls: the quintic products
// reach 5N + 5B, which must stay under 2/3 of the Nyquist wavenumber, and the
// dilated envelope must fit in the domain.
inline void check_embedding_grid(const Field& u_nls, double N, const GridSpec& grid_out) {
  if (!(N > 0.0)) throw DomainError("embedding_ansatz: N must be positive");
  grid_out.validate();
  const double band = 5.0 * (N + envelope_bandwidth(u_nls, N));
  const double limit = (2.0 / 3.0) * grid_out.nyquist_wavenumber();
  if (band > limit)
    throw ResolutionError("embedding_ansatz: quintic carrier band 5(N + B) = " + std::to_string(band) +
                          " exceeds 2/3 Nyquist = " + std::to_string(limit));
  const double need = ansatz_dilation(N) * u_nls.grid().domain_length;
  if (grid_out.domain_length < need * (1.0 - 1e-12))
    throw ResolutionError("embedding_ansatz: output domain " + std::to_string(grid_out.domain_length) +
                          " shorter than dilated envelope domain " + std::to_string(need));
}

// Values of the envelope u(t, y(x_j)) on grid_out, by band-limited
// evaluation of u_nls. Points whose y falls outside the envelope domain get
// zero.
inline std::vector<cplx> sample_envelope(const Field& u_nls, double N, double t,
                                         const GridSpec& grid_out) {
  const auto& gn = u_nls.grid();
  const double s = ansatz_dilation(N);
  const double shift = 3.0 * N * N * t;
  // Lab-frame position of the envelope domain centre.
  const Chart chart{s * gn.centre() - shift, grid_out.domain_length};
  const std::size_t n = grid_out.num_points;
  std::size_t j0 = 0;
  double xmin = chart.wrap(grid_out.coordinate(0));
  for (std::size_t j = 1; j < n; ++j) {
    const double w = chart.wrap(grid_out.coordinate(j));
    if (w < xmin) {
      xmin = w;
      j0 = j;
    }
  }
  const double dx = grid_out.spacing();
  const double y0 = (xmin + shift) / s;
  const auto vals = evaluate_band_limited(u_nls, y0, dx / s, n);
  std::vector<cplx> out(n);
  const double lo = gn.origin, hi = gn.origin + gn.domain_length;
  for (std::size_t m = 0; m < n; ++m) {
    const double y = y0 + static_cast<double>(m) * dx / s;
    out[(j0 + m) % n] = (y >= lo && y < hi) ? vals[m] : cplx(0.0);
  }
  return out;
}

// Combines envelope samples with the carrier: A Re[e^{i(Nx + N^3 t)} env].
inline Field modulate(std::span<const cplx> env, double N, double t, const GridSpec& grid_out,
                      double amplitude) {
  std::vector<cplx> v(grid_out.num_points);
  const double phase_t = std::fmod(N * N * N * t, 2.0 * pi);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double th = N * grid_out.coordinate(j) + phase_t;
    v[j] = amplitude * (std::exp(cplx(0.0, th)) * env[j]).real();
  }
  return Field(grid_out, std::move(v), true);
}

inline Field embedding_ansatz(const Field& u_nls, double N, double t, const GridSpec& grid_out) {
  if (u_nls.is_real()) throw ModelError("embedding_ansatz: envelope must be a complex NLS field");
  check_embedding_grid(u_nls, N, grid_out);
  const auto env = sample_envelope(u_nls, N, t, grid_out);
  return modulate(env, N, t, grid_out, ansatz_amplitude(N));
}

}  // namespace gkdv
