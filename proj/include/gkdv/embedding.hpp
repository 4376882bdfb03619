#pragma once

#include "gkdv/diagnostics.hpp"
#include "gkdv/errors.hpp"
#include "gkdv/evolution.hpp"
#include "gkdv/grid.hpp"
#include "gkdv/model.hpp"
#include "gkdv/profiles.hpp"
#include "gkdv/stats.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gkdv {

// The quintic Schrodinger equation carried by u_N. The ansatz cancels the
// resonant carrier term only with this sign convention.
inline ModelSpec embedding_nls_model(double mu) { return ModelSpec::nls(5.0, mu, NlsSign::printed); }

inline constexpr std::array<int, 3> carrier_bands{1, 3, 5};

struct EmbeddingConfig {
  ProfileSpec nls_initial{ProfileKind::gaussian, 5.0, 0.35, 1.5, 0.0, 8.0};
  double mu = 1.0;
  std::vector<double> N_list{4.0, 8.0, 16.0};
  double T = 0.25;
  double sample_dt = 0.005;
  GridSpec nls_grid{512, 40.0, -20.0};
  double nls_dt = 1e-3;
  // gKdV step: min(gkdv_dt, gkdv_phase_step / N^3).
  double gkdv_dt = 1e-3;
  double gkdv_phase_step = 0.25;
  std::size_t max_num_points = 65536;
  // Focusing runs need sqrt(6/5) M(u) below this fraction of M(Q_5).
  double focusing_mass_margin = 0.9;

  void validate() const;
  bool operator==(const EmbeddingConfig&) const = default;
};

// Output grid for one N: long enough for the dilated envelope domain and for
// the packet to travel 3N^2 T without meeting itself, rounded so that the
// carrier e^{iNx} is periodic; n is the smallest power of two keeping the
// quintic band 5(N + B) under 2/3 of Nyquist.
struct EmbeddingGrid {
  GridSpec grid;
  double envelope_bandwidth = 0.0;
  double required_length = 0.0;
};

inline EmbeddingGrid embedding_grid(double N, double T, const GridSpec& nls_grid, double bandwidth_y,
                                    std::size_t max_num_points) {
  if (!(N > 0.0)) throw ValidationError("embedding: N must be positive");
  const double s = ansatz_dilation(N);
  const double footprint = s * nls_grid.domain_length;
  const double need = std::max(footprint, 2.0 * (3.0 * N * N * T + 0.5 * footprint));
  const double L = 2.0 * pi * std::ceil(N * need / (2.0 * pi)) / N;
  const double B = bandwidth_y / s;
  const double band = 5.0 * (N + B);
  const double n_min = 1.5 * band * L / pi;
  const std::size_t n = std::max<std::size_t>(8, std::bit_ceil(static_cast<std::size_t>(std::ceil(n_min))));
  if (n > max_num_points)
    throw ValidationError("embedding: N = " + std::to_string(N) + " violates the carrier bound 5(N + B) <= (2/3) pi n / L" +
                          " with n <= " + std::to_string(max_num_points) + " (needs n = " + std::to_string(n) +
                          ", L = " + std::to_string(L) + ")");
  return {{n, L, -0.5 * L}, B, need};
}

inline Field nls_initial_field(const ProfileSpec& spec, const GridSpec& g) {
  spec.validate();
  auto as_complex = [](const Field& f) { return Field(f.grid(), std::vector<cplx>(f.values().begin(), f.values().end()), false); };
  switch (spec.kind) {
    case ProfileKind::gaussian:
      return gaussian(spec.amplitude, spec.width, spec.center, g, false);
    case ProfileKind::ground_state:
      return as_complex(spec.amplitude * ground_state(spec.p, g, spec.center));
    default:
      throw ValidationError("embedding: nls_initial must be gaussian or ground_state");
  }
}

inline void EmbeddingConfig::validate() const {
  if (mu != 1.0 && mu != -1.0) throw ValidationError("embedding.mu: must be +1 or -1");
  if (N_list.empty()) throw ValidationError("embedding.N_list: must not be empty");
  for (double N : N_list)
    if (!(N > 0.0)) throw ValidationError("embedding.N_list: entries must be positive");
  if (!(T > 0.0)) throw ValidationError("embedding.T: must be positive");
  if (!(sample_dt > 0.0) || sample_dt > T) throw ValidationError("embedding.sample_dt: must lie in (0, T]");
  const double r = T / sample_dt;
  if (std::abs(r - std::round(r)) > 1e-9 * r)
    throw ValidationError("embedding.sample_dt: T must be an integer multiple of sample_dt");
  if (!(nls_dt > 0.0) || !(gkdv_dt > 0.0) || !(gkdv_phase_step > 0.0))
    throw ValidationError("embedding: time steps must be positive");
  try {
    nls_grid.validate();
  } catch (const DomainError& e) {
    throw ValidationError(std::string("embedding.nls_grid: ") + e.what());
  }
  const Field u0 = nls_initial_field(nls_initial, nls_grid);
  if (mu < 0.0) {
    const double limit = focusing_mass_margin * ground_state_mass(5.0);
    if (std::sqrt(6.0 / 5.0) * mass(u0) >= limit)
      throw ValidationError("embedding.nls_initial: focusing run needs sqrt(6/5) M(u) < " + std::to_string(limit));
  }
  const double B = significant_bandwidth(u0, 1e-12);
  for (double N : N_list) embedding_grid(N, T, nls_grid, B, max_num_points);
}

// ---------------------------------------------------------------------------
// Residual of the ansatz

struct ResidualTerms {
  Field R;
  // L2_x norm of R restricted to |xi| in [kN - N, kN + N] for k = 1, 3, 5.
  std::array<double, 3> band_norms{};
  double total_norm = 0.0;
  double leakage_norm = 0.0;
  // ||d_xxx u_N||, the size the cancellation removes.
  double dispersive_norm = 0.0;
};

// Band index 0, 1, 2 for k = 1, 3, 5, or -1 outside all bands.
inline int carrier_band(double xi, double N) {
  const double a = std::abs(xi);
  for (int b = 0; b < 3; ++b) {
    const double c = carrier_bands[static_cast<std::size_t>(b)] * N;
    if (a >= c - N && a < c + N) return b;
  }
  return -1;
}

// R = (d_t + d_xxx) u_N - mu d_x(u_N^5) at time t. The chain rule gives
// (d_t + d_xxx) u_N = A Re[e^{i(Nx + N^3 t)} (u_t + i u_yy + u_yyy / s^3)] with u_t
// from the Schrodinger right-hand side.
inline ResidualTerms residual_terms(const Field& u, double mu, double N, double t, const GridSpec& grid_out) {
  if (u.is_real()) throw ModelError("residual_terms: envelope must be a complex NLS field");
  check_embedding_grid(u, N, grid_out);
  const double s = ansatz_dilation(N), A = ansatz_amplitude(N);
  const Field ut = time_derivative(u, embedding_nls_model(mu));
  const Field uyy = derivative(u, 2), uyyy = derivative(u, 3);
  std::vector<cplx> w(u.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = ut[i] + cplx(0.0, 1.0) * uyy[i] + uyyy[i] / (s * s * s);
  const Field linear_part = modulate(sample_envelope(Field(u.grid(), std::move(w), false), N, t, grid_out), N, t, grid_out, A);
  const Field uN = modulate(sample_envelope(u, N, t, grid_out), N, t, grid_out, A);
  const Field quintic = derivative(map_values(uN, [](cplx v) { return cplx(std::pow(v.real(), 5)); }), 1);
  ResidualTerms out;
  out.R = linear_part - mu * quintic;
  const auto spec = out.R.spectrum();
  std::array<std::vector<cplx>, 4> parts;
  for (auto& p : parts) p.assign(spec.size(), cplx(0.0));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const int b = carrier_band(grid_out.wavenumber(i), N);
    parts[static_cast<std::size_t>(b < 0 ? 3 : b)][i] = spec[i];
  }
  for (std::size_t b = 0; b < 3; ++b) out.band_norms[b] = l2_norm_spectral(parts[b], grid_out);
  out.leakage_norm = l2_norm_spectral(parts[3], grid_out);
  out.total_norm = l2_norm_spectral(spec, grid_out);
  out.dispersive_norm = l2_norm(derivative(uN, 3));
  return out;
}

// ---------------------------------------------------------------------------
// Forced Airy response to the residual

// Each band k of R has the form Re[e^{ik(Nx + N^3 t)} h_k(t, x + 3N^2 t)] with
// h_k slow in t, so mode xi carries the exact phase theta_k(xi) t,
// theta_k = kN^3 + 3N^2 (xi - kN). The Duhamel integral of e_t + e_xxx = R is
// done mode by mode with that phase integrated exactly and the slow factor
// interpolated linearly between samples.
inline double carrier_phase_rate(double xi, double N) {
  const int b = carrier_band(xi, N);
  const double k = b < 0 ? std::max(1.0, 2.0 * std::round((std::abs(xi) / N - 1.0) / 2.0) + 1.0)
                         : static_cast<double>(carrier_bands[static_cast<std::size_t>(b)]);
  const double a = std::abs(xi);
  const double th = k * N * N * N + 3.0 * N * N * (a - k * N);
  return xi >= 0.0 ? th : -th;
}

struct ForcedAiryResult {
  Trajectory e;
  // L^6_{t,x} norm of |d_x|^{1/6} e and L^5_x L^10_t norm of e.
  double l6_smoothing = 0.0;
  double l5l10 = 0.0;
  double sup_l2 = 0.0;
  // Per band: rms_t ||e_k|| / rms_t ||R_k|| times |(ikN)^3 + ikN^3|, about
  // sqrt(2) when the response is the non-resonant one. NaN for k = 1.
  std::array<double, 3> nonresonance_gain{};
};

inline ForcedAiryResult forced_airy_error(const std::vector<Field>& sources, double sample_dt, double N) {
  if (sources.size() < 2) throw InsufficientDataError("forced_airy_error: need at least two source samples");
  const GridSpec g = sources.front().grid();
  const std::size_t n = g.num_points, nt = sources.size();
  std::vector<double> xi(n), rate(n), disp(n);
  std::vector<int> band(n);
  for (std::size_t i = 0; i < n; ++i) {
    xi[i] = g.wavenumber(i);
    rate[i] = carrier_phase_rate(xi[i], N);
    disp[i] = xi[i] * xi[i] * xi[i];
    band[i] = carrier_band(xi[i], N);
  }
  // Slow factors G_j = R_hat(t_j) e^{-i theta t_j}.
  auto slow = [&](std::size_t j) {
    auto spec = sources[j].spectrum();
    const double t = static_cast<double>(j) * sample_dt;
    for (std::size_t i = 0; i < n; ++i) spec[i] *= std::exp(cplx(0.0, -std::fmod(rate[i] * t, 2.0 * pi)));
    return spec;
  };
  std::vector<cplx> ehat(n, cplx(0.0)), prev = slow(0);
  ForcedAiryResult out;
  out.e.model = ModelSpec::airy();
  out.e.grid = g;
  out.e.sample_dt = sample_dt;
  out.e.times.push_back(0.0);
  out.e.snapshots.push_back(Field::zeros(g, true));
  std::array<double, 3> e2{}, r2{};
  auto accumulate = [&](const std::vector<cplx>& espec, const std::vector<cplx>& rspec) {
    std::array<std::vector<cplx>, 3> ep, rp;
    for (std::size_t b = 0; b < 3; ++b) {
      ep[b].assign(n, cplx(0.0));
      rp[b].assign(n, cplx(0.0));
    }
    for (std::size_t i = 0; i < n; ++i)
      if (band[i] >= 0) {
        ep[static_cast<std::size_t>(band[i])][i] = espec[i];
        rp[static_cast<std::size_t>(band[i])][i] = rspec[i];
      }
    for (std::size_t b = 0; b < 3; ++b) {
      e2[b] += std::pow(l2_norm_spectral(ep[b], g), 2);
      r2[b] += std::pow(l2_norm_spectral(rp[b], g), 2);
    }
  };
  accumulate(ehat, sources[0].spectrum());
  for (std::size_t j = 0; j + 1 < nt; ++j) {
    const auto next = slow(j + 1);
    const double tj = static_cast<double>(j) * sample_dt, t1 = tj + sample_dt;
    for (std::size_t i = 0; i < n; ++i) {
      const double delta = rate[i] - disp[i];
      const auto ph = phi_functions(cplx(0.0, delta * sample_dt));
      const cplx integral = sample_dt * std::exp(cplx(0.0, std::fmod(delta * tj, 2.0 * pi))) *
                            (prev[i] * ph[1] + next[i] * (ph[0] - ph[1]));
      ehat[i] = std::exp(cplx(0.0, std::fmod(disp[i] * sample_dt, 2.0 * pi))) * ehat[i] +
                std::exp(cplx(0.0, std::fmod(disp[i] * t1, 2.0 * pi))) * integral;
    }
    ehat[g.nyquist_slot()] = 0.0;
    detail::enforce_hermitian(ehat);
    prev = next;
    out.e.times.push_back(t1);
    out.e.snapshots.push_back(Field::from_spectrum(g, ehat, true));
    accumulate(ehat, sources[j + 1].spectrum());
  }
  for (const auto& f : out.e.snapshots) out.sup_l2 = std::max(out.sup_l2, l2_norm(f));
  out.l6_smoothing = mixed_norm(out.e, NormKind::time_outer, 6.0, 6.0, 1.0 / 6.0).value;
  out.l5l10 = mixed_norm(out.e, NormKind::space_outer, 10.0, 5.0).value;
  for (std::size_t b = 0; b < 3; ++b) {
    const double k = carrier_bands[b];
    const double denom = std::abs(k * N * N * N - k * k * k * N * N * N);
    out.nonresonance_gain[b] = b == 0 || r2[b] == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                                      : std::sqrt(e2[b] / r2[b]) * denom;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commutator, L^6 recovery, energy scale

// ||(|d_y|^{1/6} - lambda^{1/6}) (e^{i lambda y} u)||_{L2} for each lambda.
inline std::vector<double> commutator_decay(const Field& u, const std::vector<double>& lambdas) {
  const auto& g = u.grid();
  const double B = significant_bandwidth(u, 1e-12);
  std::vector<double> out;
  for (double lam : lambdas) {
    if (!(lam > 0.0)) throw DomainError("commutator_decay: lambda must be positive");
    if (lam + B > (2.0 / 3.0) * g.nyquist_wavenumber())
      throw ResolutionError("commutator_decay: lambda + bandwidth = " + std::to_string(lam + B) +
                            " exceeds 2/3 Nyquist = " + std::to_string((2.0 / 3.0) * g.nyquist_wavenumber()));
    std::vector<cplx> w(u.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(cplx(0.0, lam * g.coordinate(i))) * u[i];
    const Field mod(g, std::move(w), false);
    out.push_back(l2_norm(fractional_derivative(mod, 1.0 / 6.0) - std::pow(lam, 1.0 / 6.0) * mod));
  }
  return out;
}

// ||Re[e^{-2iN^3 t} e^{i sqrt(3) N^{3/2} y} u]||^6_{L^6_{t,y}} / ((5/16) ||u||^6_{L^6_{t,y}}).
// Empty when u vanishes.
inline std::optional<double> l6_recovery(const Trajectory& nls, double N) {
  if (nls.size() < 2) throw InsufficientDataError("l6_recovery: need at least two samples");
  const GridSpec& g = nls.grid;
  const double lam = std::sqrt(3.0) * std::pow(N, 1.5);
  double B = 0.0;
  for (const auto& f : nls.snapshots) B = std::max(B, significant_bandwidth(f, 1e-12));
  // The sixth power reaches 6(lambda + B); the rectangle rule is exact below 2 pi n / L.
  const double n_min = 6.0 * (lam + B) * g.domain_length / (2.0 * pi);
  const std::size_t nf = std::max(g.num_points, std::bit_ceil(static_cast<std::size_t>(std::ceil(n_min)) + 1));
  if (nf > (std::size_t{1} << 24)) throw ResolutionError("l6_recovery: carrier needs more than 2^24 points");
  const GridSpec fine{nf, g.domain_length, g.origin};
  const double dy = fine.spacing();
  double osc = 0.0, plain = 0.0;
  for (std::size_t j = 0; j < nls.size(); ++j) {
    const Field f = nf == g.num_points ? nls.snapshots[j] : resample(nls.snapshots[j], fine);
    const double ph = -2.0 * std::fmod(N * N * N * nls.times[j], 2.0 * pi);
    double so = 0.0, sp = 0.0;
    for (std::size_t i = 0; i < nf; ++i) {
      const double re = (std::exp(cplx(0.0, ph + lam * fine.coordinate(i))) * f[i]).real();
      so += std::pow(re, 6);
      sp += std::pow(std::norm(f[i]), 3);
    }
    const double w = detail::trapezoid_weight(j, nls.size(), nls.sample_dt);
    osc += w * so * dy;
    plain += w * sp * dy;
  }
  if (plain == 0.0) return std::nullopt;
  return osc / ((5.0 / 16.0) * plain);
}

// E(u_N) / (N^2 M(u_N) / 2) with the defocusing quintic energy. Empty for a zero field.
inline std::optional<double> energy_mass_ratio(const Field& uN, double N) {
  const double M = mass(uN);
  if (M == 0.0) return std::nullopt;
  return energy(uN, ModelSpec::gkdv(5.0, 1.0)) / (0.5 * N * N * M);
}

// ---------------------------------------------------------------------------
// Full experiment

struct EmbeddingSample {
  double t = 0.0;
  double err_l2 = 0.0;
  std::array<double, 3> band{};
  double e_l2 = 0.0;
  double v_l2 = 0.0;
};

struct EmbeddingRecord {
  double N = 0.0;
  GridSpec grid;
  double dt = 0.0;
  bool failed = false;
  std::string failure;
  double failure_time = 0.0;
  // Empty when the envelope has zero mass or energy.
  std::optional<double> mass_ratio;
  std::optional<double> energy_ratio;
  double sup_error_l2 = 0.0;
  // max over sample times of the band norms, the total and leakage norms.
  std::array<double, 3> band_norms{};
  double residual_norm = 0.0;
  double leakage_fraction = 0.0;
  double dispersive_norm = 0.0;
  double forced_l6_smoothing = 0.0;
  double forced_l5l10 = 0.0;
  double forced_sup_l2 = 0.0;
  std::array<double, 3> nonresonance_gain{};
  std::optional<double> l6_recovery_ratio;
  double sup_v_l2 = 0.0;
  std::vector<EmbeddingSample> series;
};

struct EmbeddingReport {
  EmbeddingConfig config;
  double nls_mass = 0.0;
  std::vector<EmbeddingRecord> records;
  // Fitted N-exponents of the band norms (k = 1, 3, 5) over successful records.
  std::array<std::optional<LinearFit>, 3> band_fits;
  std::optional<LinearFit> residual_ratio_fit;
};

inline Trajectory embedding_nls_run(const EmbeddingConfig& cfg) {
  StepperConfig st;
  st.dt = cfg.nls_dt;
  const Field u0 = nls_initial_field(cfg.nls_initial, cfg.nls_grid);
  return evolve(u0, embedding_nls_model(cfg.mu), st, cfg.T, cfg.sample_dt);
}

inline EmbeddingRecord run_embedding_single(const EmbeddingConfig& cfg, const Trajectory& nls, double N) {
  double By = 0.0;
  for (const auto& f : nls.snapshots) By = std::max(By, significant_bandwidth(f, 1e-12));
  EmbeddingRecord rec;
  rec.N = N;
  rec.grid = embedding_grid(N, cfg.T, cfg.nls_grid, By, cfg.max_num_points).grid;
  rec.dt = std::min(cfg.gkdv_dt, cfg.gkdv_phase_step / (N * N * N));
  const GridSpec& go = rec.grid;
  const double M = mass(nls.snapshots.front());

  std::vector<Field> uN;
  for (std::size_t j = 0; j < nls.size(); ++j) uN.push_back(embedding_ansatz(nls.snapshots[j], N, nls.times[j], go));
  if (M > 0.0) rec.mass_ratio = mass(uN.front()) / M;
  rec.energy_ratio = energy_mass_ratio(uN.front(), N);
  rec.l6_recovery_ratio = l6_recovery(nls, N);

  std::vector<Field> sources;
  for (std::size_t j = 0; j < nls.size(); ++j) {
    const auto res = residual_terms(nls.snapshots[j], cfg.mu, N, nls.times[j], go);
    for (std::size_t b = 0; b < 3; ++b) rec.band_norms[b] = std::max(rec.band_norms[b], res.band_norms[b]);
    rec.residual_norm = std::max(rec.residual_norm, res.total_norm);
    if (res.total_norm > 0.0) rec.leakage_fraction = std::max(rec.leakage_fraction, std::pow(res.leakage_norm / res.total_norm, 2));
    rec.dispersive_norm = std::max(rec.dispersive_norm, res.dispersive_norm);
    EmbeddingSample s;
    s.t = nls.times[j];
    s.band = res.band_norms;
    rec.series.push_back(s);
    sources.push_back(res.R);
  }
  const auto forced = forced_airy_error(sources, cfg.sample_dt, N);
  sources.clear();
  rec.forced_l6_smoothing = forced.l6_smoothing;
  rec.forced_l5l10 = forced.l5l10;
  rec.forced_sup_l2 = forced.sup_l2;
  rec.nonresonance_gain = forced.nonresonance_gain;

  StepperConfig st;
  st.dt = rec.dt;
  try {
    const auto exact = evolve(uN.front(), ModelSpec::gkdv(5.0, cfg.mu), st, cfg.T, cfg.sample_dt);
    for (std::size_t j = 0; j < exact.size(); ++j) {
      const Field diff = uN[j] - exact.snapshots[j];
      auto& s = rec.series[j];
      s.err_l2 = l2_norm(diff);
      s.e_l2 = l2_norm(forced.e.snapshots[j]);
      s.v_l2 = l2_norm(diff - forced.e.snapshots[j]);
      rec.sup_error_l2 = std::max(rec.sup_error_l2, s.err_l2);
      rec.sup_v_l2 = std::max(rec.sup_v_l2, s.v_l2);
    }
  } catch (const BlowUpError& e) {
    rec.failed = true;
    rec.failure = e.what();
    rec.failure_time = e.last_valid_time();
  }
  return rec;
}

// Uses an envelope trajectory already computed by embedding_nls_run(cfg).
inline EmbeddingReport run_embedding(const EmbeddingConfig& cfg, const Trajectory& nls) {
  cfg.validate();
  EmbeddingReport rep;
  rep.config = cfg;
  rep.nls_mass = mass(nls.snapshots.front());
  for (double N : cfg.N_list) rep.records.push_back(run_embedding_single(cfg, nls, N));
  std::vector<double> Ns;
  std::array<std::vector<double>, 3> bands;
  std::vector<double> ratio;
  for (const auto& r : rep.records) {
    if (r.failed || r.residual_norm == 0.0) continue;
    Ns.push_back(r.N);
    for (std::size_t b = 0; b < 3; ++b) bands[b].push_back(r.band_norms[b]);
    ratio.push_back(r.residual_norm / r.dispersive_norm);
  }
  if (Ns.size() >= 2) {
    for (std::size_t b = 0; b < 3; ++b) rep.band_fits[b] = fit_power_law(Ns, bands[b]);
    rep.residual_ratio_fit = fit_power_law(Ns, ratio);
  }
  return rep;
}

inline EmbeddingReport run_embedding(const EmbeddingConfig& cfg) {
  cfg.validate();
  return run_embedding(cfg, embedding_nls_run(cfg));
}

}  // namespace gkdv
