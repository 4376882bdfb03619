#pragma once

#include "gkdv/chart.hpp"
#include "gkdv/errors.hpp"
#include "gkdv/grid.hpp"
#include "gkdv/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gkdv {

enum class Scheme { etdrk4, ifrk4 };

struct StepperConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::etdrk4;
  // Upper bound on dt * (nonlinear frequency estimate).
  double substep_safety = 2.0;

  bool operator==(const StepperConfig&) const = default;
};

struct EvolveOptions {
  // Abort when max|u| exceeds this multiple of the initial max|u|.
  double max_growth = 1e6;
  // When set, reject initial data whose tail mass fraction exceeds the limit.
  std::optional<double> tail_mass_limit;
};

// ---------------------------------------------------------------------------
// phi-functions of exponential integrators

// phi_k(z) = sum_{j>=0} z^j / (j+k)!. The closed forms cancel catastrophically
// near z = 0, so below this modulus the Taylor series is summed instead.
inline constexpr double phi_series_threshold = 1.0;

inline std::array<cplx, 3> phi_functions(cplx z) {
  if (std::abs(z) < phi_series_threshold) {
    std::array<cplx, 3> out{};
    for (int k = 1; k <= 3; ++k) {
      double fact = 1.0;
      for (int i = 2; i <= k; ++i) fact *= i;
      cplx term = 1.0 / fact, sum = term;
      for (int j = 1; j < 30; ++j) {
        term *= z / static_cast<double>(j + k);
        sum += term;
      }
      out[static_cast<std::size_t>(k - 1)] = sum;
    }
    return out;
  }
  const cplx ez = std::exp(z);
  const cplx p1 = (ez - 1.0) / z;
  const cplx p2 = (ez - 1.0 - z) / (z * z);
  const cplx p3 = (ez - 1.0 - z - 0.5 * z * z) / (z * z * z);
  return {p1, p2, p3};
}

// Nonlinear part of the right-hand side in spectral space:
// out = N(u_hat, t). Implementations may ignore either argument.
using SpectralRhs = std::function<void(std::span<const cplx>, double, std::span<cplx>)>;

// Diagonal exponential integrator for u_hat' = L u_hat + N(u_hat, t).
class ExponentialStepper {
 public:
  ExponentialStepper(std::vector<cplx> symbol, double h, Scheme scheme)
      : scheme_(scheme), h_(h), n_(symbol.size()) {
    E_.resize(n_);
    E2_.resize(n_);
    if (scheme_ == Scheme::etdrk4) {
      Q_.resize(n_);
      f1_.resize(n_);
      f2_.resize(n_);
      f3_.resize(n_);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const cplx z = symbol[i] * h;
      E_[i] = std::exp(z);
      E2_[i] = std::exp(0.5 * z);
      if (scheme_ == Scheme::etdrk4) {
        const auto half = phi_functions(0.5 * z);
        const auto full = phi_functions(z);
        Q_[i] = 0.5 * h * half[0];
        f1_[i] = h * (full[0] - 3.0 * full[1] + 4.0 * full[2]);
        f2_[i] = h * (full[1] - 2.0 * full[2]);
        f3_[i] = h * (-full[1] + 4.0 * full[2]);
      }
    }
    for (auto* buf : {&Nu_, &Na_, &Nb_, &Nc_, &a_, &b_, &c_}) buf->resize(n_);
  }

  double step_size() const { return h_; }

  void step(std::vector<cplx>& u, double t, const SpectralRhs& rhs) {
    if (scheme_ == Scheme::etdrk4)
      step_etdrk4(u, t, rhs);
    else
      step_ifrk4(u, t, rhs);
  }

 private:
  // Cox-Matthews ETDRK4 in the Kassam-Trefethen form.
  void step_etdrk4(std::vector<cplx>& u, double t, const SpectralRhs& rhs) {
    rhs(u, t, Nu_);
    for (std::size_t i = 0; i < n_; ++i) a_[i] = E2_[i] * u[i] + Q_[i] * Nu_[i];
    rhs(a_, t + 0.5 * h_, Na_);
    for (std::size_t i = 0; i < n_; ++i) b_[i] = E2_[i] * u[i] + Q_[i] * Na_[i];
    rhs(b_, t + 0.5 * h_, Nb_);
    for (std::size_t i = 0; i < n_; ++i) c_[i] = E2_[i] * a_[i] + Q_[i] * (2.0 * Nb_[i] - Nu_[i]);
    rhs(c_, t + h_, Nc_);
    for (std::size_t i = 0; i < n_; ++i)
      u[i] = E_[i] * u[i] + f1_[i] * Nu_[i] + 2.0 * f2_[i] * (Na_[i] + Nb_[i]) + f3_[i] * Nc_[i];
  }

  // Classical RK4 applied to the integrating-factor variable.
  void step_ifrk4(std::vector<cplx>& u, double t, const SpectralRhs& rhs) {
    const double h = h_;
    rhs(u, t, Nu_);
    for (std::size_t i = 0; i < n_; ++i) a_[i] = E2_[i] * (u[i] + 0.5 * h * Nu_[i]);
    rhs(a_, t + 0.5 * h, Na_);
    for (std::size_t i = 0; i < n_; ++i) b_[i] = E2_[i] * u[i] + 0.5 * h * Na_[i];
    rhs(b_, t + 0.5 * h, Nb_);
    for (std::size_t i = 0; i < n_; ++i) c_[i] = E_[i] * u[i] + h * E2_[i] * Nb_[i];
    rhs(c_, t + h, Nc_);
    for (std::size_t i = 0; i < n_; ++i)
      u[i] = E_[i] * u[i] +
             h / 6.0 * (E_[i] * Nu_[i] + 2.0 * E2_[i] * (Na_[i] + Nb_[i]) + Nc_[i]);
  }

  Scheme scheme_;
  double h_;
  std::size_t n_;
  std::vector<cplx> E_, E2_, Q_, f1_, f2_, f3_;
  std::vector<cplx> Nu_, Na_, Nb_, Nc_, a_, b_, c_;
};

// ---------------------------------------------------------------------------
// Right-hand sides

namespace detail {

inline void require_realness(const Field& f, const ModelSpec& m) {
  if (f.is_real() != m.real_valued())
    throw ModelError(std::string("field realness does not match model ") +
                     std::string(to_string(m.family)));
}

}  // namespace detail

// Spectral nonlinear term for a model; stateful workspace, not thread-safe.
class NonlinearTerm {
 public:
  NonlinearTerm(const ModelSpec& model, const GridSpec& grid) : model_(model), grid_(grid) {
    if (!model_.linear()) power_.emplace(grid.num_points, model.p, model.real_valued());
    ik_.resize(grid.num_points);
    for (std::size_t i = 0; i < grid.num_points; ++i) ik_[i] = cplx(0.0, grid.wavenumber(i));
    ik_[grid.nyquist_slot()] = 0.0;
  }

  void operator()(std::span<const cplx> uhat, std::span<cplx> out) {
    if (!power_) {
      std::fill(out.begin(), out.end(), cplx(0.0));
      return;
    }
    power_->apply(uhat, out);
    if (model_.real_valued()) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] *= model_.mu * ik_[i];
    } else {
      const cplx factor(0.0, model_.schrodinger_sign() * model_.mu);
      for (auto& v : out) v *= factor;
    }
  }

 private:
  ModelSpec model_;
  GridSpec grid_;
  std::optional<PowerEvaluator> power_;
  std::vector<cplx> ik_;
};

// Nonlinear part of u_t for the model: mu d_x(|u|^{p-1}u) for gKdV,
// i mu |u|^{p-1}u for printed NLS (sign flipped for the conventional form),
// zero for the linear families.
inline Field rhs_nonlinear(const Field& state, const ModelSpec& model) {
  model.validate();
  detail::require_realness(state, model);
  NonlinearTerm term(model, state.grid());
  const auto uhat = state.spectrum();
  std::vector<cplx> out(uhat.size());
  term(uhat, out);
  return Field::from_spectrum(state.grid(), out, state.is_real());
}

// Full u_t = L u + N(u) evaluated spectrally.
inline Field time_derivative(const Field& state, const ModelSpec& model) {
  model.validate();
  detail::require_realness(state, model);
  NonlinearTerm term(model, state.grid());
  auto uhat = state.spectrum();
  std::vector<cplx> out(uhat.size());
  term(uhat, out);
  const auto& g = state.grid();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += linear_symbol(model, g.wavenumber(i)) * uhat[i];
  out[g.nyquist_slot()] = 0.0;
  return Field::from_spectrum(g, out, state.is_real());
}

// dt-independent stiffness of the explicit part: the largest frequency of the
// linearised nonlinear term on this grid.
inline double nonlinear_frequency_estimate(const Field& state, const ModelSpec& model) {
  if (model.linear()) return 0.0;
  const double amp = std::pow(state.max_abs(), model.p - 1.0);
  const double base = std::abs(model.mu) * model.p * amp;
  return model.real_valued() ? base * state.grid().nyquist_wavenumber() : base;
}

// Largest wavenumber carrying a non-negligible share of the spectrum.
inline double significant_bandwidth(const Field& f, double rel = 1e-10) {
  const auto spec = f.spectrum();
  double peak = 0.0;
  for (const auto& c : spec) peak = std::max(peak, std::abs(c));
  if (peak == 0.0) return 0.0;
  double kmax = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (std::abs(spec[i]) > rel * peak) kmax = std::max(kmax, std::abs(f.grid().wavenumber(i)));
  return kmax;
}

// Time for radiation at the fastest significant frequency to travel half the
// domain: group speed 3 xi^2 (Airy) or 2 xi (Schrodinger).
inline double first_wrap_time(const Field& f, const ModelSpec& model) {
  const double xi = significant_bandwidth(f);
  const double speed = model.real_valued() ? 3.0 * xi * xi : 2.0 * xi;
  if (speed == 0.0) return std::numeric_limits<double>::infinity();
  return 0.5 * f.grid().domain_length / speed;
}

namespace detail {

inline std::size_t sample_count(double t_final, double sample_dt) {
  if (!(sample_dt > 0.0) || !(t_final >= 0.0))
    throw ConfigurationError("evolve: need sample_dt > 0 and t_final >= 0");
  const double r = t_final / sample_dt;
  const double nr = std::round(r);
  if (std::abs(r - nr) > 1e-9 * std::max(1.0, r))
    throw ConfigurationError("evolve: t_final must be an integer multiple of sample_dt");
  return static_cast<std::size_t>(nr);
}

inline void enforce_hermitian(std::vector<cplx>& u) {
  const std::size_t n = u.size();
  u[0] = cplx(u[0].real(), 0.0);
  u[n / 2] = 0.0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    const cplx avg = 0.5 * (u[k] + std::conj(u[n - k]));
    u[k] = avg;
    u[n - k] = std::conj(avg);
  }
}

inline bool all_finite(std::span<const cplx> u) {
  double s = 0.0;
  for (const auto& v : u) s += std::abs(v.real()) + std::abs(v.imag());
  return std::isfinite(s);
}

// Shared driver: integrates from `initial` and records uniform samples.
inline Trajectory integrate_samples(const Field& initial, const ModelSpec& model,
                                    const StepperConfig& stepper, double t_final,
                                    double sample_dt, const SpectralRhs& rhs,
                                    const EvolveOptions& options) {
  if (!(stepper.dt > 0.0)) throw ConfigurationError("evolve: dt must be positive");
  const std::size_t samples = sample_count(t_final, sample_dt);
  const auto steps_per_sample =
      static_cast<std::size_t>(std::ceil(sample_dt / stepper.dt * (1.0 - 1e-12)));
  const double h = sample_dt / static_cast<double>(std::max<std::size_t>(steps_per_sample, 1));
  const auto& g = initial.grid();

  std::vector<cplx> symbol(g.num_points);
  for (std::size_t i = 0; i < g.num_points; ++i) symbol[i] = linear_symbol(model, g.wavenumber(i));
  ExponentialStepper integrator(symbol, h, stepper.scheme);

  Trajectory traj;
  traj.model = model;
  traj.grid = g;
  traj.sample_dt = sample_dt;
  traj.first_wrap_time = first_wrap_time(initial, model);
  traj.initial_tail_mass = tail_mass_fraction(initial);
  traj.times.push_back(0.0);
  traj.snapshots.push_back(initial);

  const double cap = options.max_growth * std::max(initial.max_abs(), 1e-300);
  const bool real = initial.is_real();
  auto u = initial.spectrum();
  u[g.nyquist_slot()] = 0.0;
  double t_valid = 0.0;
  for (std::size_t s = 1; s <= samples; ++s) {
    const double t0 = static_cast<double>(s - 1) * sample_dt;
    for (std::size_t k = 0; k < steps_per_sample; ++k) {
      integrator.step(u, t0 + static_cast<double>(k) * h, rhs);
      if (real) enforce_hermitian(u);
      if (!all_finite(u))
        throw BlowUpError("evolve: non-finite state after t = " + std::to_string(t_valid), t_valid);
    }
    const double t = static_cast<double>(s) * sample_dt;
    Field snap = Field::from_spectrum(g, u, real);
    if (snap.max_abs() > cap)
      throw BlowUpError("evolve: max|u| exceeded growth cap at t = " + std::to_string(t), t_valid);
    t_valid = t;
    traj.times.push_back(t);
    traj.snapshots.push_back(std::move(snap));
  }
  return traj;
}

}  // namespace detail

// Integrates the model from `initial` to t_final, sampling every sample_dt.
// The dispersive part is propagated exactly; the nonlinear part is 4th order.
inline Trajectory evolve(const Field& initial, const ModelSpec& model, const StepperConfig& stepper,
                         double t_final, double sample_dt, const EvolveOptions& options = {}) {
  model.validate();
  detail::require_realness(initial, model);
  const double freq = nonlinear_frequency_estimate(initial, model);
  if (!(stepper.substep_safety > 0.0)) throw ConfigurationError("evolve: substep_safety must be positive");
  if (stepper.dt * freq > stepper.substep_safety)
    throw ConfigurationError("evolve: dt * nonlinear frequency = " + std::to_string(stepper.dt * freq) +
                             " exceeds substep_safety " + std::to_string(stepper.substep_safety) +
                             "; reduce dt below " + std::to_string(stepper.substep_safety / freq));
  if (options.tail_mass_limit) {
    const double tail = tail_mass_fraction(initial);
    if (tail > *options.tail_mass_limit)
      throw ResolutionError("evolve: initial tail mass " + std::to_string(tail) + " exceeds limit");
  }
  NonlinearTerm term(model, initial.grid());
  SpectralRhs rhs = [&term](std::span<const cplx> u, double, std::span<cplx> out) { term(u, out); };
  return detail::integrate_samples(initial, model, stepper, t_final, sample_dt, rhs, options);
}

// Source term for the forced Airy equation, evaluated at arbitrary times.
using Forcing = std::function<Field(double)>;

// Solves e_t + e_xxx = forcing(t) with e(0) = 0. The source enters the
// integrator stages at their own times.
inline Trajectory evolve_forced_airy(const Forcing& forcing, const GridSpec& grid,
                                     const StepperConfig& stepper, double t_final,
                                     double sample_dt) {
  grid.validate();
  const ModelSpec airy = ModelSpec::airy();
  // Stage times repeat (t + h/2 twice, t + h then t of the next step), so the
  // last two transformed sources are cached.
  struct Entry {
    double t;
    std::vector<cplx> spec;
  };
  std::vector<Entry> cache;
  SpectralRhs rhs = [&](std::span<const cplx>, double t, std::span<cplx> out) {
    for (const auto& e : cache)
      if (std::abs(e.t - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
        std::copy(e.spec.begin(), e.spec.end(), out.begin());
        return;
      }
    const Field f = forcing(t);
    if (!(f.grid() == grid)) throw DomainError("evolve_forced_airy: forcing grid mismatch");
    auto spec = f.spectrum();
    spec[grid.nyquist_slot()] = 0.0;
    std::copy(spec.begin(), spec.end(), out.begin());
    if (cache.size() == 2) cache.erase(cache.begin());
    cache.push_back({t, std::move(spec)});
  };
  EvolveOptions options;
  options.max_growth = std::numeric_limits<double>::infinity();
  return detail::integrate_samples(Field::zeros(grid, true), airy, stepper, t_final, sample_dt, rhs,
                                   options);
}

// ---------------------------------------------------------------------------
// Scaling symmetry u -> lambda^{-2/(p-1)} u(t/lambda^3, x/lambda)

// Exact transform onto the dilated grid (L -> lambda L, times -> lambda^3 t).
inline Trajectory apply_scaling_symmetry(const Trajectory& traj, double lambda) {
  if (traj.model.family != Family::gkdv)
    throw ModelError("apply_scaling_symmetry: requires a gKdV trajectory");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("apply_scaling_symmetry: lambda must be positive");
  GridSpec g = traj.grid;
  g.domain_length *= lambda;
  g.origin *= lambda;
  if (!std::isfinite(g.domain_length) || !(g.spacing() > 0.0))
    throw ResolutionError("apply_scaling_symmetry: rescaled grid is not representable");
  const double amp = std::pow(lambda, -2.0 / (traj.model.p - 1.0));
  const double tscale = lambda * lambda * lambda;

  Trajectory out;
  out.model = traj.model;
  out.grid = g;
  out.sample_dt = traj.sample_dt * tscale;
  out.first_wrap_time = traj.first_wrap_time * tscale;
  out.initial_tail_mass = traj.initial_tail_mass;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::vector<cplx> v(traj.snapshots[i].values().begin(), traj.snapshots[i].values().end());
    for (auto& x : v) x *= amp;
    out.times.push_back(traj.times[i] * tscale);
    out.snapshots.emplace_back(g, std::move(v), true);
  }
  return out;
}

// Transform resampled onto a fixed target grid. Fails when the rescaled data
// is not resolved there (spectral content above 2/3 Nyquist, or mass reaching
// the outer half of the target domain).
inline Trajectory apply_scaling_symmetry(const Trajectory& traj, double lambda,
                                         const GridSpec& target) {
  target.validate();
  Trajectory scaled = apply_scaling_symmetry(traj, lambda);
  Trajectory out = scaled;
  out.grid = target;
  out.snapshots.clear();
  for (const auto& snap : scaled.snapshots) {
    if (significant_bandwidth(snap, 1e-12) > (2.0 / 3.0) * target.nyquist_wavenumber())
      throw ResolutionError("apply_scaling_symmetry: rescaled bandwidth exceeds target resolution");
    if (snap.grid().domain_length > target.domain_length + 1e-12) {
      // Content must fit inside the target window around its centre.
      const Chart chart = mass_chart(snap);
      const auto& sg = snap.grid();
      double outside = 0.0, total = 0.0;
      for (std::size_t i = 0; i < snap.size(); ++i) {
        const double w = std::norm(snap[i]);
        total += w;
        if (std::abs(chart.wrap(sg.coordinate(i)) - chart.centre) > 0.5 * target.domain_length)
          outside += w;
      }
      if (total > 0.0 && outside / total > 1e-20)
        throw ResolutionError("apply_scaling_symmetry: rescaled support exceeds target domain");
    }
    Field r = resample(snap, target);
    if (target.domain_length > snap.grid().domain_length) {
      // The periodic interpolant repeats the data; keep one period around
      // the mass centre.
      const Chart src = mass_chart(snap);
      const Chart tgt{src.centre, target.domain_length};
      std::vector<cplx> v(r.values().begin(), r.values().end());
      for (std::size_t i = 0; i < v.size(); ++i)
        if (std::abs(tgt.wrap(target.coordinate(i)) - src.centre) >= 0.5 * src.length) v[i] = 0.0;
      r = Field(target, std::move(v), true);
    }
    out.snapshots.push_back(std::move(r));
  }
  return out;
}

}  // namespace gkdv
