#pragma once

#include "gkdv/errors.hpp"
#include "gkdv/fft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gkdv {

inline constexpr double pi = std::numbers::pi;

// Uniform periodic grid: samples at origin + i*dx, i in [0, num_points).
struct GridSpec {
  std::size_t num_points = 0;
  double domain_length = 0.0;
  double origin = 0.0;

  double spacing() const { return domain_length / static_cast<double>(num_points); }
  double coordinate(std::size_t i) const { return origin + static_cast<double>(i) * spacing(); }
  double centre() const { return origin + 0.5 * domain_length; }

  // Signed mode number stored in FFT slot i; the Nyquist slot maps to -n/2.
  std::ptrdiff_t mode_index(std::size_t i) const {
    const auto n = static_cast<std::ptrdiff_t>(num_points);
    const auto k = static_cast<std::ptrdiff_t>(i);
    return k < n / 2 ? k : k - n;
  }
  double wavenumber(std::size_t i) const {
    return 2.0 * pi * static_cast<double>(mode_index(i)) / domain_length;
  }
  double nyquist_wavenumber() const {
    return pi * static_cast<double>(num_points) / domain_length;
  }
  std::size_t nyquist_slot() const { return num_points / 2; }

  void validate() const {
    if (num_points < 8 || !std::has_single_bit(num_points))
      throw DomainError("grid: num_points must be a power of two >= 8, got " +
                        std::to_string(num_points));
    if (!(domain_length > 0.0) || !std::isfinite(domain_length))
      throw DomainError("grid: domain_length must be positive and finite");
    if (!std::isfinite(origin)) throw DomainError("grid: origin must be finite");
  }

  bool operator==(const GridSpec&) const = default;
};

// A sampled function on a periodic grid. Real fields keep exactly zero
// imaginary parts; the constructor enforces it.
class Field {
 public:
  Field() = default;

  Field(GridSpec grid, std::vector<cplx> values, bool is_real)
      : grid_(grid), values_(std::move(values)), is_real_(is_real) {
    grid_.validate();
    if (values_.size() != grid_.num_points)
      throw DomainError("field: expected " + std::to_string(grid_.num_points) + " samples, got " +
                        std::to_string(values_.size()));
    if (is_real_)
      for (auto& v : values_) v = cplx(v.real(), 0.0);
  }

  static Field zeros(const GridSpec& grid, bool is_real) {
    return Field(grid, std::vector<cplx>(grid.num_points), is_real);
  }

  static Field from_real(const GridSpec& grid, std::span<const double> values) {
    return Field(grid, std::vector<cplx>(values.begin(), values.end()), true);
  }

  // Samples f(x) at every grid coordinate. A double-valued f yields a real field.
  template <class F>
  static Field sample(const GridSpec& grid, F&& f) {
    std::vector<cplx> values(grid.num_points);
    using R = decltype(f(0.0));
    for (std::size_t i = 0; i < grid.num_points; ++i) values[i] = cplx(f(grid.coordinate(i)));
    return Field(grid, std::move(values), !std::is_same_v<std::decay_t<R>, cplx>);
  }

  // Builds a field from unnormalised DFT coefficients.
  static Field from_spectrum(const GridSpec& grid, std::span<const cplx> spectrum, bool is_real) {
    return Field(grid, fft_inverse_normalized(spectrum), is_real);
  }

  const GridSpec& grid() const { return grid_; }
  std::span<const cplx> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool is_real() const { return is_real_; }
  const cplx& operator[](std::size_t i) const { return values_[i]; }

  std::vector<cplx> spectrum() const { return fft_forward(values_); }

  std::vector<double> real_values() const {
    std::vector<double> out(values_.size());
    std::transform(values_.begin(), values_.end(), out.begin(), [](cplx v) { return v.real(); });
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  GridSpec grid_{};
  std::vector<cplx> values_;
  bool is_real_ = true;
};

// ---------------------------------------------------------------------------
// Spectral operators

// Multiplies every mode by symbol(k_phys) and zeroes the Nyquist slot.
template <class Symbol>
Field apply_multiplier(const Field& f, Symbol&& symbol) {
  const auto& g = f.grid();
  auto spec = f.spectrum();
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= symbol(g.wavenumber(i));
  spec[g.nyquist_slot()] = 0.0;
  return Field::from_spectrum(g, spec, f.is_real());
}

inline cplx derivative_symbol(double k, int order) {
  cplx s(1.0, 0.0);
  for (int i = 0; i < order; ++i) s *= cplx(0.0, k);
  return s;
}

// Spectral derivative d^order/dx^order, order in [0, 6].
inline Field derivative(const Field& f, int order) {
  if (order < 0) throw DomainError("derivative: order must be non-negative");
  if (order > 6) throw UnsupportedError("derivative: order " + std::to_string(order) +
                                        " > 6 is not supported");
  if (order == 0) return f;
  return apply_multiplier(f, [order](double k) { return derivative_symbol(k, order); });
}

// |d/dx|^alpha: mode k multiplied by |k|^alpha. alpha = 0 returns f unchanged.
inline Field fractional_derivative(const Field& f, double alpha) {
  if (!(alpha >= 0.0)) throw DomainError("fractional_derivative: alpha must be >= 0");
  if (alpha == 0.0) return f;
  return apply_multiplier(f, [alpha](double k) { return cplx(std::pow(std::abs(k), alpha)); });
}

// Shift by `shift` length units: result(x) = f(x - shift).
inline Field translate(const Field& f, double shift) {
  return apply_multiplier(f, [shift](double k) { return std::exp(cplx(0.0, -k * shift)); });
}

// Rectangle rule, which coincides with the trapezoid rule on the torus.
inline cplx integrate(const Field& f) {
  cplx sum = 0.0;
  for (const auto& v : f.values()) sum += v;
  return sum * f.grid().spacing();
}

inline double l2_norm(const Field& f) {
  double s = 0.0;
  for (const auto& v : f.values()) s += std::norm(v);
  return std::sqrt(s * f.grid().spacing());
}

// L2 norm evaluated from the spectrum (Parseval on the torus).
inline double l2_norm_spectral(std::span<const cplx> spectrum, const GridSpec& grid) {
  double s = 0.0;
  for (const auto& c : spectrum) s += std::norm(c);
  const double n = static_cast<double>(grid.num_points);
  return std::sqrt(s * grid.domain_length / (n * n));
}

// Pointwise combination of two fields on the same grid.
template <class Op>
Field combine(const Field& a, const Field& b, Op&& op) {
  if (!(a.grid() == b.grid())) throw DomainError("combine: grid mismatch");
  std::vector<cplx> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(a[i], b[i]);
  return Field(a.grid(), std::move(out), a.is_real() && b.is_real());
}

template <class Op>
Field map_values(const Field& a, Op&& op) {
  std::vector<cplx> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(a[i]);
  return Field(a.grid(), std::move(out), a.is_real());
}

inline Field operator+(const Field& a, const Field& b) {
  return combine(a, b, [](cplx x, cplx y) { return x + y; });
}
inline Field operator-(const Field& a, const Field& b) {
  return combine(a, b, [](cplx x, cplx y) { return x - y; });
}
inline Field operator*(double s, const Field& a) {
  return map_values(a, [s](cplx x) { return s * x; });
}

// ---------------------------------------------------------------------------
// Dealiased power nonlinearity

// True when |u|^{p-1}u is a polynomial in (u, conj u), i.e. p is an odd integer.
inline bool is_polynomial_power(double p) {
  const double r = std::round(p);
  return r == p && static_cast<long long>(r) % 2 == 1;
}

// Oversampling factor for the padded grid: exact (p+1)/2 rule for polynomial
// powers, a fixed factor of 4 otherwise.
inline std::size_t dealias_factor(double p) {
  if (is_polynomial_power(p)) return static_cast<std::size_t>(std::ceil((p + 1.0) / 2.0));
  return 4;
}

namespace detail {

inline double signed_power(double u, double p, long long ip) {
  if (ip > 0) {
    double r = u;
    for (long long i = 1; i < ip; ++i) r *= u;
    return r;
  }
  return std::copysign(std::pow(std::abs(u), p), u);
}

inline cplx modulus_power(cplx u, double p, long long ip) {
  const double m2 = std::norm(u);
  if (ip > 0) {
    // |u|^{p-1} = (|u|^2)^{(p-1)/2}, (p-1)/2 integral for odd ip
    double w = 1.0;
    for (long long i = 0; i < (ip - 1) / 2; ++i) w *= m2;
    return w * u;
  }
  return std::pow(std::sqrt(m2), p - 1.0) * u;
}

}  // namespace detail

// Evaluates the spectrum of g(u) = |u|^{p-1}u (sign(u)|u|^p for real u) from
// the spectrum of u on a zero-padded grid, then truncates back. Reusable
// workspace for time stepping.
class PowerEvaluator {
 public:
  PowerEvaluator(std::size_t n, double p, bool real)
      : n_(n), p_(p), real_(real), factor_(dealias_factor(p)), padded_(n * factor_) {
    if (!(p > 1.0)) throw DomainError("nonlinear_power: p must exceed 1");
    ip_ = is_polynomial_power(p) ? static_cast<long long>(std::round(p)) : 0;
    if (real_) {
      half_.resize(padded_ / 2 + 1);
      rbuf_.resize(padded_);
    } else {
      cbuf_.resize(padded_);
    }
  }

  std::size_t factor() const { return factor_; }

  // uhat, ghat: length-n unnormalised spectra. uhat must be Hermitian when real.
  void apply(std::span<const cplx> uhat, std::span<cplx> ghat) {
    const std::size_t h = n_ / 2;
    const double in_scale = 1.0 / static_cast<double>(n_);
    const double out_scale = 1.0 / static_cast<double>(factor_);
    if (real_) {
      std::fill(half_.begin(), half_.end(), cplx(0.0));
      for (std::size_t k = 0; k < h; ++k) half_[k] = uhat[k] * in_scale;
      rfft_inverse(half_, rbuf_, scratch_);
      for (auto& v : rbuf_) v = detail::signed_power(v, p_, ip_);
      rfft_forward(rbuf_, half_);
      for (std::size_t k = 0; k < h; ++k) ghat[k] = half_[k] * out_scale;
      ghat[h] = 0.0;
      for (std::size_t k = 1; k < h; ++k) ghat[n_ - k] = std::conj(ghat[k]);
    } else {
      std::fill(cbuf_.begin(), cbuf_.end(), cplx(0.0));
      for (std::size_t k = 0; k < h; ++k) cbuf_[k] = uhat[k] * in_scale;
      for (std::size_t k = 1; k < h; ++k) cbuf_[padded_ - k] = uhat[n_ - k] * in_scale;
      fft_inverse(cbuf_, cbuf_);
      for (auto& v : cbuf_) v = detail::modulus_power(v, p_, ip_);
      fft_forward(cbuf_, cbuf_);
      for (std::size_t k = 0; k < h; ++k) ghat[k] = cbuf_[k] * out_scale;
      for (std::size_t k = 1; k < h; ++k) ghat[n_ - k] = cbuf_[padded_ - k] * out_scale;
      ghat[h] = 0.0;
    }
    if (ip_ == 0) {
      // 2/3 rule for non-polynomial powers: keep |mode| <= n/3.
      const std::size_t keep = n_ / 3;
      for (std::size_t k = keep + 1; k < n_ - keep; ++k) ghat[k] = 0.0;
    }
  }

 private:
  std::size_t n_;
  double p_;
  bool real_;
  std::size_t factor_;
  std::size_t padded_;
  long long ip_ = 0;
  std::vector<cplx> half_, cbuf_, scratch_;
  std::vector<double> rbuf_;
};

// Pointwise sign(u)|u|^p (real) or |u|^{p-1}u (complex), dealiased.
inline Field nonlinear_power(const Field& f, double p) {
  if (!(p > 1.0)) throw DomainError("nonlinear_power: p must exceed 1, got " + std::to_string(p));
  PowerEvaluator eval(f.size(), p, f.is_real());
  const auto uhat = f.spectrum();
  std::vector<cplx> ghat(f.size());
  eval.apply(uhat, ghat);
  return Field::from_spectrum(f.grid(), ghat, f.is_real());
}

// ---------------------------------------------------------------------------
// Band-limited evaluation

// Evaluates the trigonometric interpolant of f at y_j = y0 + j*dy,
// j in [0, count), using Bluestein's chirp-z identity (exact band-limited
// evaluation, O((n + count) log(n + count))). The Nyquist mode is omitted.
inline std::vector<cplx> evaluate_band_limited(const Field& f, double y0, double dy,
                                               std::size_t count) {
  const auto& g = f.grid();
  const std::size_t n = g.num_points;
  if (count == 0) return {};
  const long double beta = static_cast<long double>(dy) / static_cast<long double>(g.domain_length);
  // e^{i pi beta t^2}, with the argument reduced modulo 2 in extended precision
  auto chirp = [beta](long long t) {
    const long double x = beta * static_cast<long double>(t) * static_cast<long double>(t);
    const long double r = std::fmod(x, 2.0L);
    const double ang = static_cast<double>(pi * static_cast<long double>(r));
    return cplx(std::cos(ang), std::sin(ang));
  };

  const auto spec = f.spectrum();
  const long long half = static_cast<long long>(n / 2);
  std::size_t size = std::bit_ceil(n + count);

  std::vector<cplx> a(size), b(size);
  const double shift = y0 - g.origin;
  for (long long kk = -half + 1; kk < half; ++kk) {
    const std::size_t slot = static_cast<std::size_t>(kk < 0 ? kk + static_cast<long long>(n) : kk);
    const double k = 2.0 * pi * static_cast<double>(kk) / g.domain_length;
    const cplx c = spec[slot] / static_cast<double>(n) * std::exp(cplx(0.0, k * shift));
    a[static_cast<std::size_t>(kk + half)] = c * chirp(kk);
  }
  // b[t] = e^{-i pi beta t^2} for t in [-half, count + half), stored circularly
  for (long long t = -half; t < static_cast<long long>(count) + half; ++t) {
    const std::size_t slot = static_cast<std::size_t>((t % static_cast<long long>(size) +
                                                       static_cast<long long>(size)) %
                                                      static_cast<long long>(size));
    b[slot] = std::conj(chirp(t));
  }
  fft_forward(a, a);
  fft_forward(b, b);
  for (std::size_t i = 0; i < size; ++i) a[i] *= b[i];
  fft_inverse(a, a);
  const double inv = 1.0 / static_cast<double>(size);

  std::vector<cplx> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    const long long jj = static_cast<long long>(j);
    out[j] = chirp(jj) * a[static_cast<std::size_t>(jj + half)] * inv;
  }
  if (f.is_real())
    for (auto& v : out) v = cplx(v.real(), 0.0);
  return out;
}

// Band-limited resampling of f onto another grid (periodic interpolant of f).
inline Field resample(const Field& f, const GridSpec& target) {
  target.validate();
  auto values = evaluate_band_limited(f, target.origin, target.spacing(), target.num_points);
  return Field(target, std::move(values), f.is_real());
}

}  // namespace gkdv
