#pragma once

#include "gkdv/errors.hpp"
#include "gkdv/grid.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace gkdv {

enum class Family { gkdv, nls, airy, free_schrodinger };

// Sign convention for the Schrodinger families. `printed` evolves
// -i u_t + u_xx = mu |u|^{p-1} u; `conventional` evolves i u_t + u_xx = mu |u|^{p-1} u.
enum class NlsSign { printed, conventional };

struct ModelSpec {
  Family family = Family::gkdv;
  double p = 5.0;
  double mu = 1.0;
  NlsSign nls_sign = NlsSign::printed;

  static ModelSpec gkdv(double p, double mu) { return {Family::gkdv, p, mu, NlsSign::printed}; }
  static ModelSpec nls(double p, double mu, NlsSign sign = NlsSign::printed) {
    return {Family::nls, p, mu, sign};
  }
  static ModelSpec airy() { return {Family::airy, 5.0, 0.0, NlsSign::printed}; }
  static ModelSpec free_schrodinger(NlsSign sign = NlsSign::printed) {
    return {Family::free_schrodinger, 5.0, 0.0, sign};
  }

  bool real_valued() const { return family == Family::gkdv || family == Family::airy; }
  bool linear() const {
    return family == Family::airy || family == Family::free_schrodinger || mu == 0.0;
  }
  // +1 for the printed Schrodinger sign, -1 for the conventional one.
  double schrodinger_sign() const { return nls_sign == NlsSign::printed ? 1.0 : -1.0; }

  void validate() const {
    if (!(p > 1.0) || !std::isfinite(p))
      throw ModelError("model: p must exceed 1, got " + std::to_string(p));
    if (mu != -1.0 && mu != 0.0 && mu != 1.0)
      throw ModelError("model: mu must be -1, 0 or +1, got " + std::to_string(mu));
    if ((family == Family::airy || family == Family::free_schrodinger) && mu != 0.0)
      throw ModelError("model: linear families require mu = 0");
  }

  bool operator==(const ModelSpec&) const = default;
};

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::gkdv: return "gkdv";
    case Family::nls: return "nls";
    case Family::airy: return "airy";
    case Family::free_schrodinger: return "free_schrodinger";
  }
  return "?";
}

inline Family family_from_string(std::string_view s) {
  if (s == "gkdv") return Family::gkdv;
  if (s == "nls") return Family::nls;
  if (s == "airy") return Family::airy;
  if (s == "free_schrodinger") return Family::free_schrodinger;
  throw ValidationError("unknown model family '" + std::string(s) + "'");
}

// Diagonal linear symbol L(k) so that u_hat_t = L(k) u_hat + N(u)_hat.
//   gKdV / Airy:   u_t = -u_xxx                 -> L = i k^3
//   printed NLS:   u_t = -i u_xx + i mu g(u)    -> L = i k^2
//   conventional:  u_t =  i u_xx - i mu g(u)    -> L = -i k^2
inline cplx linear_symbol(const ModelSpec& m, double k) {
  if (m.real_valued()) return cplx(0.0, k * k * k);
  return cplx(0.0, m.schrodinger_sign() * k * k);
}

// Time-ordered samples of one run on a fixed grid.
struct Trajectory {
  ModelSpec model;
  GridSpec grid;
  double sample_dt = 0.0;
  std::vector<double> times;
  std::vector<Field> snapshots;
  // Estimated time at which the fastest significant radiation reaches the
  // periodic seam (+inf when the data has no dispersive content).
  double first_wrap_time = std::numeric_limits<double>::infinity();
  double initial_tail_mass = 0.0;

  std::size_t size() const { return snapshots.size(); }
  double t_final() const { return times.empty() ? 0.0 : times.back(); }

  void validate() const {
    if (times.size() != snapshots.size()) throw DomainError("trajectory: times/snapshots mismatch");
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
      if (!(snapshots[i].grid() == grid)) throw DomainError("trajectory: snapshot grid mismatch");
      if (i > 0) {
        const double expect = times[0] + static_cast<double>(i) * sample_dt;
        if (!(times[i] > times[i - 1]) ||
            std::abs(times[i] - expect) > 1e-12 * std::max(1.0, std::abs(expect)))
          throw DomainError("trajectory: times must be uniformly spaced by sample_dt");
      }
    }
  }
};

}  // namespace gkdv
