#pragma once

#include "gkdv/grid.hpp"

#include <cmath>

namespace gkdv {

// A coordinate chart on the torus: every point is represented by its image in
// [centre - L/2, centre + L/2).
struct Chart {
  double centre = 0.0;
  double length = 1.0;

  double wrap(double x) const {
    const double lo = centre - 0.5 * length;
    double y = std::fmod(x - lo, length);
    if (y < 0.0) y += length;
    return lo + y;
  }
};

// Chart centred at the circular mean of the density |f|^2.
inline Chart mass_chart(const Field& f) {
  const auto& g = f.grid();
  const double L = g.domain_length;
  double c = 0.0, s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double w = std::norm(f[i]);
    const double th = 2.0 * pi * (g.coordinate(i) - g.origin) / L;
    c += w * std::cos(th);
    s += w * std::sin(th);
  }
  if (c == 0.0 && s == 0.0) return {g.centre(), L};
  double th = std::atan2(s, c);
  if (th < 0.0) th += 2.0 * pi;
  return {g.origin + th * L / (2.0 * pi), L};
}

// Fraction of the mass lying outside the central half of the chart.
inline double tail_mass_fraction(const Field& f, const Chart& chart) {
  const auto& g = f.grid();
  double total = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double w = std::norm(f[i]);
    total += w;
    if (std::abs(chart.wrap(g.coordinate(i)) - chart.centre) > 0.25 * chart.length) tail += w;
  }
  return total > 0.0 ? tail / total : 0.0;
}

inline double tail_mass_fraction(const Field& f) { return tail_mass_fraction(f, mass_chart(f)); }

}  // namespace gkdv
