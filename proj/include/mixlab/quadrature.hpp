#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace mixlab {

/// Gauss-Legendre nodes/weights on [-1, 1], computed once per order by
/// Newton iteration on the Legendre recurrence.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(std::size_t n) : nodes(n), weights(n) {
    for (std::size_t i = 0; i < n; ++i) {
      double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * static_cast<double>(k) + 1.0) * x * p1 - static_cast<double>(k) * p2) /
               (static_cast<double>(k) + 1.0);
        }
        pp = static_cast<double>(n) * (x * p0 - p1) / (x * x - 1.0);
        const double dx = p0 / pp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
  }

  static const GaussLegendre& order64() {
    static const GaussLegendre g(64);
    return g;
  }
};

/// Integrate f over [a, b] with 64-node Gauss-Legendre panels of length at
/// most `panel_len` (panelized so long integration ranges stay accurate).
template <class F>
auto integrate_gl(F&& f, double a, double b, double panel_len = 4.0) {
  using R = decltype(f(0.5 * (a + b)));
  R total{};
  if (!(b > a)) return total;
  const auto& gl = GaussLegendre::order64();
  const std::size_t panels =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / panel_len)));
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + (b - a) * static_cast<double>(p) / static_cast<double>(panels);
    const double hi = a + (b - a) * static_cast<double>(p + 1) / static_cast<double>(panels);
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i)
      total += (half * gl.weights[i]) * f(mid + half * gl.nodes[i]);
  }
  return total;
}

} // namespace mixlab
