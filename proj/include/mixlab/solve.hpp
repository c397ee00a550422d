#pragma once

#include <cmath>
#include <functional>

#include "mixlab/errors.hpp"

namespace mixlab {

/// Solve f(x) = target for increasing f on [lo, hi] by Newton iteration
/// safeguarded with bisection.  Tolerance is on x.
template <class F, class DF>
double solve_increasing(F&& f, DF&& df, double lo, double hi, double target, double tol = 1e-13,
                        int max_iter = 200) {
  double flo = f(lo) - target;
  double fhi = f(hi) - target;
  if (flo > 0.0 && flo < 1e-14) flo = 0.0;
  if (fhi < 0.0 && fhi > -1e-14) fhi = 0.0;
  require(flo <= 0.0 && fhi >= 0.0, errc::solver_diverged, "solve_increasing: target not bracketed");
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    const double fx = f(x) - target;
    if (fx > 0.0)
      hi = x;
    else
      lo = x;
    const double d = df(x);
    double step = d > 0.0 ? fx / d : 0.0;
    double xn = x - step;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi); // fall back to bisection
    if (std::abs(xn - x) <= tol * (1.0 + std::abs(x))) return xn;
    x = xn;
  }
  if (hi - lo <= 64.0 * tol * (1.0 + std::abs(x))) return x;
  fail(errc::solver_diverged, "solve_increasing: no convergence");
}

} // namespace mixlab
