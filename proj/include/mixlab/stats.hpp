#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mixlab/errors.hpp"

namespace mixlab {

struct MeanCi {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
  double lo(double z = 3.0) const { return mean - z * stderr_; }
  double hi(double z = 3.0) const { return mean + z * stderr_; }
};

inline MeanCi mean_ci(const std::vector<double>& xs) {
  MeanCi out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stderr_ = std::sqrt(ss / (static_cast<double>(xs.size() - 1) * static_cast<double>(xs.size())));
  }
  return out;
}

/// Wilson score interval for a binomial proportion, z=1 sigma by default.
struct WilsonCi {
  double p_hat = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

inline WilsonCi wilson_ci(std::size_t hits, std::size_t n, double z = 1.0) {
  WilsonCi w;
  if (n == 0) return w;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = p + z2 / (2.0 * nn);
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  w.p_hat = p;
  w.lo = std::max(0.0, (centre - half) / denom);
  w.hi = std::min(1.0, (centre + half) / denom);
  return w;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  double chi2 = 0.0;
  std::size_t n = 0;
};

/// Weighted least squares y = a + b x; weights are 1/sigma_i^2.
inline LineFit wls_line(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& w) {
  require(x.size() == y.size() && x.size() == w.size(), errc::precondition, "wls_line: size mismatch");
  require(x.size() >= 2, errc::precondition, "wls_line: need at least two points");
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
    swxx += w[i] * x[i] * x[i];
    swxy += w[i] * x[i] * y[i];
  }
  const double det = sw * swxx - swx * swx;
  require(det > 0, errc::precondition, "wls_line: degenerate abscissae");
  LineFit f;
  f.n = x.size();
  f.slope = (sw * swxy - swx * swy) / det;
  f.intercept = (swxx * swy - swx * swxy) / det;
  f.slope_stderr = std::sqrt(sw / det);
  f.intercept_stderr = std::sqrt(swxx / det);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.chi2 += w[i] * r * r;
  }
  return f;
}

inline LineFit ols_line(const std::vector<double>& x, const std::vector<double>& y) {
  return wls_line(x, y, std::vector<double>(x.size(), 1.0));
}

/// Geometric-rate fit of a positive decaying sequence a_n ~ C r^n over the
/// entries above `floor`; returns (C, r) with r from the log-linear slope.
struct GeomFit {
  double amplitude = 0.0;
  double rate = 0.0;
  std::size_t used = 0;
};

inline GeomFit fit_geometric(const std::vector<double>& a, double floor_value = 0.0) {
  std::vector<double> n, loga;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > floor_value && std::isfinite(a[i])) {
      n.push_back(static_cast<double>(i));
      loga.push_back(std::log(a[i]));
    }
  }
  GeomFit g;
  g.used = n.size();
  if (n.size() < 2) return g;
  const LineFit f = ols_line(n, loga);
  g.amplitude = std::exp(f.intercept);
  g.rate = std::exp(f.slope);
  return g;
}

inline double phi_normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

/// Anderson-Darling A^2 against N(mean, sd); the caller standardizes.
/// Returns the statistic with the usual small-sample scaling for estimated
/// parameters; compare against ~1.092 for rejection at the 1% level.
inline double anderson_darling(std::vector<double> xs) {
  const std::size_t n = xs.size();
  require(n >= 8, errc::precondition, "anderson_darling: need at least 8 samples");
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(n);
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= static_cast<double>(n - 1);
  const double sd = std::sqrt(std::max(v, 1e-300));
  std::sort(xs.begin(), xs.end());
  double a2 = -static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double zi = (xs[i] - m) / sd;
    const double zn = (xs[n - 1 - i] - m) / sd;
    double ci = phi_normal_cdf(zi);
    double cn = phi_normal_cdf(zn);
    ci = std::min(std::max(ci, 1e-300), 1.0 - 1e-16);
    cn = std::min(std::max(cn, 1e-300), 1.0 - 1e-16);
    a2 -= (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n) *
          (std::log(ci) + std::log1p(-cn));
  }
  const double nn = static_cast<double>(n);
  return a2 * (1.0 + 0.75 / nn + 2.25 / (nn * nn));
}

} // namespace mixlab
