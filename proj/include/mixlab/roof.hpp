#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "mixlab/errors.hpp"
#include "mixlab/gibbs_markov.hpp"

namespace mixlab {

/// Analytic tail model mu(phi > t) ~ min(1, c t^-beta).
struct TailModel {
  double c = 1.0;
  double beta = 2.0;
  double eval(double t) const { return t <= 0.0 ? 1.0 : std::min(1.0, c * std::pow(t, -beta)); }
};

/// Positive roof over a Gibbs-Markov map, evaluated per branch.
class RoofFunction {
public:
  RoofFunction() = default;
  RoofFunction(std::shared_ptr<const GibbsMarkovMap> map,
               std::function<double(int, double)> eval_branch, bool constant_per_branch)
      : map_(std::move(map)), eval_branch_(std::move(eval_branch)),
        constant_per_branch_(constant_per_branch) {
    measure_bounds();
  }

  const GibbsMarkovMap& map() const { return *map_; }
  std::shared_ptr<const GibbsMarkovMap> map_ptr() const { return map_; }

  double value_in_branch(int j, double y) const { return eval_branch_(j, y); }
  double value(double y) const { return eval_branch_(map_->branch_index(y), y); }

  double inf_phi() const { return inf_phi_; }
  double sup_phi() const { return sup_phi_; }
  bool constant_per_branch() const { return constant_per_branch_; }
  bool bounded() const { return sup_phi_ < 1e200; }

  const std::optional<TailModel>& tail() const { return tail_; }
  void set_tail(TailModel t) { tail_ = t; }

  std::optional<double> truncation() const { return truncation_; }

  /// phi ^ N = min(phi, N); equals the base wherever phi <= N.
  RoofFunction truncated(double cap) const {
    require(cap > 0.0, errc::precondition, "truncation level must be positive");
    auto base = eval_branch_;
    RoofFunction t(map_, [base, cap](int j, double y) { return std::min(base(j, y), cap); },
                   constant_per_branch_);
    t.truncation_ = cap;
    t.sup_phi_ = std::min(t.sup_phi_, cap);
    if (tail_) t.tail_ = tail_; // tail of the base is kept for error-bound forms
    return t;
  }

  /// Per-branch infimum over sample points (exact for per-branch constants).
  double branch_inf(int j) const {
    const Branch& b = map_->branch(static_cast<std::size_t>(j));
    if (constant_per_branch_) return eval_branch_(j, 0.5 * (b.lo + b.hi));
    double lo = 1e300;
    for (double t : {0.01, 0.25, 0.5, 0.75, 0.99})
      lo = std::min(lo, eval_branch_(j, b.lo + t * (b.hi - b.lo)));
    return lo;
  }

  double branch_sup(int j) const {
    const Branch& b = map_->branch(static_cast<std::size_t>(j));
    if (constant_per_branch_) return eval_branch_(j, 0.5 * (b.lo + b.hi));
    double hi = 0.0;
    for (double t : {0.01, 0.25, 0.5, 0.75, 0.99})
      hi = std::max(hi, eval_branch_(j, b.lo + t * (b.hi - b.lo)));
    return hi;
  }

private:
  void measure_bounds() {
    inf_phi_ = 1e300;
    sup_phi_ = 0.0;
    for (std::size_t j = 0; j < map_->branch_count(); ++j) {
      const double lo = branch_inf(static_cast<int>(j));
      const double hi = branch_sup(static_cast<int>(j));
      inf_phi_ = std::min(inf_phi_, lo);
      sup_phi_ = std::max(sup_phi_, hi);
    }
    require(inf_phi_ > 0.0, errc::roof_not_bounded_below, "roof is not bounded below by a positive constant");
  }

  std::shared_ptr<const GibbsMarkovMap> map_;
  std::function<double(int, double)> eval_branch_;
  bool constant_per_branch_ = false;
  double inf_phi_ = 0.0;
  double sup_phi_ = 0.0;
  std::optional<TailModel> tail_;
  std::optional<double> truncation_;
};

inline RoofFunction constant_roof(std::shared_ptr<const GibbsMarkovMap> map, double c) {
  return RoofFunction(std::move(map), [c](int, double) { return c; }, true);
}

/// phi = tau: the return-time roof of an induced first-return map.
inline RoofFunction return_time_roof(const LsvFirstReturn& fr) {
  auto map = fr.map;
  auto taus = fr.return_times;
  RoofFunction roof(map,
                    [taus](int j, double) { return static_cast<double>(taus[static_cast<std::size_t>(j)]); },
                    true);
  if (fr.fitted_tail_exponent > 1.0 && fr.tail.size() >= 8) {
    // calibrate c from the mid-tail: mu(tau > n) ~ c n^-beta
    const std::size_t n0 = fr.tail.size() / 2;
    const double beta = fr.fitted_tail_exponent;
    TailModel tm{fr.tail[n0 - 1] * std::pow(static_cast<double>(n0), beta), beta};
    roof.set_tail(tm);
  }
  return roof;
}

/// Induced roof phi(y) = sum_{l < tau(y)} h(f^l y) along the ambient orbit.
/// `h` must be positive on the ambient space.
inline RoofFunction induced_roof(const LsvFirstReturn& fr, std::function<double(double)> h_ambient) {
  auto map = fr.map;
  auto taus = fr.return_times;
  const LsvAmbient amb = fr.ambient;
  auto eval = [map, taus, amb, h = std::move(h_ambient)](int j, double y) {
    const int tau = taus[static_cast<std::size_t>(j)];
    double x = y;
    double phi = 0.0;
    for (int l = 0; l < tau; ++l) {
      require(x >= 0.0 && x <= 1.0, errc::ambient_orbit_escapes, "ambient orbit left [0,1]");
      require(l == 0 || x < 0.5 + 1e-12, errc::ambient_orbit_escapes,
              "ambient orbit re-entered Y before the tabulated return time");
      phi += h(x);
      x = amb.step(x);
    }
    return phi;
  };
  RoofFunction roof(map, eval, false);
  if (fr.fitted_tail_exponent > 1.0 && fr.tail.size() >= 8) {
    const std::size_t n0 = fr.tail.size() / 2;
    const double beta = fr.fitted_tail_exponent;
    // phi ~ h(0) tau deep in the tail, so mu(phi > t) ~ c0 (t / h(0))^-beta.
    const double h0 = 1.0; // calibrated empirically by roof_tail when needed
    TailModel tm{fr.tail[n0 - 1] * std::pow(static_cast<double>(n0) * h0, beta), beta};
    roof.set_tail(tm);
  }
  return roof;
}

/// phi = c + psi o F - psi, cohomologous to the constant roof c.
inline RoofFunction cohomologous_roof(std::shared_ptr<const GibbsMarkovMap> map, double c,
                                      std::function<double(double)> psi) {
  auto m = map.get();
  auto eval = [m, c, psi = std::move(psi)](int j, double y) {
    return c + psi(m->branch(static_cast<std::size_t>(j)).forward(y)) - psi(y);
  };
  return RoofFunction(std::move(map), eval, false);
}

} // namespace mixlab
