#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "mixlab/errors.hpp"
#include "mixlab/gibbs_markov.hpp"
#include "mixlab/parallel.hpp"
#include "mixlab/quadrature.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/roof.hpp"
#include "mixlab/stats.hpp"

namespace mixlab {

struct SuspensionPoint {
  double y = 0.0;
  double u = 0.0;
};

/// Audit of the per-branch Lipschitz control |phi(y)-phi(y')| <=
/// C1 inf_branch(phi) d_theta(y,y') on sampled pairs.
struct EqInfReport {
  double c1 = 1.0;             // global constant, floored at 1
  double worst_ratio = 0.0;    // largest sampled ratio
  double sup_over_inf = 1.0;   // largest branch sup/inf
  bool sup_bound_holds = true; // sup <= 2 C1 inf on sampled branches
  std::size_t pairs = 0;
};

inline EqInfReport eq_inf_audit(const GibbsMarkovMap& map, const RoofFunction& roof,
                                std::size_t pairs_per_branch, Rng rng, double slack = 1e-9) {
  EqInfReport rep;
  const std::size_t jmax = std::min<std::size_t>(map.branch_count(), 64);
  for (std::size_t j = 0; j < jmax; ++j) {
    const Branch& b = map.branch(j);
    const double inf_b = roof.branch_inf(static_cast<int>(j));
    const double sup_b = roof.branch_sup(static_cast<int>(j));
    rep.sup_over_inf = std::max(rep.sup_over_inf, sup_b / inf_b);
    if (roof.constant_per_branch()) continue;
    for (std::size_t p = 0; p < pairs_per_branch; ++p) {
      const double y = b.lo + rng.uniform() * (b.hi - b.lo);
      const double yp = b.lo + rng.uniform() * (b.hi - b.lo);
      if (std::abs(y - yp) < 1e-12 * (b.hi - b.lo)) continue;
      double dth;
      try {
        dth = map.d_theta(y, yp);
      } catch (const Error&) {
        continue; // orbit hit a partition endpoint; skip the pair
      }
      const double num = std::abs(roof.value_in_branch(static_cast<int>(j), y) -
                                  roof.value_in_branch(static_cast<int>(j), yp));
      rep.worst_ratio = std::max(rep.worst_ratio, num / (dth * inf_b));
      ++rep.pairs;
    }
  }
  rep.c1 = std::max(1.0, rep.worst_ratio * (1.0 + slack));
  rep.sup_bound_holds = rep.sup_over_inf <= 2.0 * rep.c1 + slack;
  return rep;
}

/// Suspension semiflow over (map, roof): unit-speed motion in u with
/// re-injection through F at height phi.  Immutable and shareable.
class SuspensionFlow {
public:
  SuspensionFlow(std::shared_ptr<const GibbsMarkovMap> map, RoofFunction roof,
                 std::size_t audit_pairs = 64, std::uint64_t audit_seed = 12345)
      : map_(std::move(map)), roof_(std::move(roof)) {
    require(&roof_.map() == map_.get(), errc::precondition, "roof is bound to a different map");
    const Grid& g = map_->grid();
    cell_phi_mid_.resize(g.size());
    cell_phi_bound_.resize(g.size());
    std::vector<double> mu_w(g.size()), mu_phi_w(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      // cells never straddle branches, so the branch is constant per cell
      const int j = map_->branch_index(g.mid(i));
      const double pl = roof_.value_in_branch(j, g.edges()[i] + 1e-12 * g.width(i));
      const double pm = roof_.value_in_branch(j, g.mid(i));
      const double ph = roof_.value_in_branch(j, g.edges()[i + 1] - 1e-12 * g.width(i));
      cell_phi_mid_[i] = pm;
      const double local_slope = (std::abs(ph - pl) / g.width(i)) * 2.0 + 1e-12;
      cell_phi_bound_[i] = std::max({pl, pm, ph}) * (1.0 + 1e-12) + local_slope * g.width(i);
      mu_w[i] = map_->cell_mu()[i];
      mu_phi_w[i] = map_->cell_mu()[i] * cell_phi_bound_[i];
    }
    mu_alias_ = AliasTable(mu_w);
    mu_phi_alias_ = AliasTable(mu_phi_w);
    phi_l1_ = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) phi_l1_ += map_->cell_mu()[i] * cell_phi_mid_[i];
    eq_inf_ = eq_inf_audit(*map_, roof_, audit_pairs, Rng(audit_seed, 0));
  }

  const GibbsMarkovMap& map() const { return *map_; }
  std::shared_ptr<const GibbsMarkovMap> map_ptr() const { return map_; }
  const RoofFunction& roof() const { return roof_; }
  const EqInfReport& eq_inf() const { return eq_inf_; }

  /// Deterministic quadrature value of |phi|_1 = int phi dmu.
  double phi_l1() const { return phi_l1_; }

  /// Monte Carlo |phi|_1 with standard error (batch means over 32 shards).
  MeanCi phi_l1_mc(std::size_t n, std::uint64_t seed) const {
    std::vector<double> batch(32, 0.0);
    const std::size_t per = n / 32;
    for (std::size_t b = 0; b < 32; ++b) {
      Rng rng(seed, b);
      double acc = 0.0;
      for (std::size_t i = 0; i < per; ++i) acc += roof_.value(sample_mu(rng));
      batch[b] = acc / static_cast<double>(per);
    }
    return mean_ci(batch);
  }

  /// One draw from the base invariant measure mu (histogram + alias).
  double sample_mu(Rng& rng) const {
    const std::size_t cell = mu_alias_.draw(rng);
    const Grid& g = map_->grid();
    return g.edges()[cell] + rng.uniform() * g.width(cell);
  }

  /// One draw from mu^phi: y weighted by phi d(mu)/|phi|_1 via alias +
  /// in-cell rejection, u uniform on [0, phi(y)).
  SuspensionPoint sample_point(Rng& rng) const {
    const Grid& g = map_->grid();
    for (int tries = 0; tries < 100000; ++tries) {
      const std::size_t cell = mu_phi_alias_.draw(rng);
      const double y = g.edges()[cell] + rng.uniform() * g.width(cell);
      const double phi = roof_.value(y);
      if (rng.uniform() * cell_phi_bound_[cell] <= phi)
        return {y, rng.uniform() * phi};
    }
    fail(errc::no_convergence, "sample_point: rejection loop exhausted");
  }

  std::vector<SuspensionPoint> sample_invariant(std::size_t n, std::uint64_t seed) const {
    std::vector<SuspensionPoint> pts(n);
    Rng rng(seed, 0);
    for (auto& p : pts) p = sample_point(rng);
    return pts;
  }

  /// Flow by t >= 0, reducing through the identification (y, phi(y)) ~ (Fy, 0).
  /// Returns the flowed point and the number of identifications applied.
  std::pair<SuspensionPoint, long> flow_count(SuspensionPoint p, double t) const {
    require(t >= 0.0, errc::precondition, "flow time must be nonnegative");
    double y = p.y;
    double u = p.u + t;
    long ids = 0;
    int j = map_->branch_index(y);
    double phi = roof_.value_in_branch(j, y);
    while (u >= phi) {
      u -= phi;
      y = map_->branch(static_cast<std::size_t>(j)).forward(y);
      j = map_->branch_index(y);
      phi = roof_.value_in_branch(j, y);
      if (++ids >= 10000000L) fail(errc::no_convergence, "flow: identification cap reached");
    }
    return {{y, u}, ids};
  }

  SuspensionPoint flow(SuspensionPoint p, double t) const { return flow_count(p, t).first; }

private:
  std::shared_ptr<const GibbsMarkovMap> map_;
  RoofFunction roof_;
  std::vector<double> cell_phi_mid_;
  std::vector<double> cell_phi_bound_;
  AliasTable mu_alias_;
  AliasTable mu_phi_alias_;
  double phi_l1_ = 1.0;
  EqInfReport eq_inf_;
};

inline SuspensionFlow make_suspension(std::shared_ptr<const GibbsMarkovMap> map, RoofFunction roof,
                                      double eq_inf_slack = 1e6) {
  SuspensionFlow flow(std::move(map), std::move(roof));
  require(flow.eq_inf().c1 <= eq_inf_slack, errc::eq_inf_violated,
          "roof Lipschitz audit exceeded the configured slack");
  return flow;
}

/// Observable on Y^phi with optional separable structure v(y,u) = g(y) c(u)
/// and flow derivatives of the u-part when available.
struct Observable {
  enum class Class { f_theta, f_theta_eta, l_inf_m };

  std::function<double(double, double)> eval;
  Class tag = Class::f_theta;
  // separable fast path (null when not separable)
  std::function<double(double)> y_part;
  std::function<double(double)> u_part;
  std::function<double(double)> u_part_d1;
  std::function<double(double)> u_part_d2;
  double u_support_hi = 1e300; // eval vanishes for u > this

  double operator()(double y, double u) const { return eval(y, u); }
  double operator()(const SuspensionPoint& p) const { return eval(p.y, p.u); }
  bool separable() const { return static_cast<bool>(y_part) && static_cast<bool>(u_part); }

  static Observable product(std::function<double(double)> g, std::function<double(double)> c,
                            Class tag = Class::f_theta_eta) {
    Observable o;
    o.y_part = g;
    o.u_part = c;
    o.tag = tag;
    o.eval = [g = std::move(g), c = std::move(c)](double y, double u) { return g(y) * c(u); };
    return o;
  }
};

/// C^3 bump on [0, L]: sin^4(pi u / L), with closed-form flow derivatives.
struct BumpU {
  double length = 1.0;
  double operator()(double u) const {
    if (u <= 0.0 || u >= length) return 0.0;
    const double s = std::sin(M_PI * u / length);
    return s * s * s * s;
  }
  // sin^4 x = (3 - 4 cos 2x + cos 4x) / 8
  double d1(double u) const {
    if (u <= 0.0 || u >= length) return 0.0;
    const double w = M_PI / length;
    return (8.0 * std::sin(2.0 * w * u) - 4.0 * std::sin(4.0 * w * u)) * w / 8.0;
  }
  double d2(double u) const {
    if (u <= 0.0 || u >= length) return 0.0;
    const double w = M_PI / length;
    return (16.0 * std::cos(2.0 * w * u) - 16.0 * std::cos(4.0 * w * u)) * w * w / 8.0;
  }
};

inline Observable bump_observable(std::function<double(double)> y_part, double u_len,
                                  Observable::Class tag = Observable::Class::f_theta_eta) {
  BumpU bump{u_len};
  Observable o = Observable::product(std::move(y_part), [bump](double u) { return bump(u); }, tag);
  o.u_part_d1 = [bump](double u) { return bump.d1(u); };
  o.u_part_d2 = [bump](double u) { return bump.d2(u); };
  o.u_support_hi = u_len;
  return o;
}

/// Exact-quadrature mean of v over mu^phi:
/// int v dmu^phi = |phi|_1^{-1} int_Y int_0^{phi} v(y,u) du dmu(y).
inline double mean_on_suspension(const SuspensionFlow& flow, const Observable& v) {
  const GibbsMarkovMap& map = flow.map();
  double acc = 0.0;
  for (std::size_t i = 0; i < map.grid().size(); ++i) {
    const double y = map.grid().mid(i);
    const double phi = flow.roof().value(y);
    const double hi = std::min(phi, v.u_support_hi);
    acc += map.cell_mu()[i] * integrate_gl([&](double u) { return v.eval(y, u); }, 0.0, hi);
  }
  return acc / flow.phi_l1();
}

inline Observable centered(const SuspensionFlow& flow, Observable v) {
  const double m = mean_on_suspension(flow, v);
  auto base = v.eval;
  v.eval = [base, m](double y, double u) { return base(y, u) - m; };
  v.y_part = nullptr; // no longer separable
  v.u_part = nullptr;
  v.u_support_hi = 1e300;
  return v;
}

/// Measured seminorm data for an observable (sampled-pair upper bounds).
struct ObservableSeminorms {
  double sup = 0.0;
  double theta = 0.0;    // phi-weighted symbolic-Lipschitz seminorm
  double inf_eta = 0.0;  // Hoelder-in-u seminorm (eta = 1 by default)
  double flow_d1 = 0.0;  // bound on the flow derivative (finite differences)
};

inline ObservableSeminorms measure_observable(const SuspensionFlow& flow, const Observable& v,
                                              std::size_t n_pairs, Rng rng, double eta = 1.0) {
  ObservableSeminorms s;
  const GibbsMarkovMap& map = flow.map();
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const SuspensionPoint p = flow.sample_point(rng);
    s.sup = std::max(s.sup, std::abs(v(p)));
    // theta seminorm (same u, distinct y in the same cylinder depth)
    const double yp = p.y + (rng.uniform() - 0.5) * 0.05 * (map.y_hi() - map.y_lo());
    if (yp > map.y_lo() && yp < map.y_hi()) {
      try {
        const double phi_p = flow.roof().value(p.y);
        const double phi_q = flow.roof().value(yp);
        const double u = std::min({p.u, phi_p * 0.999, phi_q * 0.999});
        const double dth = map.d_theta(p.y, yp);
        s.theta = std::max(s.theta, std::abs(v.eval(p.y, u) - v.eval(yp, u)) / (phi_p * dth));
      } catch (const Error&) {
      }
    }
    // u-Hoelder seminorm along the fibre
    const double phi_y = flow.roof().value(p.y);
    const double up = rng.uniform() * phi_y;
    if (std::abs(up - p.u) > 1e-12)
      s.inf_eta = std::max(s.inf_eta, std::abs(v.eval(p.y, up) - v.eval(p.y, p.u)) /
                                          std::pow(std::abs(up - p.u), eta));
    // flow derivative by one-sided difference
    const double h = 1e-6;
    if (p.u + h < phi_y)
      s.flow_d1 = std::max(s.flow_d1, std::abs(v.eval(p.y, p.u + h) - v.eval(p.y, p.u)) / h);
  }
  return s;
}

/// Empirical tail mu(phi > t) with Wilson intervals and a log-log slope fit.
struct RoofTailReport {
  std::vector<double> t;
  std::vector<double> p_hat;
  std::vector<double> lo, hi; // one-sigma Wilson band
  double fitted_exponent = 0.0;
  double fitted_exponent_stderr = 0.0;
};

inline double fit_tail_exponent(const std::vector<double>& t, const std::vector<double>& p,
                                const std::vector<double>& se, double* slope_se = nullptr) {
  std::vector<double> lx, ly, w;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (p[i] > 0.0 && t[i] > 0.0) {
      lx.push_back(std::log(t[i]));
      ly.push_back(std::log(p[i]));
      const double rel = se[i] > 0.0 ? se[i] / p[i] : 1e-3;
      w.push_back(1.0 / (rel * rel + 1e-12));
    }
  }
  require(lx.size() >= 3, errc::precondition, "tail fit: too few positive tail points");
  const LineFit f = wls_line(lx, ly, w);
  if (slope_se) *slope_se = f.slope_stderr;
  return -f.slope;
}

inline RoofTailReport roof_tail(const SuspensionFlow& flow, const std::vector<double>& t_grid,
                                std::size_t n_samples, std::uint64_t seed) {
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    require(t_grid[i] > t_grid[i - 1] && t_grid[0] > 0.0, errc::precondition,
            "roof_tail: t grid must be positive increasing");
  RoofTailReport rep;
  rep.t = t_grid;
  std::vector<std::size_t> hits(t_grid.size(), 0);
  Rng rng(seed, 1);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double phi = flow.roof().value(flow.sample_mu(rng));
    for (std::size_t k = 0; k < t_grid.size(); ++k)
      if (phi > t_grid[k]) ++hits[k];
  }
  std::vector<double> se;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const WilsonCi w = wilson_ci(hits[k], n_samples);
    rep.p_hat.push_back(w.p_hat);
    rep.lo.push_back(w.lo);
    rep.hi.push_back(w.hi);
    se.push_back(0.5 * (w.hi - w.lo));
  }
  // fit over the window with nondegenerate counts
  std::vector<double> ft, fp, fse;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (hits[k] >= 16 && rep.p_hat[k] < 0.9) {
      ft.push_back(t_grid[k]);
      fp.push_back(rep.p_hat[k]);
      fse.push_back(se[k]);
    }
  }
  if (ft.size() >= 3)
    rep.fitted_exponent = fit_tail_exponent(ft, fp, fse, &rep.fitted_exponent_stderr);
  return rep;
}

} // namespace mixlab
