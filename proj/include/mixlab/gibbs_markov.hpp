#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mixlab/errors.hpp"
#include "mixlab/grid.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/solve.hpp"
#include "mixlab/stats.hpp"

namespace mixlab {

/// One full branch of the map: a monotone increasing bijection from
/// [lo, hi) onto Y.
struct Branch {
  int id = 0;
  double lo = 0.0;
  double hi = 0.0;
  int return_time = 1; // tau when the map is an induced first-return map
  std::function<double(double)> forward;
  std::function<double(double)> inverse;
  std::function<double(double)> derivative;
  // Preimages under this branch of a sorted vector of points of Y; optional
  // bulk path used by the transfer assembly, falls back to `inverse`.
  std::function<std::vector<double>(const std::vector<double>&)> pull_points;
};

struct CylinderWord {
  std::vector<int> symbols;
};

/// Provenance of a constructed map, kept for the text export format.
struct MapSpec {
  std::string kind;   // "doubling" | "lsv"
  double gamma = 0.0; // lsv only
  int branch_cutoff = 0;
  std::size_t grid_cells = 0;
};

constexpr int kSeparationInfinite = -1;

namespace detail {
// Elementary piece of the transfer geometry: under one branch, a source
// interval of Lebesgue length src_len (midpoint src_mid) inside source cell
// `col` maps onto a piece of target cell `row`.
struct TransferPiece {
  int row;
  int col;
  double src_len;
  double src_mid;
};
} // namespace detail

/// Full-branch Gibbs-Markov interval map with normalized potential weights
/// e^{p} derived from the invariant density.  Immutable after construction;
/// safe for concurrent reads.
class GibbsMarkovMap {
public:
  GibbsMarkovMap(double y_lo, double y_hi, std::vector<Branch> branches, std::size_t grid_cells,
                 MapSpec spec = {}, double boundary_tol = 1e-13)
      : y_lo_(y_lo), y_hi_(y_hi), branches_(std::move(branches)), spec_(spec),
        boundary_tol_(boundary_tol * (y_hi - y_lo)) {
    require(!branches_.empty(), errc::precondition, "map needs at least one branch");
    branch_lo_.reserve(branches_.size());
    for (std::size_t j = 0; j < branches_.size(); ++j) {
      require(branches_[j].id == static_cast<int>(j), errc::precondition, "branch ids must be 0..J-1");
      const double expected_lo = j == 0 ? y_lo_ : branches_[j - 1].hi;
      require(std::abs(branches_[j].lo - expected_lo) < 1e-12 * (y_hi_ - y_lo_), errc::precondition,
              "branch domains must tile Y in order");
      branch_lo_.push_back(branches_[j].lo);
    }
    require(std::abs(branches_.back().hi - y_hi_) < 1e-12 * (y_hi_ - y_lo_), errc::cutoff_too_small,
            "retained branches do not cover Y");

    std::vector<double> breaks = branch_lo_;
    breaks.push_back(y_hi_);
    grid_ = Grid::aligned(breaks, grid_cells);
    build_pieces();
    build_measure();
    measure_expansion();
  }

  double y_lo() const { return y_lo_; }
  double y_hi() const { return y_hi_; }
  std::size_t branch_count() const { return branches_.size(); }
  const Branch& branch(std::size_t j) const { return branches_[j]; }
  const std::vector<Branch>& branches() const { return branches_; }
  const Grid& grid() const { return grid_; }
  const MapSpec& spec() const { return spec_; }
  double theta() const { return theta_; }
  double lambda_min() const { return lambda_min_; }
  /// Largest deviation of a pre-normalization transfer row sum from 1;
  /// bounds the weight of the discarded branch tail.
  double neglected_mass() const { return neglected_mass_; }

  /// Invariant density h (unit integral against Lebesgue) at cell midpoints.
  const GridFunction& invariant_density() const { return density_; }
  /// Invariant measure of each grid cell; sums to 1.
  const std::vector<double>& cell_mu() const { return cell_mu_; }

  double mu_of_interval(double a, double b) const {
    if (b <= a) return 0.0;
    a = std::max(a, y_lo_);
    b = std::min(b, y_hi_);
    const auto& e = grid_.edges();
    double total = 0.0;
    const std::size_t ia = grid_.locate(a), ib = grid_.locate(b);
    for (std::size_t i = ia; i <= ib; ++i) {
      const double lo = std::max(a, e[i]);
      const double hi = std::min(b, e[i + 1]);
      if (hi > lo) total += cell_mu_[i] * (hi - lo) / grid_.width(i);
    }
    return total;
  }

  template <class F>
  double mu_mean(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) s += cell_mu_[i] * f(grid_.mid(i));
    return s;
  }

  /// Branch containing y.  Throws PointOnBoundary when y is within the
  /// boundary tolerance of an interior partition endpoint; otherwise the
  /// half-open convention [lo, hi) applies.
  int branch_index(double y) const {
    require(y >= y_lo_ - boundary_tol_ && y <= y_hi_ + boundary_tol_, errc::out_of_domain,
            "point outside Y");
    auto it = std::upper_bound(branch_lo_.begin(), branch_lo_.end(), y);
    std::size_t j = static_cast<std::size_t>(it - branch_lo_.begin());
    j = j == 0 ? 0 : j - 1;
    if (j + 1 < branch_lo_.size() && std::abs(y - branch_lo_[j + 1]) <= boundary_tol_)
      fail(errc::point_on_boundary, "point on a partition endpoint");
    if (j > 0 && std::abs(y - branch_lo_[j]) <= boundary_tol_)
      fail(errc::point_on_boundary, "point on a partition endpoint");
    return static_cast<int>(j);
  }

  double apply(double y) const {
    return branches_[static_cast<std::size_t>(branch_index(y))].forward(y);
  }

  double inverse_branch(int branch_id, double y) const {
    require(branch_id >= 0 && branch_id < static_cast<int>(branches_.size()), errc::no_such_branch,
            "no such branch");
    require(y >= y_lo_ - boundary_tol_ && y <= y_hi_ + boundary_tol_, errc::out_of_domain,
            "point outside Y");
    return branches_[static_cast<std::size_t>(branch_id)].inverse(y);
  }

  /// Normalized branch weight e^{p} of branch j at y (cell-averaged grid
  /// representation; weights sum to one across branches at every point).
  double branch_weight(std::size_t j, double y) const { return weight_grids_[j].eval(y); }

  std::vector<double> branch_weights(double y) const {
    std::vector<double> w(branches_.size());
    for (std::size_t j = 0; j < branches_.size(); ++j) w[j] = weight_grids_[j].eval(y);
    return w;
  }

  /// First n <= n_max with the two orbits in distinct branches, or
  /// kSeparationInfinite if they stay together through n_max.
  int separation_time(double y, double yp, int n_max) const {
    for (int n = 0; n <= n_max; ++n) {
      const int j = branch_index(y);
      const int jp = branch_index(yp);
      if (j != jp) return n;
      y = branches_[static_cast<std::size_t>(j)].forward(y);
      yp = branches_[static_cast<std::size_t>(jp)].forward(yp);
    }
    return kSeparationInfinite;
  }

  double d_theta(double y, double yp, int n_max = 64) const {
    const int s = separation_time(y, yp, n_max);
    return s == kSeparationInfinite ? std::pow(theta_, n_max) : std::pow(theta_, s);
  }

  /// Pointwise transfer sum (R v)(y) = sum_j e^{p}(x_j) g(x_j) v(x_j) with an
  /// optional per-preimage weight g (the twist hook).
  template <class V, class G>
  auto transfer_point(double y, V&& v, G&& g) const {
    using R = decltype(g(0.0) * v(0.0));
    R acc{};
    for (std::size_t j = 0; j < branches_.size(); ++j) {
      const double x = branches_[j].inverse(y);
      acc += weight_grids_[j].eval(y) * g(x) * v(x);
    }
    return acc;
  }

  template <class V>
  auto transfer_point(double y, V&& v) const {
    return transfer_point(y, std::forward<V>(v), [](double) { return 1.0; });
  }

  GridFunction transfer_apply(const GridFunction& v) const {
    require(v.grid().same_geometry(grid_), errc::grid_mismatch, "transfer_apply: foreign grid");
    return GridFunction::sample(grid_,
                                [&](double y) { return transfer_point(y, [&](double x) { return v.eval(x); }); });
  }

  /// Transfer geometry pieces of one branch (consumed by the Ulam assembly).
  const std::vector<detail::TransferPiece>& pieces(std::size_t branch) const { return pieces_[branch]; }

  /// Cell matrix of the untwisted transfer operator; rows sum to exactly 1.
  /// rows()[i] holds (col, mass) pairs.
  const std::vector<std::vector<std::pair<int, double>>>& markov_rows() const { return markov_rows_; }

  std::string to_spec_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "mixlab-map v1\n";
    os << "kind " << spec_.kind << "\n";
    os << "gamma " << spec_.gamma << "\n";
    os << "branch_cutoff " << spec_.branch_cutoff << "\n";
    os << "grid_cells " << spec_.grid_cells << "\n";
    os << "endpoints " << branch_lo_.size() + 1 << "\n";
    for (double x : branch_lo_) os << x << "\n";
    os << y_hi_ << "\n";
    return os.str();
  }

  const std::vector<double>& branch_endpoints() const { return branch_lo_; }

private:
  void build_pieces() {
    const auto& e = grid_.edges();
    pieces_.resize(branches_.size());
    for (std::size_t j = 0; j < branches_.size(); ++j) {
      const Branch& br = branches_[j];
      std::vector<double> src;
      if (br.pull_points) {
        src = br.pull_points(e);
      } else {
        src.resize(e.size());
        for (std::size_t i = 0; i < e.size(); ++i) src[i] = br.inverse(e[i]);
      }
      require(src.size() == e.size(), errc::precondition, "pull_points size mismatch");
      src.front() = br.lo;
      src.back() = br.hi;

      auto& out = pieces_[j];
      out.reserve(e.size() + 8);
      std::size_t col = grid_.locate(0.5 * (src[0] + src[1]));
      for (std::size_t i = 0; i + 1 < src.size(); ++i) {
        double a = src[i];
        const double b = src[i + 1];
        while (a < b) {
          while (col + 1 < grid_.size() && e[col + 1] <= a) ++col;
          const double piece_hi = std::min(b, e[col + 1]);
          if (piece_hi > a)
            out.push_back({static_cast<int>(i), static_cast<int>(col), piece_hi - a, 0.5 * (a + piece_hi)});
          a = piece_hi;
          if (a >= b) break;
          if (col + 1 < grid_.size()) ++col;
        }
      }
      // Alignment guard: branch endpoints must coincide with cell edges.
      const auto is_edge = [&](double x) {
        auto it = std::lower_bound(e.begin(), e.end(), x - 1e-12);
        return it != e.end() && std::abs(*it - x) < 1e-11;
      };
      require(is_edge(br.lo) && is_edge(br.hi), errc::cell_straddles_branch,
              "grid cell straddles a branch endpoint");
    }
  }

  void build_measure() {
    const std::size_t n = grid_.size();
    // Invariant density by power iteration of the Lebesgue cell matrix:
    // Lebesgue mass m_col * (src_len / |col|) flows into `row`.
    std::vector<double> m(n), next(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = grid_.width(i) / (grid_.hi() - grid_.lo());
    for (int it = 0; it < 4000; ++it) {
      std::fill(next.begin(), next.end(), 0.0);
      for (const auto& branch_pieces : pieces_)
        for (const auto& p : branch_pieces)
          next[static_cast<std::size_t>(p.row)] +=
              m[static_cast<std::size_t>(p.col)] * p.src_len / grid_.width(static_cast<std::size_t>(p.col));
      double total = 0.0;
      for (double x : next) total += x;
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        next[i] /= total;
        diff = std::max(diff, std::abs(next[i] - m[i]));
      }
      m.swap(next);
      if (diff < 1e-15) break;
    }
    {
      std::vector<double> h(n);
      for (std::size_t i = 0; i < n; ++i) h[i] = m[i] / grid_.width(i);
      double integral = 0.0;
      for (std::size_t i = 0; i < n; ++i) integral += h[i] * grid_.width(i);
      for (double& x : h) x /= integral;
      density_ = GridFunction(&grid_, std::move(h));
    }

    // mu-weighted transfer rows: mass ~ src_len * h(src_mid) / (h_row |row|),
    // then rows normalized exactly so that R 1 = 1 on the discretization.
    markov_rows_.assign(n, {});
    std::vector<std::vector<double>> wgrids(branches_.size(), std::vector<double>(n, 0.0));
    std::vector<double> row_sum(n, 0.0);
    for (std::size_t j = 0; j < branches_.size(); ++j)
      for (const auto& p : pieces_[j]) {
        const auto row = static_cast<std::size_t>(p.row);
        const double mass =
            p.src_len * density_.eval(p.src_mid) / (density_[row] * grid_.width(row));
        markov_rows_[row].push_back({p.col, mass});
        wgrids[j][row] += mass;
        row_sum[row] += mass;
      }
    neglected_mass_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      neglected_mass_ = std::max(neglected_mass_, std::abs(1.0 - row_sum[i]));
      for (auto& entry : markov_rows_[i]) entry.second /= row_sum[i];
      for (std::size_t j = 0; j < branches_.size(); ++j) wgrids[j][i] /= row_sum[i];
    }
    weight_grids_.clear();
    weight_grids_.reserve(branches_.size());
    for (std::size_t j = 0; j < branches_.size(); ++j)
      weight_grids_.emplace_back(&grid_, std::move(wgrids[j]));

    // Stationary cell measure: left fixed vector of the normalized rows.
    cell_mu_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) cell_mu_[i] = density_[i] * grid_.width(i);
    std::vector<double> nxt(n);
    for (int it = 0; it < 4000; ++it) {
      std::fill(nxt.begin(), nxt.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (const auto& entry : markov_rows_[i])
          nxt[static_cast<std::size_t>(entry.first)] += cell_mu_[i] * entry.second;
      double total = 0.0;
      for (double x : nxt) total += x;
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nxt[i] /= total;
        diff = std::max(diff, std::abs(nxt[i] - cell_mu_[i]));
      }
      cell_mu_.swap(nxt);
      if (diff < 1e-16) break;
    }
    // Keep the reported density consistent with the stationary cell measure.
    for (std::size_t i = 0; i < n; ++i) density_[i] = cell_mu_[i] / grid_.width(i);
  }

  void measure_expansion() {
    lambda_min_ = 1e300;
    for (const auto& br : branches_) {
      for (double t : {0.02, 0.25, 0.5, 0.75, 0.98}) {
        const double x = br.lo + t * (br.hi - br.lo);
        lambda_min_ = std::min(lambda_min_, br.derivative(x));
      }
    }
    require(lambda_min_ > 1.0, errc::precondition, "map is not uniformly expanding on samples");
    theta_ = 1.0 / lambda_min_;
  }

  double y_lo_, y_hi_;
  std::vector<Branch> branches_;
  MapSpec spec_;
  double boundary_tol_;
  std::vector<double> branch_lo_;
  Grid grid_;
  GridFunction density_;
  std::vector<double> cell_mu_;
  std::vector<GridFunction> weight_grids_;
  std::vector<std::vector<detail::TransferPiece>> pieces_;
  std::vector<std::vector<std::pair<int, double>>> markov_rows_;
  double neglected_mass_ = 0.0;
  double lambda_min_ = 0.0;
  double theta_ = 0.5;
};

/// Angle-doubling map on [0,1] with two affine branches.
inline std::shared_ptr<GibbsMarkovMap> make_doubling_map(std::size_t grid_cells = 1024) {
  std::vector<Branch> branches(2);
  for (int j : {0, 1}) {
    Branch& b = branches[static_cast<std::size_t>(j)];
    b.id = j;
    b.lo = j == 0 ? 0.0 : 0.5;
    b.hi = j == 0 ? 0.5 : 1.0;
    b.forward = [j](double y) { return 2.0 * y - j; };
    b.inverse = [j](double y) { return 0.5 * (y + j); };
    b.derivative = [](double) { return 2.0; };
  }
  MapSpec spec;
  spec.kind = "doubling";
  spec.branch_cutoff = 2;
  spec.grid_cells = grid_cells;
  return std::make_shared<GibbsMarkovMap>(0.0, 1.0, std::move(branches), grid_cells, spec);
}

/// The intermittent interval map x(1+(2x)^gamma) on [0,1/2), 2x-1 on [1/2,1].
struct LsvAmbient {
  double gamma = 0.5;
  double step(double x) const { return x < 0.5 ? left(x) : 2.0 * x - 1.0; }
  double left(double x) const { return x * (1.0 + std::pow(2.0 * x, gamma)); }
  double left_derivative(double x) const { return 1.0 + (1.0 + gamma) * std::pow(2.0 * x, gamma); }
};

struct LsvFirstReturn {
  std::shared_ptr<GibbsMarkovMap> map;
  std::vector<int> return_times;      // tau per branch id (spatial order)
  std::vector<double> endpoint_chain; // x_0 = 1/2 > x_1 > ... (left-branch preimages)
  std::vector<double> tail;           // mu(tau > n), n = 1..J-1
  double fitted_tail_exponent = 0.0;  // log-log slope of the tail, ~ beta = 1/gamma
  double absorbed_mass = 0.0;         // mu of the tail slab folded into the deepest branch
  LsvAmbient ambient{0.5};
};

/// First-return map of the intermittent map to Y = [1/2, 1].  The branch
/// with return time tau = k+1 lives on [ (1+x_{k})/2, (1+x_{k-1})/2 );
/// the slab of return times > J (Lebesgue width x_{J-1}/2, mass O(J^-beta))
/// is absorbed into the deepest branch by an affine dilation of its domain,
/// and its size is reported as absorbed_mass.
inline LsvFirstReturn make_lsv_first_return(double gamma, int J, std::size_t grid_cells = 1024,
                                            double required_mass = 0.95) {
  require(gamma > 0.0 && gamma < 1.0, errc::precondition, "lsv: gamma must lie in (0,1)");
  require(J >= 3, errc::precondition, "lsv: need at least 3 branches");
  LsvFirstReturn out;
  out.ambient = LsvAmbient{gamma};
  const LsvAmbient amb = out.ambient;

  auto& xs = out.endpoint_chain;
  xs.resize(static_cast<std::size_t>(J) + 1);
  xs[0] = 0.5;
  for (int n = 1; n <= J; ++n) {
    const double target = xs[static_cast<std::size_t>(n - 1)];
    xs[static_cast<std::size_t>(n)] =
        solve_increasing([&](double x) { return amb.left(x); },
                         [&](double x) { return amb.left_derivative(x); }, 0.0, target, target, 1e-15);
    require(xs[static_cast<std::size_t>(n)] < target, errc::solver_diverged, "lsv: chain not decreasing");
  }
  require(xs[static_cast<std::size_t>(J - 1)] <= 1.0 - required_mass, errc::cutoff_too_small,
          "lsv: branch cutoff covers too little of Y");

  // Shared pullback cache: level m holds f0^{-m} of the one standard point
  // set handed in by the transfer assembly (the grid edges of Y).
  struct PullCache {
    LsvAmbient amb;
    std::vector<double> xs;
    std::vector<std::vector<double>> levels;
    const std::vector<double>& level(const std::vector<double>& points, std::size_t m) {
      if (levels.empty()) levels.push_back(points);
      require(points.size() == levels[0].size() && points.front() == levels[0].front() &&
                  points.back() == levels[0].back(),
              errc::precondition, "lsv pull cache: inconsistent point set");
      while (levels.size() <= m) {
        const auto& prev = levels.back();
        const std::size_t lv = levels.size();
        const double lo = xs[lv];
        const double hi = xs[lv - 1];
        std::vector<double> nxt(prev.size());
        for (std::size_t i = 0; i < prev.size(); ++i)
          nxt[i] = solve_increasing([&](double x) { return amb.left(x); },
                                    [&](double x) { return amb.left_derivative(x); }, lo, hi, prev[i],
                                    1e-15);
        levels.push_back(std::move(nxt));
      }
      return levels[m];
    }
  };
  auto cache = std::make_shared<PullCache>();
  cache->amb = amb;
  cache->xs = xs; // {1/2, x_1, ..., x_J}; level-m solves bracket in [x_m, x_{m-1}]

  // Branches in spatial order: id 0 is the deepest (leftmost) branch.
  std::vector<Branch> branches(static_cast<std::size_t>(J));
  out.return_times.resize(static_cast<std::size_t>(J));
  for (int id = 0; id < J; ++id) {
    const int k = J - 1 - id; // number of left-branch applications; tau = k+1
    Branch& b = branches[static_cast<std::size_t>(id)];
    b.id = id;
    b.return_time = k + 1;
    out.return_times[static_cast<std::size_t>(id)] = k + 1;
    const double dom_lo_true = 0.5 * (1.0 + xs[static_cast<std::size_t>(k)]);
    const double dom_hi = 0.5 * (1.0 + (k == 0 ? 1.0 : xs[static_cast<std::size_t>(k - 1)]));
    const bool deepest = id == 0;
    const double dom_lo = deepest ? 0.5 : dom_lo_true;
    // Affine dilation absorbing the tail slab into the deepest branch.
    const double scale = (dom_hi - dom_lo_true) / (dom_hi - dom_lo);
    auto to_true = [dom_lo, dom_lo_true, scale](double y) { return dom_lo_true + (y - dom_lo) * scale; };
    auto from_true = [dom_lo, dom_lo_true, scale](double x) { return dom_lo + (x - dom_lo_true) / scale; };
    b.lo = dom_lo;
    b.hi = dom_hi;
    b.forward = [amb, k, to_true](double y) {
      double x = 2.0 * to_true(y) - 1.0;
      for (int i = 0; i < k; ++i) x = amb.left(x);
      return x;
    };
    b.derivative = [amb, k, to_true, scale](double y) {
      double x = 2.0 * to_true(y) - 1.0;
      double d = 2.0 * scale;
      for (int i = 0; i < k; ++i) {
        d *= amb.left_derivative(x);
        x = amb.left(x);
      }
      return d;
    };
    b.inverse = [cache, amb, k, from_true](double target) {
      double w = target;
      for (int m = 1; m <= k; ++m) {
        const double lo = cache->xs[static_cast<std::size_t>(m)];
        const double hi = cache->xs[static_cast<std::size_t>(m - 1)];
        w = solve_increasing([&](double x) { return amb.left(x); },
                             [&](double x) { return amb.left_derivative(x); }, lo, hi, w, 1e-15);
      }
      return from_true(0.5 * (1.0 + w));
    };
    b.pull_points = [cache, k, from_true](const std::vector<double>& points) {
      const auto& lv = cache->level(points, static_cast<std::size_t>(k));
      std::vector<double> res(lv.size());
      for (std::size_t i = 0; i < lv.size(); ++i) res[i] = from_true(0.5 * (1.0 + lv[i]));
      return res;
    };
  }

  MapSpec spec;
  spec.kind = "lsv";
  spec.gamma = gamma;
  spec.branch_cutoff = J;
  spec.grid_cells = grid_cells;
  out.map = std::make_shared<GibbsMarkovMap>(0.5, 1.0, std::move(branches), grid_cells, spec);
  out.absorbed_mass = out.map->mu_of_interval(0.5, 0.5 * (1.0 + xs[static_cast<std::size_t>(J - 1)]));

  // tail mu(tau > n) = mu([1/2, (1+x_{n-1})/2)) for n = 1..J-1.
  out.tail.resize(static_cast<std::size_t>(J - 1));
  for (int n = 1; n < J; ++n)
    out.tail[static_cast<std::size_t>(n - 1)] =
        out.map->mu_of_interval(0.5, 0.5 * (1.0 + xs[static_cast<std::size_t>(n - 1)]));
  {
    std::vector<double> ln_n, ln_tail;
    for (int n = 5; n < J / 2; ++n) {
      const double t = out.tail[static_cast<std::size_t>(n - 1)];
      if (t > 0) {
        ln_n.push_back(std::log(static_cast<double>(n)));
        ln_tail.push_back(std::log(t));
      }
    }
    if (ln_n.size() >= 4) out.fitted_tail_exponent = -ols_line(ln_n, ln_tail).slope;
  }
  return out;
}

/// Fitted decay of ||R^n v - int v dmu|| in the discrete sup+Lipschitz norm
/// under the cell transfer matrix.
struct SpectralGapReport {
  std::vector<double> norms; // n = 0..n_max
  double gamma1 = 0.0;       // fitted geometric rate
  double c3 = 0.0;           // fitted constant
};

inline SpectralGapReport spectral_gap_probe(const GibbsMarkovMap& map, const GridFunction& v,
                                            int n_max) {
  require(v.grid().same_geometry(map.grid()), errc::grid_mismatch, "spectral_gap_probe: foreign grid");
  SpectralGapReport rep;
  double mean = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) mean += map.cell_mu()[i] * v[i];
  std::vector<double> w = v.values(), nxt(v.size());
  const auto& rows = map.markov_rows();
  for (int n = 0; n <= n_max; ++n) {
    GridFunction dev(&map.grid(), w);
    for (auto& x : dev.values()) x -= mean;
    rep.norms.push_back(dev.sup_norm() + dev.lipschitz_seminorm_coarse());
    if (n == n_max) break;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double acc = 0.0;
      for (const auto& entry : rows[i]) acc += entry.second * w[static_cast<std::size_t>(entry.first)];
      nxt[i] = acc;
    }
    w.swap(nxt);
  }
  // Fit only the strict geometric phase: the coarse seminorm of Ulam
  // iterates eventually hits a discretization plateau that must not enter
  // the rate fit.
  std::vector<double> phase;
  phase.push_back(rep.norms[0]);
  double min_ratio = 1.0;
  for (std::size_t i = 1; i < rep.norms.size(); ++i) {
    if (rep.norms[i] <= 1e-14) break;
    const double ratio = rep.norms[i] / rep.norms[i - 1];
    if (ratio > std::min(0.92, 1.15 * min_ratio)) break;
    min_ratio = std::min(min_ratio, ratio);
    phase.push_back(rep.norms[i]);
  }
  const GeomFit g = fit_geometric(phase, 1e-14);
  rep.gamma1 = g.rate;
  rep.c3 = g.amplitude;
  return rep;
}

/// Distortion audit over random cylinders: e^{p_n}(y) / mu(d) must be
/// squeezed into [1/C2, C2] by one global constant.
struct DistortionReport {
  double c2 = 1.0;
  double worst_ratio_lo = 1.0;
  double worst_ratio_hi = 1.0;
  std::size_t cylinders = 0;
};

inline DistortionReport distortion_probe(const GibbsMarkovMap& map, std::size_t n_cylinders,
                                         int max_depth, Rng rng) {
  // Draw symbols with probability ~ mu(Y_j) so deep cylinders keep mass.
  std::vector<double> branch_mu(map.branch_count());
  for (std::size_t j = 0; j < map.branch_count(); ++j)
    branch_mu[j] = map.mu_of_interval(map.branch(j).lo, map.branch(j).hi);
  AliasTable alias(branch_mu);

  DistortionReport rep;
  rep.worst_ratio_lo = 1e300;
  rep.worst_ratio_hi = 0.0;
  for (std::size_t c = 0; c < n_cylinders; ++c) {
    const int depth = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_depth)));
    std::vector<int> word(static_cast<std::size_t>(depth));
    for (auto& s : word) s = static_cast<int>(alias.draw(rng));
    double a = map.y_lo(), b = map.y_hi();
    for (int i = depth - 1; i >= 0; --i) {
      a = map.inverse_branch(word[static_cast<std::size_t>(i)], a);
      b = map.inverse_branch(word[static_cast<std::size_t>(i)], b);
    }
    const double mu_d = map.mu_of_interval(a, b);
    if (mu_d <= 0.0) continue;
    for (double t : {0.2, 0.5, 0.8}) {
      double y = a + t * (b - a);
      double epn = 1.0;
      for (int i = 0; i < depth; ++i) {
        const int j = map.branch_index(y);
        const double fy = map.branch(static_cast<std::size_t>(j)).forward(y);
        epn *= map.branch_weight(static_cast<std::size_t>(j), fy);
        y = fy;
      }
      const double ratio = epn / mu_d;
      rep.worst_ratio_lo = std::min(rep.worst_ratio_lo, ratio);
      rep.worst_ratio_hi = std::max(rep.worst_ratio_hi, ratio);
    }
    ++rep.cylinders;
  }
  rep.c2 = std::max({1.0, rep.worst_ratio_hi, rep.worst_ratio_lo > 0 ? 1.0 / rep.worst_ratio_lo : 1e300});
  return rep;
}

} // namespace mixlab
