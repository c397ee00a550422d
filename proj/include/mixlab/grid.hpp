#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "mixlab/errors.hpp"

namespace mixlab {

/// One-dimensional cell decomposition of an interval.  Cells are half-open
/// [edge[i], edge[i+1]); construction from branch endpoints guarantees that
/// no cell straddles a partition endpoint.
class Grid {
public:
  Grid() = default;

  explicit Grid(std::vector<double> edges) : edges_(std::move(edges)) {
    require(edges_.size() >= 2, errc::precondition, "grid needs at least one cell");
    for (std::size_t i = 0; i + 1 < edges_.size(); ++i)
      require(edges_[i] < edges_[i + 1], errc::precondition, "grid edges must increase");
    mids_.resize(edges_.size() - 1);
    widths_.resize(edges_.size() - 1);
    for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
      mids_[i] = 0.5 * (edges_[i] + edges_[i + 1]);
      widths_[i] = edges_[i + 1] - edges_[i];
    }
  }

  /// Uniform grid on [lo, hi].
  static Grid uniform(double lo, double hi, std::size_t cells) {
    std::vector<double> e(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i)
      e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cells);
    e.front() = lo;
    e.back() = hi;
    return Grid(std::move(e));
  }

  /// Grid aligned to the given breakpoints (sorted, spanning the domain),
  /// refined so that the total number of cells is roughly `target_cells`.
  /// Every breakpoint is a cell edge, so cells never straddle breakpoints.
  static Grid aligned(const std::vector<double>& breakpoints, std::size_t target_cells) {
    require(breakpoints.size() >= 2, errc::precondition, "aligned grid needs >= 2 breakpoints");
    const double lo = breakpoints.front();
    const double hi = breakpoints.back();
    const double h = (hi - lo) / static_cast<double>(target_cells);
    std::vector<double> e;
    e.reserve(target_cells + breakpoints.size());
    for (std::size_t b = 0; b + 1 < breakpoints.size(); ++b) {
      const double a = breakpoints[b];
      const double c = breakpoints[b + 1];
      require(a < c, errc::precondition, "aligned grid: breakpoints must strictly increase");
      const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround((c - a) / h)));
      for (std::size_t i = 0; i < pieces; ++i)
        e.push_back(a + (c - a) * static_cast<double>(i) / static_cast<double>(pieces));
    }
    e.push_back(hi);
    return Grid(std::move(e));
  }

  std::size_t size() const { return mids_.size(); }
  double lo() const { return edges_.front(); }
  double hi() const { return edges_.back(); }
  const std::vector<double>& edges() const { return edges_; }
  const std::vector<double>& mids() const { return mids_; }
  const std::vector<double>& widths() const { return widths_; }
  double mid(std::size_t i) const { return mids_[i]; }
  double width(std::size_t i) const { return widths_[i]; }

  /// Cell index containing y; clamps the right endpoint into the last cell.
  std::size_t locate(double y) const {
    require(y >= edges_.front() - 1e-12 && y <= edges_.back() + 1e-12, errc::out_of_domain,
            "grid locate: point outside domain");
    if (y <= edges_.front()) return 0;
    if (y >= edges_.back()) return mids_.size() - 1;
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), y);
    return static_cast<std::size_t>(it - edges_.begin()) - 1;
  }

  bool same_geometry(const Grid& other) const { return edges_ == other.edges_; }

private:
  std::vector<double> edges_;
  std::vector<double> mids_;
  std::vector<double> widths_;
};

/// Cell-sampled function on a Grid (values at cell midpoints), with linear
/// interpolation between midpoints for off-grid evaluation.
template <class T>
class BasicGridFunction {
public:
  BasicGridFunction() = default;
  BasicGridFunction(const Grid* grid, std::vector<T> values) : grid_(grid), v_(std::move(values)) {
    require(grid_ != nullptr && v_.size() == grid_->size(), errc::grid_mismatch,
            "grid function: value count does not match grid");
  }

  template <class Fn>
  static BasicGridFunction sample(const Grid& grid, Fn&& fn) {
    std::vector<T> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = fn(grid.mid(i));
    return BasicGridFunction(&grid, std::move(vals));
  }

  static BasicGridFunction constant(const Grid& grid, T value) {
    return BasicGridFunction(&grid, std::vector<T>(grid.size(), value));
  }

  const Grid& grid() const { return *grid_; }
  std::size_t size() const { return v_.size(); }
  const std::vector<T>& values() const { return v_; }
  std::vector<T>& values() { return v_; }
  T operator[](std::size_t i) const { return v_[i]; }
  T& operator[](std::size_t i) { return v_[i]; }

  /// Piecewise-linear evaluation through the midpoint samples.
  T eval(double y) const {
    const auto& m = grid_->mids();
    if (y <= m.front()) return v_.front();
    if (y >= m.back()) return v_.back();
    const auto it = std::upper_bound(m.begin(), m.end(), y);
    const std::size_t i = static_cast<std::size_t>(it - m.begin());
    const double t = (y - m[i - 1]) / (m[i] - m[i - 1]);
    return v_[i - 1] + (v_[i] - v_[i - 1]) * t;
  }

  double sup_norm() const {
    double s = 0.0;
    for (const T& x : v_) s = std::max(s, static_cast<double>(std::abs(x)));
    return s;
  }

  /// Grid Lipschitz seminorm: max difference quotient between adjacent cell
  /// midpoints.  Euclidean surrogate for the symbolic-metric seminorm.
  double lipschitz_seminorm() const {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < v_.size(); ++i) {
      const double d = grid_->mid(i + 1) - grid_->mid(i);
      s = std::max(s, static_cast<double>(std::abs(v_[i + 1] - v_[i])) / d);
    }
    return s;
  }

  /// Lipschitz seminorm at a fixed physical resolution: difference quotients
  /// between width-weighted block averages spanning ~`span`.  Robust against
  /// the cell-scale sawtooth of Ulam iterates, which never contracts under
  /// the plain adjacent-cell quotient.
  double lipschitz_seminorm_coarse(double span = 0.0) const {
    if (span <= 0.0) span = (grid_->hi() - grid_->lo()) / 32.0;
    std::vector<T> avgs;
    std::vector<double> centres;
    T acc{};
    double w_acc = 0.0, x_acc = 0.0, start = grid_->lo();
    for (std::size_t i = 0; i < v_.size(); ++i) {
      acc += v_[i] * grid_->width(i);
      x_acc += grid_->mid(i) * grid_->width(i);
      w_acc += grid_->width(i);
      if (grid_->mid(i) - start >= span || i + 1 == v_.size()) {
        avgs.push_back(acc / w_acc);
        centres.push_back(x_acc / w_acc);
        acc = T{};
        w_acc = x_acc = 0.0;
        start = grid_->mid(i);
      }
    }
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < avgs.size(); ++i)
      s = std::max(s, static_cast<double>(std::abs(avgs[i + 1] - avgs[i])) / (centres[i + 1] - centres[i]));
    return s;
  }

private:
  const Grid* grid_ = nullptr;
  std::vector<T> v_;
};

using GridFunction = BasicGridFunction<double>;
using CGridFunction = BasicGridFunction<std::complex<double>>;

} // namespace mixlab
