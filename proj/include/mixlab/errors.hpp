#pragma once

#include <stdexcept>
#include <string>

namespace mixlab {

enum class errc {
  point_on_boundary,
  out_of_domain,
  no_such_branch,
  grid_mismatch,
  solver_diverged,
  cutoff_too_small,
  roof_not_bounded_below,
  eq_inf_violated,
  ambient_orbit_escapes,
  divergent_tail,
  window_below_noise,
  zero_mean_observable,
  cell_straddles_branch,
  no_convergence,
  singular_resolvent,
  contour_undersampled,
  degenerate_triple,
  precision_exhausted,
  fit_degenerate,
  window_too_short,
  scale_range_too_narrow,
  config_invalid,
  precondition,
};

/// All library failures throw this; `code` identifies the failure class so
/// callers can branch without string matching.
class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool ok, errc code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

} // namespace mixlab
