#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

#include <boost/math/tools/toms748_solve.hpp>

namespace genspec {

// Bracketed scalar root; nullopt when f does not change sign on [lo, hi].
template <class F>
std::optional<double> find_root(F&& f, double lo, double hi, double x_tol) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi)) return std::nullopt;
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) return std::nullopt;
  std::uintmax_t max_iter = 200;
  const auto tol = [x_tol](double a, double b) { return std::fabs(b - a) <= x_tol; };
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, max_iter);
  return 0.5 * (r.first + r.second);
}

}  // namespace genspec
