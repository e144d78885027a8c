#pragma once

// Largest Lyapunov exponent from the variational equation v' = J(s) v,
// renormalizing v at fixed intervals and averaging the log growth.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "genspec/integrator.hpp"
#include "genspec/model.hpp"

namespace genspec {

struct LleConfig {
  double transient = 2000.0;
  double accumulation = 20000.0;
  double renorm_interval = 1.0;
  double window_fraction = 0.25;  // tail of the history checked for drift
  double tolerance = 1e-3;
  StepControl step{};

  void check() const {
    if (!(transient >= 0.0 && accumulation > 0.0 && renorm_interval > 0.0 &&
          window_fraction > 0.0 && window_fraction <= 1.0 && tolerance > 0.0))
      throw std::invalid_argument("invalid Lyapunov configuration");
    if (!(accumulation >= 10.0 * renorm_interval))
      throw std::invalid_argument("accumulation time must span many renormalization intervals");
  }
};

struct LleResult {
  double lle;
  std::vector<double> history;  // running estimate after each renormalization
  bool converged;
};

using Tangent = State;
using Extended = Eigen::Matrix<double, 2 * kDim, 1>;

inline LleResult lle(const Params& p, const State& s0, const LleConfig& cfg,
                     const std::optional<Tangent>& v0 = std::nullopt) {
  validate(p);
  cfg.check();
  check_state(s0);

  const auto base = [&p](double, const State& s) { return detail::vector_field(p, s); };
  State s = s0;
  if (cfg.transient > 0.0) {
    auto solver = make_dopri5<kDim>(base, 0.0, s0, cfg.step);
    while (solver.t() < cfg.transient) solver.step(cfg.transient);
    s = solver.y();
  }

  Tangent v = v0.value_or(Tangent::Ones());
  if (!(v.norm() > 0.0)) throw std::invalid_argument("initial tangent vector must be nonzero");
  v.normalize();

  const auto variational = [&p](double, const Extended& w) {
    const State x = w.head<kDim>();
    Extended d;
    d.head<kDim>() = detail::vector_field(p, x);
    d.tail<kDim>() = detail::jacobian_unchecked(p, x) * w.tail<kDim>();
    return d;
  };
  Extended w;
  w << s, v;
  auto solver = make_dopri5<2 * kDim>(variational, 0.0, w, cfg.step);

  const long n = std::lround(cfg.accumulation / cfg.renorm_interval);
  LleResult out{0.0, {}, false};
  out.history.reserve(n);
  double log_sum = 0.0;
  for (long k = 1; k <= n; ++k) {
    const double t_next = k * cfg.renorm_interval;
    while (solver.t() < t_next) solver.step(t_next);
    w = solver.y();
    const double g = w.tail<kDim>().norm();
    if (!(g > 0.0 && std::isfinite(g))) throw NumericalError("tangent vector degenerated");
    log_sum += std::log(g);
    w.tail<kDim>() /= g;
    solver.reset(t_next, w);
    out.history.push_back(log_sum / t_next);
  }
  out.lle = out.history.back();
  const auto tail_begin =
      out.history.end() - std::max<long>(1, std::lround(cfg.window_fraction * n));
  const auto [lo, hi] = std::minmax_element(tail_begin, out.history.end());
  out.converged = (*hi - *lo) < cfg.tolerance;
  return out;
}

}  // namespace genspec
