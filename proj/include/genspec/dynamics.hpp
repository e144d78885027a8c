#pragma once

// Time integration of the model and classification of where a trajectory
// ends up: an equilibrium, a periodic orbit, a chaos candidate, or unresolved.

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "genspec/equilibria.hpp"
#include "genspec/integrator.hpp"
#include "genspec/lyapunov.hpp"
#include "genspec/model.hpp"
#include "genspec/params_io.hpp"

namespace genspec {

struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = 1.0;
  double t_end = 5000.0;
  double transient_fraction = 0.5;
  double sample_dt = 0.1;

  void check() const {
    if (!(rel_tol > 0.0 && abs_tol > 0.0 && max_step > 0.0))
      throw std::invalid_argument("tolerances and max_step must be positive");
    if (!(t_end > 0.0 && sample_dt > 0.0 && sample_dt <= t_end))
      throw std::invalid_argument("t_end and sample_dt must be positive with sample_dt <= t_end");
    if (!(transient_fraction > 0.0 && transient_fraction < 1.0))
      throw std::invalid_argument("transient_fraction must lie in (0, 1)");
  }

  [[nodiscard]] StepControl step_control() const { return {rel_tol, abs_tol, max_step}; }
};

struct Trajectory {
  std::vector<double> t;
  std::vector<State> states;
  StepStats stats;
};

// Samples at multiples of sample_dt in [record_from, t_end] (t_end included).
inline Trajectory integrate(const Params& p, const State& s0, const IntegratorConfig& cfg,
                            double record_from = 0.0) {
  validate(p);
  cfg.check();
  check_state(s0);
  auto solver = make_dopri5<kDim>([&p](double, const State& s) { return detail::vector_field(p, s); },
                                  0.0, s0, cfg.step_control());
  Trajectory tr;
  const long n = std::lround(std::floor(cfg.t_end / cfg.sample_dt + 1e-9));
  long k = std::max<long>(0, std::lround(std::ceil(record_from / cfg.sample_dt - 1e-9)));
  tr.t.reserve(n - k + 2);
  tr.states.reserve(n - k + 2);
  if (k == 0) {
    tr.t.push_back(0.0);
    tr.states.push_back(solver.y());
    k = 1;
  }
  while (solver.t() < cfg.t_end) {
    solver.step(cfg.t_end);
    for (; k <= n && k * cfg.sample_dt <= solver.t(); ++k) {
      const double ts = k * cfg.sample_dt;
      tr.t.push_back(ts);
      tr.states.push_back(solver.dense(ts).cwiseMax(0.0));
    }
  }
  if (tr.t.empty() || tr.t.back() < cfg.t_end - 1e-9 * cfg.t_end) {
    tr.t.push_back(cfg.t_end);
    tr.states.push_back(solver.y());
  }
  tr.stats = solver.stats();
  return tr;
}

// ---------------------------------------------------------------------------
// Norm-signal analysis

struct Peak {
  double t;
  double value;
};

// Three-point local maxima of the state norm, refined by a parabola.
inline std::vector<Peak> norm_peaks(const Trajectory& tr) {
  std::vector<Peak> out;
  const std::size_t n = tr.states.size();
  if (n < 3) return out;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = state_norm(tr.states[i]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(v[i] > v[i - 1] && v[i] >= v[i + 1])) continue;
    const double dt = tr.t[i + 1] - tr.t[i];
    const double curv = v[i - 1] - 2.0 * v[i] + v[i + 1];
    double off = 0.0, val = v[i];
    if (curv < 0.0) {
      off = 0.5 * (v[i - 1] - v[i + 1]) / curv;
      val = v[i] - 0.25 * (v[i - 1] - v[i + 1]) * off;
    }
    out.push_back({tr.t[i] + off * dt, val});
  }
  return out;
}

struct PoExtrema {
  double max_norm;
  double min_norm;
  std::optional<double> period;
};

inline PoExtrema po_extrema(const Trajectory& tr) {
  if (tr.states.empty()) throw std::invalid_argument("empty trajectory");
  PoExtrema e{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
              std::nullopt};
  for (const auto& s : tr.states) {
    const double v = state_norm(s);
    e.max_norm = std::max(e.max_norm, v);
    e.min_norm = std::min(e.min_norm, v);
  }
  const auto peaks = norm_peaks(tr);
  if (peaks.size() >= 3)
    e.period = (peaks.back().t - peaks.front().t) / static_cast<double>(peaks.size() - 1);
  return e;
}

inline constexpr double kPeakEqualityTolerance = 1e-4;  // relative to amplitude
inline constexpr int kMinEqualPeaks = 10;
inline constexpr int kMaxPeakLag = 8;
inline constexpr double kMinOrbitAmplitude = 1e-6;

struct PeriodicFit {
  int lag;  // peaks per period (2 after one period doubling)
  double period;
};

// Smallest lag k for which the last kMinEqualPeaks peaks match the peaks k
// positions earlier.
inline std::optional<PeriodicFit> detect_periodic(const std::vector<Peak>& peaks,
                                                  double amplitude) {
  if (!(amplitude > kMinOrbitAmplitude)) return std::nullopt;
  const double tol = kPeakEqualityTolerance * amplitude;
  const int n = static_cast<int>(peaks.size());
  for (int k = 1; k <= kMaxPeakLag; ++k) {
    if (n < kMinEqualPeaks + k) break;
    bool ok = true;
    for (int i = n - kMinEqualPeaks; i < n && ok; ++i)
      ok = std::fabs(peaks[i].value - peaks[i - k].value) <= tol;
    if (!ok) continue;
    double sum = 0.0;
    for (int i = n - kMinEqualPeaks; i < n; ++i) sum += peaks[i].t - peaks[i - k].t;
    return PeriodicFit{k, sum / kMinEqualPeaks};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Attractor classification

enum class AttractorKind { equilibrium, periodic, chaotic, unresolved };

inline std::string_view to_string(AttractorKind k) {
  switch (k) {
    case AttractorKind::equilibrium: return "equilibrium";
    case AttractorKind::periodic: return "periodic";
    case AttractorKind::chaotic: return "chaotic";
    case AttractorKind::unresolved: return "unresolved";
  }
  return "?";
}

struct AttractorMetrics {
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  double max_norm = std::numeric_limits<double>::quiet_NaN();
  double min_norm = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> period;
  std::optional<double> lle;
  std::string diagnostics;
};

struct AttractorClass {
  AttractorKind kind = AttractorKind::unresolved;
  std::string target;  // equilibrium name, or host equilibrium of a periodic orbit
  AttractorMetrics metrics;

  // Bucket used when pooling runs: "v1", "PO:v6", "chaotic", "unresolved".
  [[nodiscard]] std::string key() const {
    switch (kind) {
      case AttractorKind::equilibrium: return target;
      case AttractorKind::periodic: return "PO:" + target;
      case AttractorKind::chaotic: return "chaotic";
      case AttractorKind::unresolved: break;
    }
    return "unresolved";
  }
};

inline std::string format_metrics(const AttractorMetrics& m) {
  std::ostringstream os;
  os << "residual=" << format_double(m.final_residual) << ";max=" << format_double(m.max_norm)
     << ";min=" << format_double(m.min_norm);
  if (m.period) os << ";period=" << format_double(*m.period);
  if (m.lle) os << ";lle=" << format_double(*m.lle);
  if (!m.diagnostics.empty()) os << ";error=" << m.diagnostics;
  return os.str();
}

inline constexpr double kEquilibriumResidual = 1e-8;
inline constexpr double kEquilibriumMatch = 1e-5;
inline constexpr double kChaosThreshold = 1e-3;

inline std::optional<Equilibrium> nearest_feasible(const std::vector<Equilibrium>& eqs,
                                                   const State& s) {
  std::optional<Equilibrium> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& e : eqs) {
    if (!e.feasible) continue;
    const double d = (e.state - s).norm();
    if (d < best_d) {
      best_d = d;
      best = e;
    }
  }
  return best;
}

inline AttractorClass classify_attractor(const Params& p, const State& s0,
                                         const IntegratorConfig& cfg,
                                         const LleConfig& lle_cfg = {}) {
  AttractorClass out;
  Trajectory tr;
  try {
    tr = integrate(p, s0, cfg, cfg.transient_fraction * cfg.t_end);
  } catch (const NumericalError& e) {
    out.metrics.diagnostics = e.what();
    return out;
  }
  const State& last = tr.states.back();
  const auto ext = po_extrema(tr);
  out.metrics.final_residual = detail::vector_field(p, last).norm();
  out.metrics.max_norm = ext.max_norm;
  out.metrics.min_norm = ext.min_norm;
  const auto eqs = all_equilibria(p);

  if (out.metrics.final_residual < kEquilibriumResidual) {
    const auto e = nearest_feasible(eqs, last);
    if (e && (e->state - last).norm() < kEquilibriumMatch) {
      out.kind = AttractorKind::equilibrium;
      out.target = std::string(e->name());
      return out;
    }
  }

  const auto peaks = norm_peaks(tr);
  if (const auto fit = detect_periodic(peaks, ext.max_norm - ext.min_norm)) {
    State mean = State::Zero();
    for (const auto& s : tr.states) mean += s;
    mean /= static_cast<double>(tr.states.size());
    const auto host = nearest_feasible(eqs, mean);
    out.kind = AttractorKind::periodic;
    out.target = host ? std::string(host->name()) : "none";
    out.metrics.period = fit->period;
    return out;
  }

  // Only a sustained oscillation can be chaotic; slow monotone drifts are
  // left unresolved without paying for an exponent.
  if (static_cast<int>(peaks.size()) < kMinEqualPeaks) return out;
  try {
    const auto r = lle(p, last, lle_cfg);
    out.metrics.lle = r.lle;
    if (r.lle > kChaosThreshold) out.kind = AttractorKind::chaotic;
  } catch (const NumericalError& e) {
    out.metrics.diagnostics = e.what();
  }
  return out;
}

}  // namespace genspec
