#pragma once

// Parameter sweeps: 1-D bifurcation tables, basin probabilities over a grid of
// initial viral loads, and (alpha, alpha_s) maps of attractors and exponents.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "genspec/dynamics.hpp"
#include "genspec/equilibria.hpp"
#include "genspec/lyapunov.hpp"
#include "genspec/stability.hpp"

namespace genspec {

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Evaluates fn(0..n-1) on up to `threads` workers; results stay in index
// order so output never depends on scheduling.
template <class Fn>
auto parallel_map(std::size_t n, unsigned threads, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned w = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < w; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) throw std::invalid_argument("linspace needs at least two points");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

struct Grid2D {
  double alpha_lo, alpha_hi;
  int n_alpha;
  double alpha_s_lo, alpha_s_hi;
  int n_alpha_s;

  void check() const {
    if (n_alpha < 2 || n_alpha_s < 2) throw std::invalid_argument("grid counts must be >= 2");
    if (!(alpha_lo > 0.0 && alpha_hi > alpha_lo && alpha_s_lo > 0.0 && alpha_s_hi > alpha_s_lo))
      throw std::invalid_argument("grid ranges must be positive and increasing");
  }
  [[nodiscard]] std::vector<double> alphas() const { return linspace(alpha_lo, alpha_hi, n_alpha); }
  [[nodiscard]] std::vector<double> alpha_ss() const {
    return linspace(alpha_s_lo, alpha_s_hi, n_alpha_s);
  }
};

// ---------------------------------------------------------------------------
// 1-D bifurcation sweep

struct SweepEquilibrium {
  EqId id;
  double norm;
  Stability stability;
};

struct SweepSample {
  double value;
  std::vector<SweepEquilibrium> equilibria;  // feasible only
  // Simulated attractor when no equilibrium is stable.
  std::optional<AttractorClass> attractor;
  std::string error;
};

struct Crossing {
  std::string label;  // T13, H5, LP7, H6 ...
  double value;
};

struct Sweep1D {
  Rate axis;
  std::vector<SweepSample> samples;
  std::vector<Crossing> crossings;  // sorted by value
};

struct SweepConfig {
  IntegratorConfig integ{};
  LleConfig lle{};
  double zs0 = 0.5, z0 = 0.5;  // initial loads for the simulated attractor
  int hopf_samples = 400;
  unsigned threads = default_threads();
};

namespace detail {

inline SweepSample sweep_sample(const Params& p, double value, const SweepConfig& cfg) {
  SweepSample s{value, {}, std::nullopt, {}};
  try {
    bool any_stable = false;
    for (const auto& e : all_equilibria(p)) {
      if (!e.feasible) continue;
      const auto r = classify_equilibrium(p, e);
      s.equilibria.push_back({e.id, state_norm(e.state), r.classification});
      any_stable |= r.classification == Stability::stable;
    }
    if (!any_stable)
      s.attractor = classify_attractor(p, reference_initial_state(p, cfg.zs0, cfg.z0), cfg.integ,
                                       cfg.lle);
  } catch (const std::exception& e) {
    s.error = e.what();
  }
  return s;
}

// Values of the swept rate where an analytic curve is crossed.
inline std::vector<Crossing> analytic_crossings(const Params& p, Rate axis, double lo, double hi) {
  std::vector<Crossing> out;
  const auto in_range = [&](double v) { return v >= lo && v <= hi; };
  for (const auto& c : kAnalyticCurves) {
    const std::string label(to_string(c.label));
    if (!c.depends_on_other) {
      // Constant in one rate; parallel to the sweep line unless it is the swept rate.
      if (c.solves_for != axis) continue;
      if (const auto v = curve_value(c.label, p); v && in_range(*v)) out.push_back({label, *v});
    } else if (axis == Rate::alpha_s) {
      if (const auto v = curve_value(c.label, p); v && in_range(*v)) out.push_back({label, *v});
    } else {
      // alpha_s = f(alpha) crossed at the swept alpha where f equals p.alpha_s.
      const auto g = [&](double a) {
        const auto v = curve_alpha_s(c.label, p, a);
        return v ? *v - p.alpha_s : std::numeric_limits<double>::quiet_NaN();
      };
      constexpr int n = 400;
      for (int i = 0; i < n; ++i) {
        const double a0 = lo + (hi - lo) * i / n, a1 = lo + (hi - lo) * (i + 1) / n;
        const double g0 = g(a0), g1 = g(a1);
        if (!std::isfinite(g0) || !std::isfinite(g1) || (g0 > 0.0) == (g1 > 0.0)) continue;
        if (const auto r = find_root(g, a0, a1, 1e-12); r && std::fabs(g(*r)) < 1e-6)
          out.push_back({label, *r});
      }
    }
  }
  return out;
}

}  // namespace detail

inline Sweep1D bifurcation_sweep_1d(const Params& p, Rate axis, double lo, double hi, int n,
                                    const SweepConfig& cfg = {}) {
  if (n < 10) throw std::invalid_argument("a 1-D sweep needs at least 10 samples");
  if (!(hi > lo && lo > 0.0)) throw std::invalid_argument("sweep range must be positive and increasing");
  validate(p);
  const auto values = linspace(lo, hi, n);
  Sweep1D out{axis, {}, {}};
  out.samples = parallel_map(values.size(), cfg.threads, [&](std::size_t i) {
    return detail::sweep_sample(with_rate(p, axis, values[i]), values[i], cfg);
  });

  out.crossings = detail::analytic_crossings(p, axis, lo, hi);
  for (double f : coexistence_folds(p, axis, lo, hi)) out.crossings.push_back({"LP7", f});
  for (int id = 1; id < 9; ++id) {
    const auto eq = static_cast<EqId>(id);
    const auto scan = hopf_scan(p, axis, eq, lo, hi, cfg.hopf_samples);
    const std::string label = "H" + std::string(name(eq)).substr(1);
    for (const auto& h : scan.points) {
      // The specialist-free Hopf point is already known in closed form.
      const bool known = std::any_of(out.crossings.begin(), out.crossings.end(), [&](const Crossing& c) {
        return c.label == label && std::fabs(c.value - h.parameter) < 1e-6;
      });
      if (!known) out.crossings.push_back({label, h.parameter});
    }
  }
  std::sort(out.crossings.begin(), out.crossings.end(),
            [](const Crossing& a, const Crossing& b) {
              return a.value != b.value ? a.value < b.value : a.label < b.label;
            });
  return out;
}

// ---------------------------------------------------------------------------
// Basin probabilities

struct BasinConfig {
  int n = 5;  // per-axis count of initial viral loads
  IntegratorConfig integ{};
  LleConfig lle{};

  void check() const {
    if (n < 2) throw std::invalid_argument("basin grid needs N >= 2");
    integ.check();
    lle.check();
  }

  // Loads k/N, k = 1..N: strictly positive, since a zero load keeps that
  // strain extinct forever.
  [[nodiscard]] std::vector<double> loads() const {
    std::vector<double> v(n);
    for (int k = 1; k <= n; ++k) v[k - 1] = static_cast<double>(k) / n;
    return v;
  }
};

struct BasinRun {
  double zs0, z0;
  AttractorClass attractor;
};

struct BasinResult {
  std::map<std::string, double> probability;  // bucket key -> count / N^2
  std::vector<BasinRun> runs;                 // zs0-major order
};

inline BasinResult pool_runs(std::vector<BasinRun> runs) {
  BasinResult r;
  std::map<std::string, std::size_t> counts;
  for (const auto& run : runs) ++counts[run.attractor.key()];
  for (const auto& [key, n] : counts)
    r.probability[key] = static_cast<double>(n) / static_cast<double>(runs.size());
  r.runs = std::move(runs);
  return r;
}

inline BasinRun basin_run(const Params& p, double zs0, double z0, const BasinConfig& cfg) {
  return {zs0, z0, classify_attractor(p, reference_initial_state(p, zs0, z0), cfg.integ, cfg.lle)};
}

inline BasinResult basin_probability(const Params& p, const BasinConfig& cfg,
                                     unsigned threads = default_threads()) {
  validate(p);
  cfg.check();
  const auto loads = cfg.loads();
  const std::size_t n = loads.size();
  return pool_runs(parallel_map(n * n, threads, [&](std::size_t i) {
    return basin_run(p, loads[i / n], loads[i % n], cfg);
  }));
}

struct MapCell {
  double alpha, alpha_s;
  BasinResult basin;
};

// Cells in row-major order: alpha_s outer, alpha inner.
inline std::vector<MapCell> stability_map(const Params& p, const Grid2D& grid,
                                          const BasinConfig& cfg,
                                          unsigned threads = default_threads()) {
  validate(p);
  grid.check();
  cfg.check();
  const auto as = grid.alphas();
  const auto ass = grid.alpha_ss();
  const auto loads = cfg.loads();
  const std::size_t per_cell = loads.size() * loads.size();
  const std::size_t cells = as.size() * ass.size();
  // Flattened over cells and initial conditions for load balance.
  auto runs = parallel_map(cells * per_cell, threads, [&](std::size_t i) {
    const std::size_t c = i / per_cell, k = i % per_cell;
    const Params q = p.with_rates(as[c % as.size()], ass[c / as.size()]);
    try {
      return basin_run(q, loads[k / loads.size()], loads[k % loads.size()], cfg);
    } catch (const std::exception& e) {
      BasinRun r{loads[k / loads.size()], loads[k % loads.size()], {}};
      r.attractor.metrics.diagnostics = e.what();
      return r;
    }
  });
  std::vector<MapCell> out;
  out.reserve(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<BasinRun> cell_runs(runs.begin() + c * per_cell,
                                    runs.begin() + (c + 1) * per_cell);
    out.push_back({as[c % as.size()], ass[c / as.size()], pool_runs(std::move(cell_runs))});
  }
  return out;
}

struct LleCell {
  double alpha, alpha_s;
  double lle;
  bool converged;
  std::string error;
};

inline std::vector<LleCell> lle_map(const Params& p, const Grid2D& grid, double zs0, double z0,
                                    const LleConfig& cfg = {},
                                    unsigned threads = default_threads()) {
  validate(p);
  grid.check();
  cfg.check();
  const auto as = grid.alphas();
  const auto ass = grid.alpha_ss();
  return parallel_map(as.size() * ass.size(), threads, [&](std::size_t i) {
    const double a = as[i % as.size()], a_s = ass[i / as.size()];
    const Params q = p.with_rates(a, a_s);
    try {
      const auto r = lle(q, reference_initial_state(q, zs0, z0), cfg);
      return LleCell{a, a_s, r.lle, r.converged, {}};
    } catch (const std::exception& e) {
      return LleCell{a, a_s, std::numeric_limits<double>::quiet_NaN(), false, e.what()};
    }
  });
}

}  // namespace genspec
