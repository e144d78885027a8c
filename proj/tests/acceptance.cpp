// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "genspec/dynamics.hpp"
#include "genspec/equilibria.hpp"
#include "genspec/lyapunov.hpp"
#include "genspec/stability.hpp"
#include "genspec/sweep.hpp"
#include "test_support.hpp"

using namespace genspec;
using genspec::testing::Gen;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <class... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  os.precision(10);
  (os << ... << args);
  return os.str();
}

// 1 ------------------------------------------------------------------------
Outcome equilibrium_residuals() {
  Gen g(1001);
  double worst = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Params p = g.params();
    for (const auto& e : all_equilibria(p)) {
      if (!e.state.allFinite()) continue;
      ++checked;
      const double r = detail::vector_field(p, e.state).norm() / std::max(1.0, e.state.norm());
      worst = std::max(worst, r);
    }
  }
  return {worst < 1e-10, cat(checked, " equilibria, worst scaled residual ", worst)};
}

// 2 ------------------------------------------------------------------------
Outcome trivial_spectrum() {
  const Params p = default_params();
  const auto r = classify_equilibrium(p, *equilibrium(p, EqId::v0));
  const std::vector<std::complex<double>> expected = {1.0, -0.22, -0.22, -0.25, -0.35, -0.25, 2.0};
  const double d = genspec::testing::spectrum_distance(
      std::vector<std::complex<double>>(r.eigenvalues.begin(), r.eigenvalues.end()), expected);
  std::string got;
  for (const auto& l : r.eigenvalues) got += cat(l.real(), " ");
  return {d < 1e-10, cat("computed {", got, "}, max mismatch ", d)};
}

// 3 ------------------------------------------------------------------------
struct Segment {
  CurveLabel label;
  double lo, hi;
};

Outcome transcritical_collisions() {
  const Segment segments[] = {
      {CurveLabel::T12, 0.2, 2.8}, {CurveLabel::T13, 0.1, 0.9}, {CurveLabel::T23, 0.2, 2.8},
      {CurveLabel::T26, 0.2, 2.8}, {CurveLabel::T37, 0.8, 2.0}, {CurveLabel::T45, 0.1, 2.8},
      // Left of its tangency with LP7 (alpha ~ 0.83) T67 meets v8 instead.
      {CurveLabel::T57, 0.05, 0.8}, {CurveLabel::T67, 0.9, 1.5},
  };
  double worst_gap = 0.0, worst_eig = 0.0;
  std::string failures;
  const Params base = default_params();
  for (const auto& seg : segments) {
    const auto& c = curve(seg.label);
    for (int i = 0; i < 10; ++i) {
      const double free = seg.lo + (seg.hi - seg.lo) * i / 9.0;
      Params p;
      if (c.solves_for == Rate::alpha) {
        p = base.with_rates(*curve_value(seg.label, base), free);
      } else {
        const Params at = base.with_rates(free, 1.0);
        p = at.with_rates(free, *curve_value(seg.label, at));
      }
      const auto eqs = all_equilibria(p);
      const auto a = find_equilibrium(eqs, c.first);
      const auto b = find_equilibrium(eqs, c.second);
      if (!a || !b || !a->state.allFinite() || !b->state.allFinite()) {
        failures += cat(" ", to_string(seg.label), "@", free, ":missing");
        continue;
      }
      const double gap = (a->state - b->state).norm();
      double smallest = std::numeric_limits<double>::infinity();
      for (const auto& l : spectrum(detail::jacobian_unchecked(p, a->state)))
        smallest = std::min(smallest, std::abs(l));
      worst_gap = std::max(worst_gap, gap);
      worst_eig = std::max(worst_eig, smallest);
      if (gap >= 1e-6 || smallest >= 1e-6) failures += cat(" ", to_string(seg.label), "@", free);
    }
  }
  return {failures.empty(), cat("8 curves x 10 points, worst pair distance ", worst_gap,
                                ", worst smallest |lambda| ", worst_eig,
                                failures.empty() ? "" : "; failing:" + failures)};
}

// 4 ------------------------------------------------------------------------
Outcome jacobian_vs_differences() {
  Gen g(1004);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Params p = g.params();
    const State s = g.nonnegative_state();
    const Matrix7 J = jacobian(p, s);
    Matrix7 fd;
    for (int j = 0; j < kDim; ++j) {
      const double h = 1e-6 * std::max(1.0, std::fabs(s[j]));
      State a = s, b = s;
      a[j] += h;
      b[j] -= h;
      fd.col(j) = (detail::vector_field(p, a) - detail::vector_field(p, b)) / (2 * h);
    }
    worst = std::max(worst, (J - fd).cwiseAbs().maxCoeff() / std::max(1.0, J.cwiseAbs().maxCoeff()));
  }
  return {worst < 1e-6, cat("100 random points, max relative error ", worst)};
}

// 5 ------------------------------------------------------------------------
Outcome low_specialist_structure() {
  const Params base = default_params(1.0, 0.2);
  const double t13 = *transcritical_value(CurveLabel::T13, base);
  const double t57 = *transcritical_value(CurveLabel::T57, base);
  // T37 as alpha at alpha_s = 0.2: solve f(alpha) = 0.2.
  const auto t37 = find_root(
      [&](double a) { return *curve_value(CurveLabel::T37, base.with_rates(a, 0.2)) - 0.2; }, t13,
      3.0, 1e-12);
  if (!t37) return {false, "T37 not found on (T13, 3]"};
  const double h5 = *hopf_locus_v5(base);
  if (!(t57 < t13 && t13 < *t37 && *t37 < h5))
    return {false, cat("threshold ordering broken: T57=", t57, " T13=", t13, " T37=", *t37)};

  std::string failures;
  int samples = 0;
  for (int i = 0; i <= 240; ++i) {
    const double a = 0.1 + 0.01 * i;
    if (std::fabs(a - t13) < 1e-3 || std::fabs(a - t57) < 1e-3 || std::fabs(a - *t37) < 1e-3 ||
        std::fabs(a - h5) < 1e-3)
      continue;
    ++samples;
    const Params p = base.with_rates(a, 0.2);
    const auto stable = [&](EqId id) {
      const auto e = equilibrium(p, id);
      return e && e->feasible && classify_equilibrium(p, *e).classification == Stability::stable;
    };
    const bool v1 = stable(EqId::v1), v3 = stable(EqId::v3), v5 = stable(EqId::v5);
    const bool want_v1 = a < t13, want_v3 = a > t13 && a < *t37, want_v5 = a > t57 && a < h5;
    if (v1 != want_v1 || v3 != want_v3 || v5 != want_v5) failures += cat(" ", a);
  }
  return {failures.empty(),
          cat(samples, " samples; v1 stable below T13=", t13, ", v3 on (T13, T37=", *t37,
              "), v5 above T57=", t57, ", bistable 3+5 band (", t13, ", ", *t37, ")",
              failures.empty() ? "" : "; mismatches at alpha =" + failures)};
}

// 6 ------------------------------------------------------------------------
Outcome saddle_node_lp7() {
  const Params p = default_params(1.0, 1.0);
  const auto disc = [&](double a) { return coexistence_discriminant(derived_constants(p.with_rates(a, 1.0))); };
  const auto root = find_root(disc, 0.5, 1.2, 1e-10);
  if (!root) return {false, "discriminant has no sign change on [0.5, 1.2]"};
  const double reference = 0.877;
  const bool ok = std::fabs(*root - reference) <= 5e-3;
  return {ok, cat("discriminant zero at alpha = ", *root, " (|disc| = ", std::fabs(disc(*root)),
                  "), reference ", reference, ", difference ", std::fabs(*root - reference))};
}

// 7 ------------------------------------------------------------------------
std::string describe(const BasinResult& r) {
  std::string s;
  for (const auto& [k, v] : r.probability) s += cat(k, "=", v, " ");
  return s;
}

Outcome basin_probabilities() {
  const auto a = basin_probability(default_params(0.2, 0.2), BasinConfig{});
  const bool a_ok = a.probability.size() == 1 && a.probability.count("v1") &&
                    a.probability.at("v1") == 1.0;

  const auto b = basin_probability(default_params(1.0, 0.53), BasinConfig{});
  const auto prob = [&](const char* k) { return b.probability.count(k) ? b.probability.at(k) : 0.0; };
  const bool b_ok = prob("v2") > 0.0 && prob("v5") > 0.0;

  // Golden split: written on first derivation, compared afterwards.
  const std::filesystem::path golden =
      std::filesystem::path(GENSPEC_GOLDEN_DIR) / "basin_alpha1.0_alphas0.53.txt";
  std::ostringstream now;
  for (const auto& run : b.runs)
    now << format_double(run.zs0) << ' ' << format_double(run.z0) << ' ' << run.attractor.key()
        << '\n';
  std::string golden_note;
  bool golden_ok = true;
  if (std::filesystem::exists(golden)) {
    std::ifstream in(golden);
    std::stringstream ss;
    ss << in.rdbuf();
    golden_ok = ss.str() == now.str();
    golden_note = golden_ok ? "matches golden split" : "DIFFERS from golden split";
  } else {
    std::ofstream(golden) << now.str();
    golden_note = "golden split recorded";
  }
  return {a_ok && b_ok && golden_ok,
          cat("(0.2,0.2): ", describe(a), "| (1.0,0.53): ", describe(b), "| ", golden_note)};
}

// 8 ------------------------------------------------------------------------
Outcome chaos_window() {
  const auto exponent = [](double a, double as) {
    const Params p = default_params(a, as);
    return lle(p, reference_initial_state(p, 0.5, 0.5), LleConfig{}).lle;
  };
  const double chaos = exponent(0.5, 2.0), cycle = exponent(0.5, 0.7), sink = exponent(0.2, 0.2);

  const Params p = default_params(0.5, 2.0);
  IntegratorConfig cfg;
  cfg.t_end = 3000.0;
  cfg.sample_dt = 0.5;
  const auto x = integrate(p, reference_initial_state(p, 0.5, 0.5), cfg);
  const auto y = integrate(p, reference_initial_state(p, 0.5001, 0.5001), cfg);
  double separated_at = -1.0;
  for (std::size_t i = 0; i < x.t.size(); ++i)
    if ((x.states[i] - y.states[i]).norm() > 0.1) {
      separated_at = x.t[i];
      break;
    }
  double widest = 0.0;
  for (std::size_t i = 0; i < x.t.size(); ++i)
    if (x.t[i] >= 1000.0 && x.t[i] <= 2500.0) widest = std::max(widest, (x.states[i] - y.states[i]).norm());
  const bool ok = chaos > 1e-3 && std::fabs(cycle) < 1e-2 && sink < -1e-3 &&
                  separated_at >= 1000.0 && separated_at <= 2500.0;
  return {ok, cat("LLE(0.5,2.0)=", chaos, " LLE(0.5,0.7)=", cycle, " LLE(0.2,0.2)=", sink,
                  "; trajectories first separate beyond 0.1 at t=", separated_at,
                  " (window [1000, 2500], largest distance inside it ", widest, ")")};
}

// 9 ------------------------------------------------------------------------
struct Box {
  double a0, a1, s0, s1;
};

bool locus_in_box(const Params& p, const Box& b, std::string& why) {
  for (const auto& c : kAnalyticCurves) {
    const std::string label(to_string(c.label));
    if (!c.depends_on_other) {
      const auto v = curve_value(c.label, p);
      if (!v) continue;
      const bool hit = c.solves_for == Rate::alpha ? (*v >= b.a0 && *v <= b.a1)
                                                   : (*v >= b.s0 && *v <= b.s1);
      if (hit) return why = label, true;
      continue;
    }
    constexpr int n = 400;
    std::optional<double> prev;
    for (int i = 0; i <= n; ++i) {
      const double a = b.a0 + (b.a1 - b.a0) * i / n;
      const auto f = curve_alpha_s(c.label, p, a);
      if (f && *f >= b.s0 && *f <= b.s1) return why = label, true;
      if (f && prev && std::fabs(*f - *prev) < 1.0 &&
          ((*prev < b.s0) != (*f < b.s0) || (*prev > b.s1) != (*f > b.s1)))
        return why = label, true;
      prev = f;
    }
  }
  const double am = 0.5 * (b.a0 + b.a1), sm = 0.5 * (b.s0 + b.s1);
  for (double s : {b.s0, sm, b.s1}) {
    if (!coexistence_folds(p.with_rates(1.0, s), Rate::alpha, b.a0, b.a1, 40).empty())
      return why = "LP7", true;
  }
  for (double a : {b.a0, am, b.a1}) {
    if (!coexistence_folds(p.with_rates(a, 1.0), Rate::alpha_s, b.s0, b.s1, 40).empty())
      return why = "LP7", true;
  }
  for (int id = 1; id < 9; ++id) {
    const auto eq = static_cast<EqId>(id);
    for (double s : {b.s0, sm, b.s1})
      if (!hopf_scan(p.with_rates(1.0, s), Rate::alpha, eq, b.a0, b.a1, 30).points.empty())
        return why = "H" + std::string(name(eq)).substr(1), true;
    for (double a : {b.a0, am, b.a1})
      if (!hopf_scan(p.with_rates(a, 1.0), Rate::alpha_s, eq, b.s0, b.s1, 30).points.empty())
        return why = "H" + std::string(name(eq)).substr(1), true;
  }
  return false;
}

std::string region_of(const BasinResult& r) {
  std::string s;
  for (const auto& [k, v] : r.probability)
    if (v > 0.0) s += (s.empty() ? "" : "+") + k;
  return s;
}

Outcome coarse_stability_map() {
  const Params p = default_params();
  const int n = 12;
  const double h = 2.95 / n;
  // (0.05, 3]: the open lower end excluded, twelve equal steps.
  const Grid2D grid{0.05 + h, 3.0, n, 0.05 + h, 3.0, n};
  const unsigned threads = default_threads();

  const auto cells = stability_map(p, grid, BasinConfig{}, threads);
  std::vector<std::string> region(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) region[i] = region_of(cells[i].basin);

  int boundaries = 0;
  std::string unexplained;
  std::map<std::string, int> explained_by;
  const auto check = [&](std::size_t i, std::size_t j) {
    if (region[i] == region[j]) return;
    ++boundaries;
    const Box box{std::max(1e-3, std::min(cells[i].alpha, cells[j].alpha) - h),
                  std::max(cells[i].alpha, cells[j].alpha) + h,
                  std::max(1e-3, std::min(cells[i].alpha_s, cells[j].alpha_s) - h),
                  std::max(cells[i].alpha_s, cells[j].alpha_s) + h};
    std::string why;
    if (locus_in_box(p, box, why)) {
      ++explained_by[why];
    } else {
      unexplained += cat(" [(", cells[i].alpha, ",", cells[i].alpha_s, ") ", region[i], " | (",
                         cells[j].alpha, ",", cells[j].alpha_s, ") ", region[j], "]");
    }
  };
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const std::size_t i = r * n + c;
      if (c + 1 < n) check(i, i + 1);
      if (r + 1 < n) check(i, i + n);
    }

  const auto lles = lle_map(p, grid, 0.5, 0.5, LleConfig{}, threads);
  int positive = 0, inside = 0;
  std::vector<std::string> violations;
  bool violation_off_boundary = false;
  for (const auto& c : lles) {
    if (!(c.lle > kChaosThreshold)) continue;
    ++positive;
    const bool in_window = c.alpha <= 0.7 && c.alpha_s >= 1.5 && c.alpha_s <= 3.0;
    if (in_window) {
      ++inside;
      continue;
    }
    violations.push_back(cat("(", c.alpha, ",", c.alpha_s, ")"));
    const bool adjacent = c.alpha <= 0.7 + h && c.alpha_s >= 1.5 - h;
    violation_off_boundary |= !adjacent;
  }
  const bool lle_ok = violations.size() <= 1 && !violation_off_boundary;

  std::string by;
  for (const auto& [k, v] : explained_by) by += cat(k, ":", v, " ");
  std::string viol;
  for (const auto& v : violations) viol += " " + v;
  return {unexplained.empty() && lle_ok,
          cat(boundaries, " region boundaries, explained by {", by, "}",
              unexplained.empty() ? "" : "; unexplained:" + unexplained, "; positive-LLE cells ",
              positive, " (", inside, " inside the window)",
              violations.empty() ? "" : "; outside:" + viol)};
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "equilibrium residuals", 5, equilibrium_residuals},
      {2, "trivial spectrum", 1, trivial_spectrum},
      {3, "transcritical collision + zero eigenvalue", 10, transcritical_collisions},
      {4, "jacobian vs finite differences", 2, jacobian_vs_differences},
      {5, "low specialist-rate bifurcation structure", 30, low_specialist_structure},
      {6, "saddle-node LP7 at alpha_s = 1", 5, saddle_node_lp7},
      {7, "basin probabilities", 600, basin_probabilities},
      {8, "chaos window", 900, chaos_window},
      {9, "coarse stability map", 7200, coarse_stability_map},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.title << ") "
              << fmt("%.2fs", secs) << " of " << fmt("%.0fs", c.budget_s) << " budget"
              << (in_budget ? "" : " [over budget]") << ": " << o.detail << std::endl;
  }
  std::cout << (failed ? "FAILED " : "PASSED ") << failed << " failing criteria" << std::endl;
  return failed ? 1 : 0;
}
