#pragma once

// Linear stability of equilibria and the codimension-one bifurcation loci in
// the (alpha, alpha_s) plane.
//
// Spectra always come from the full 7x7 Jacobian; the factored characteristic
// polynomials are only used by the tests as independent oracles. The one
// exception is the specialist-free Hopf locus, a Routh-Hurwitz condition on the
// cubic factor of the v5 spectrum.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "genspec/equilibria.hpp"
#include "genspec/model.hpp"
#include "genspec/roots.hpp"

namespace genspec {

inline constexpr double kMarginalTolerance = 1e-7;
inline constexpr double kHopfMinFrequency = 1e-6;

using Spectrum = std::array<std::complex<double>, kDim>;

enum class Stability { stable, unstable, saddle, marginal };

inline std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::saddle: return "saddle";
    case Stability::marginal: return "marginal";
  }
  return "?";
}

struct StabilityReport {
  EqId id;
  Spectrum eigenvalues;  // sorted by real part, descending
  double max_real;
  Stability classification;
};

// Sorted by descending real part, ties broken by descending imaginary part.
inline Spectrum spectrum(const Matrix7& J) {
  Eigen::EigenSolver<Matrix7> solver(J, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
  Spectrum ev;
  for (int i = 0; i < kDim; ++i) ev[i] = solver.eigenvalues()[i];
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return ev;
}

inline Stability classify_spectrum(const Spectrum& ev) {
  const double max_real = ev.front().real();
  if (std::fabs(max_real) < kMarginalTolerance) return Stability::marginal;
  if (max_real < 0.0) return Stability::stable;
  const bool has_negative = std::any_of(ev.begin(), ev.end(), [](const auto& l) {
    return l.real() < -kMarginalTolerance;
  });
  return has_negative ? Stability::saddle : Stability::unstable;
}

inline StabilityReport classify_equilibrium(const Params& p, const Equilibrium& e) {
  if (!e.state.allFinite())
    throw std::invalid_argument("equilibrium " + std::string(e.name()) + " is not finite");
  if (!(e.residual <= 1e-8 * std::max(1.0, e.state.norm())))
    throw std::invalid_argument("state of " + std::string(e.name()) + " is not an equilibrium");
  StabilityReport r{e.id, spectrum(detail::jacobian_unchecked(p, e.state)), 0.0,
                    Stability::marginal};
  r.max_real = r.eigenvalues.front().real();
  r.classification = classify_spectrum(r.eigenvalues);
  return r;
}

inline std::vector<StabilityReport> classify_all(const Params& p,
                                                 const std::vector<Equilibrium>& eqs) {
  std::vector<StabilityReport> out;
  for (const auto& e : eqs)
    if (e.state.allFinite()) out.push_back(classify_equilibrium(p, e));
  return out;
}

// ---------------------------------------------------------------------------
// Analytic bifurcation curves

enum class CurveLabel { T12, T13, T23, T26, T37, T45, T57, T67, H5 };
enum class CurveKind { transcritical, hopf };
enum class Rate { alpha, alpha_s };

inline std::string_view to_string(Rate r) { return r == Rate::alpha ? "alpha" : "alpha_s"; }

struct BifurcationCurve {
  CurveLabel label;
  CurveKind kind;
  Rate solves_for;        // the rate the closed form returns
  bool depends_on_other;  // alpha_s = f(alpha) when true
  EqId first, second;     // colliding pair (Hopf: host twice)
};

inline constexpr std::array<BifurcationCurve, 9> kAnalyticCurves = {{
    {CurveLabel::T12, CurveKind::transcritical, Rate::alpha_s, false, EqId::v1, EqId::v2},
    {CurveLabel::T13, CurveKind::transcritical, Rate::alpha, false, EqId::v1, EqId::v3},
    {CurveLabel::T23, CurveKind::transcritical, Rate::alpha_s, true, EqId::v2, EqId::v3},
    {CurveLabel::T26, CurveKind::transcritical, Rate::alpha_s, false, EqId::v2, EqId::v6},
    {CurveLabel::T37, CurveKind::transcritical, Rate::alpha_s, true, EqId::v3, EqId::v7},
    {CurveLabel::T45, CurveKind::transcritical, Rate::alpha, false, EqId::v4, EqId::v5},
    {CurveLabel::T57, CurveKind::transcritical, Rate::alpha, false, EqId::v5, EqId::v7},
    {CurveLabel::T67, CurveKind::transcritical, Rate::alpha_s, true, EqId::v6, EqId::v7},
    {CurveLabel::H5, CurveKind::hopf, Rate::alpha, false, EqId::v5, EqId::v5},
}};

inline const BifurcationCurve& curve(CurveLabel l) {
  return kAnalyticCurves[static_cast<int>(l)];
}

inline std::string_view to_string(CurveLabel l) {
  static constexpr std::array<std::string_view, 9> names = {"T12", "T13", "T23", "T26", "T37",
                                                            "T45", "T57", "T67", "H5"};
  return names[static_cast<int>(l)];
}

// Critical rate on a transcritical curve. For T23, T37 and T67 the result is
// alpha_s as a function of p.alpha; nullopt at a pole of the closed form.
inline std::optional<double> transcritical_value(CurveLabel label, const Params& p) {
  validate(p);
  const double g1mu = p.gamma1 + p.mu;
  const double k0 = (p.kappa1 - p.nu) * p.gamma1 - p.mu * p.nu;
  const auto ratio = [](double num, double den) -> std::optional<double> {
    if (den == 0.0 || std::fabs(den) < 1e-14 * std::fabs(num)) return std::nullopt;
    return num / den;
  };
  switch (label) {
    case CurveLabel::T13:
      return ratio(g1mu * p.zeta, k0);
    case CurveLabel::T12:
      return p.zeta_s / (1.0 - p.nu_s);
    case CurveLabel::T26:
      return p.beta2 / p.beta1 * p.zeta_s / (1.0 - p.nu_s);
    case CurveLabel::T23:
      return ratio(p.zeta_s * k0 * p.alpha, p.zeta * g1mu * (1.0 - p.nu_s));
    case CurveLabel::T37: {
      // v3 meets the coexistence branch where x1 = zeta/A solves the quadratic.
      const double k1 = (p.beta1 - 1.0) * (1.0 - p.nu_s) * p.gamma1 -
                        (1.0 + (p.beta1 - 1.0) * p.nu_s) * p.mu;
      const double k2 =
          g1mu * ((1.0 + p.nu_s * (p.beta2 - 1.0)) * p.mu - (1.0 - p.nu_s) * (p.beta2 - 1.0) * p.gamma1) *
          p.zeta;
      const double num = p.alpha * (k0 * k0 * (p.beta1 - 1.0) * p.alpha -
                                    k0 * p.zeta * (p.beta2 - 1.0) * g1mu);
      const auto r = ratio(num, k0 * k1 * p.alpha + k2);
      if (!r) return std::nullopt;
      return p.zeta_s / p.zeta * *r;
    }
    case CurveLabel::T45:
      return p.beta2 / p.beta1 * p.zeta / (p.kappa2 - p.nu);
    case CurveLabel::T57:
      return ratio((p.beta2 - 1.0) * p.zeta, (p.beta1 - 1.0) * (p.kappa2 - p.nu));
    case CurveLabel::T67: {
      // v6 meets the coexistence branch where z = 0, i.e. x1 + x2 = beta1/beta2.
      const double num = p.alpha * p.beta2 * p.zeta_s *
                         (p.kappa1 * p.gamma1 - p.kappa2 * (p.mu + p.gamma1));
      const double den = (1.0 - p.nu_s) * (p.mu + p.gamma1) *
                         (p.beta2 * p.zeta - p.beta1 * p.alpha * (p.kappa2 - p.nu));
      return ratio(num, den);
    }
    case CurveLabel::H5:
      break;
  }
  throw std::invalid_argument("not a transcritical curve: " + std::string(to_string(label)));
}

// Coefficients (a3, a2, a1, a0) of the cubic factor of the v5 spectrum.
inline std::array<double, 4> v5_cubic(const Params& p) {
  const double kn = p.kappa2 - p.nu;
  const double a = p.alpha;
  return {a * kn * kn,
          kn * ((a * p.kappa2 + p.beta2) * p.zeta + p.gamma2 * a * kn),
          (p.beta2 * (p.kappa2 + p.nu) * p.zeta - kn * (a * p.beta1 * p.nu - p.beta2 * p.gamma2)) *
              p.zeta,
          kn * (p.beta1 * a * kn - p.zeta * p.beta2) * p.gamma2 * p.zeta};
}

// Hopf locus of the specialist-free state: alpha where the v5 cubic has a purely
// imaginary pair (a2*a1 = a3*a0 with a1/a3 > 0), searched on (T45, 10].
inline std::optional<double> hopf_locus_v5(const Params& p, double alpha_max = 10.0) {
  const double lo = *transcritical_value(CurveLabel::T45, p);
  if (!(alpha_max > lo)) return std::nullopt;
  const auto g = [&](double a) {
    const auto c = v5_cubic(p.with_rates(a, p.alpha_s));
    return c[1] * c[2] - c[0] * c[3];
  };
  // The T45 endpoint itself has a0 = 0; start just inside the bracket.
  const double start = lo * (1.0 + 1e-9);
  const auto root = find_root(g, start, alpha_max, 1e-10);
  if (!root) return std::nullopt;
  const auto c = v5_cubic(p.with_rates(*root, p.alpha_s));
  if (!(c[2] / c[0] > 0.0)) return std::nullopt;
  return root;
}

inline std::optional<double> curve_value(CurveLabel label, const Params& p) {
  return label == CurveLabel::H5 ? hopf_locus_v5(p) : transcritical_value(label, p);
}

// alpha_s of a curve at the given alpha when the curve is a graph over alpha.
inline std::optional<double> curve_alpha_s(CurveLabel label, const Params& p, double alpha) {
  const auto& c = curve(label);
  if (c.solves_for != Rate::alpha_s)
    throw std::invalid_argument(std::string(to_string(label)) + " is a vertical line");
  return curve_value(label, p.with_rates(alpha, p.alpha_s));
}

struct CurveIntersection {
  double alpha;
  double alpha_s;
  CurveLabel first, second;
};

// Intersection of two analytic curves with alpha in [alpha_lo, alpha_hi],
// located to 1e-10. Throws for identical curves; nullopt when none.
inline std::optional<CurveIntersection> curve_intersection(const Params& p, CurveLabel a,
                                                           CurveLabel b, double alpha_lo,
                                                           double alpha_hi) {
  if (a == b) throw std::invalid_argument("curve intersection of a curve with itself");
  const auto& ca = curve(a);
  const auto& cb = curve(b);
  const bool va = ca.solves_for == Rate::alpha;
  const bool vb = cb.solves_for == Rate::alpha;
  const auto in_bracket = [&](double x) { return x >= alpha_lo && x <= alpha_hi; };

  if (va && vb) return std::nullopt;  // parallel vertical lines
  if (va || vb) {
    const CurveLabel vert = va ? a : b;
    const CurveLabel other = va ? b : a;
    const auto x = curve_value(vert, p);
    if (!x || !in_bracket(*x)) return std::nullopt;
    const auto y = curve_alpha_s(other, p, *x);
    if (!y) return std::nullopt;
    return CurveIntersection{*x, *y, a, b};
  }
  if (!ca.depends_on_other && !cb.depends_on_other) return std::nullopt;  // parallel horizontals

  const auto diff = [&](double x) {
    const auto ya = curve_alpha_s(a, p, x);
    const auto yb = curve_alpha_s(b, p, x);
    if (!ya || !yb) return std::numeric_limits<double>::quiet_NaN();
    return *ya - *yb;
  };
  // Scan for a sign change so poles inside the bracket are stepped over.
  constexpr int n = 400;
  double x_prev = alpha_lo;
  double f_prev = diff(x_prev);
  for (int i = 1; i <= n; ++i) {
    const double x = alpha_lo + (alpha_hi - alpha_lo) * i / n;
    const double f = diff(x);
    if (std::isfinite(f_prev) && std::isfinite(f) && (f_prev == 0.0 || (f_prev > 0.0) != (f > 0.0))) {
      const auto root = find_root(diff, x_prev, x, 1e-12);
      if (root && std::fabs(diff(*root)) < 1e-6) {
        return CurveIntersection{*root, *curve_alpha_s(a, p, *root), a, b};
      }
    }
    x_prev = x;
    f_prev = f;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Numerical scans along one rate

inline Params with_rate(const Params& p, Rate axis, double value) {
  return axis == Rate::alpha ? p.with_rates(value, p.alpha_s) : p.with_rates(p.alpha, value);
}

inline double rate_of(const Params& p, Rate axis) {
  return axis == Rate::alpha ? p.alpha : p.alpha_s;
}

struct HopfPoint {
  double parameter;
  double omega;
};

struct HopfScan {
  std::vector<HopfPoint> points;
  // Parameter intervals where the branch is absent or infeasible.
  std::vector<std::pair<double, double>> gaps;
};

namespace detail {

struct ComplexPairState {
  double max_real;
  double omega;
};

// Largest real part among complex-pair eigenvalues of a feasible equilibrium.
inline std::optional<ComplexPairState> complex_pair_state(const Params& p, EqId id) {
  const auto e = equilibrium(p, id);
  if (!e || !e->feasible || !e->state.allFinite()) return std::nullopt;
  const Spectrum ev = spectrum(jacobian_unchecked(p, e->state));
  std::optional<ComplexPairState> best;
  for (const auto& l : ev)
    if (std::fabs(l.imag()) > kHopfMinFrequency && (!best || l.real() > best->max_real))
      best = ComplexPairState{l.real(), std::fabs(l.imag())};
  return best;
}

}  // namespace detail

// Samples n points on [lo, hi], tracks the leading complex pair and bisects
// every sign change of its real part to 1e-8 in the parameter.
inline HopfScan hopf_scan(const Params& p, Rate axis, EqId id, double lo, double hi, int n) {
  if (n < 2 || !(hi > lo)) throw std::invalid_argument("hopf_scan needs n >= 2 and lo < hi");
  HopfScan out;
  std::vector<double> grid(n);
  std::vector<std::optional<detail::ComplexPairState>> state(n);
  std::vector<bool> present(n);
  for (int i = 0; i < n; ++i) {
    grid[i] = lo + (hi - lo) * i / (n - 1);
    const Params q = with_rate(p, axis, grid[i]);
    const auto e = equilibrium(q, id);
    present[i] = e && e->feasible && e->state.allFinite();
    if (present[i]) state[i] = detail::complex_pair_state(q, id);
  }
  for (int i = 0; i < n;) {
    if (present[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && !present[j + 1]) ++j;
    out.gaps.emplace_back(grid[i], grid[j]);
    i = j + 1;
  }
  for (int i = 0; i + 1 < n; ++i) {
    if (!state[i] || !state[i + 1]) continue;
    if ((state[i]->max_real > 0.0) == (state[i + 1]->max_real > 0.0)) continue;
    double a = grid[i], b = grid[i + 1];
    double fa = state[i]->max_real;
    bool lost = false;
    while (b - a > 1e-8) {
      const double m = 0.5 * (a + b);
      const auto s = detail::complex_pair_state(with_rate(p, axis, m), id);
      if (!s) {
        lost = true;
        break;
      }
      if ((s->max_real > 0.0) == (fa > 0.0)) {
        a = m;
        fa = s->max_real;
      } else {
        b = m;
      }
    }
    if (lost) continue;
    const double at = 0.5 * (a + b);
    const auto s = detail::complex_pair_state(with_rate(p, axis, at), id);
    // A pair that appears or vanishes produces a jump, not a crossing.
    if (s && s->omega > kHopfMinFrequency && std::fabs(s->max_real) < 1e-5)
      out.points.push_back({at, s->omega});
  }
  return out;
}

// Saddle-node of the coexistence pair: zeros of the quadratic's discriminant
// along one rate, refined to 1e-12.
inline std::vector<double> coexistence_folds(const Params& p, Rate axis, double lo, double hi,
                                             int n = 400) {
  const auto disc = [&](double t) {
    return coexistence_discriminant(derived_constants(with_rate(p, axis, t)));
  };
  std::vector<double> out;
  double t_prev = lo, d_prev = disc(lo);
  for (int i = 1; i <= n; ++i) {
    const double t = lo + (hi - lo) * i / n;
    const double d = disc(t);
    if ((d_prev > 0.0) != (d > 0.0)) {
      if (const auto r = find_root(disc, t_prev, t, 1e-12)) out.push_back(*r);
    }
    t_prev = t;
    d_prev = d;
  }
  return out;
}

}  // namespace genspec
