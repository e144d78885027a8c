#pragma once

// The nine closed-form equilibria of the nondimensional model.
//
// Each equilibrium fixes which of x1, x2, z vanish and solves the reduced
// four-equation system for (x1, x2, z, zs); the infected-cell components
// follow from
//   y1 = (C/mu) x1 z,  y2 = (alpha/gamma2) x2 z,  ys1 = x1 (C z + alpha_s zs) / gamma1_s.
// The two interior coexistence states come from a quadratic in x1.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genspec/model.hpp"
#include "genspec/roots.hpp"

namespace genspec {

enum class EqId : int { v0 = 0, v1, v2, v3, v4, v5, v6, v7, v8 };

inline constexpr std::array<std::string_view, 9> kEqNames = {
    "v0", "v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8"};
inline constexpr std::array<std::string_view, 9> kEqLabels = {
    "trivial",  "v-free-1", "gen-free-1", "coex-1", "v-free-2",
    "spec-free", "gen-free-2", "coex-2",   "coex-3"};

inline std::string_view name(EqId id) { return kEqNames[static_cast<int>(id)]; }
inline std::string_view label(EqId id) { return kEqLabels[static_cast<int>(id)]; }

inline std::optional<EqId> eq_from_name(std::string_view n) {
  for (int i = 0; i < 9; ++i)
    if (kEqNames[i] == n) return static_cast<EqId>(i);
  return std::nullopt;
}

inline constexpr double kFeasibilityTolerance = 1e-12;

struct DerivedConstants {
  double A, B, C, D;
  double phi2, phi1, phi0;
};

inline DerivedConstants derived_constants(const Params& p) {
  validate(p);
  DerivedConstants k{};
  k.A = p.alpha * (p.gamma1 * p.kappa1 / (p.mu + p.gamma1) - p.nu);
  k.B = p.alpha * (p.kappa2 - p.nu);
  k.C = p.alpha * p.mu / (p.mu + p.gamma1);
  k.D = p.alpha_s * (p.nu_s - 1.0);
  const double amb = k.A - k.B;
  const double mix = k.D * p.alpha + k.C * p.alpha_s;
  k.phi2 = amb * (mix * p.beta2 - k.D * p.alpha);
  k.phi1 = amb * p.alpha * p.zeta_s * (p.beta2 - 1.0) +
           mix * (k.B * p.beta1 - p.zeta * p.beta2) + k.D * p.alpha * (p.zeta - k.B);
  k.phi0 = p.alpha * p.zeta_s * ((1.0 - p.beta2) * p.zeta + k.B * (p.beta1 - 1.0));
  return k;
}

inline double coexistence_discriminant(const DerivedConstants& k) {
  return k.phi1 * k.phi1 - 4.0 * k.phi2 * k.phi0;
}

struct CoexistenceRoots {
  // Descending: x1+ then x1-. A double root appears twice with fold = true.
  std::vector<double> roots;
  bool fold = false;
  bool linear = false;
};

inline CoexistenceRoots coexistence_roots(const DerivedConstants& k) {
  CoexistenceRoots out;
  const double scale = std::max({std::fabs(k.phi2), std::fabs(k.phi1), std::fabs(k.phi0)});
  if (scale == 0.0) throw NumericalError("coexistence quadratic is identically zero");
  if (std::fabs(k.phi2) < 1e-12) {
    if (std::fabs(k.phi1) < 1e-300) throw NumericalError("coexistence equation is degenerate");
    out.linear = true;
    out.roots.push_back(-k.phi0 / k.phi1);
    return out;
  }
  const double disc = coexistence_discriminant(k);
  const double disc_scale = k.phi1 * k.phi1 + std::fabs(4.0 * k.phi2 * k.phi0);
  if (std::fabs(disc) <= 1e-12 * disc_scale) {
    const double r = -k.phi1 / (2.0 * k.phi2);
    out.roots = {r, r};
    out.fold = true;
    return out;
  }
  if (disc < 0.0) return out;
  // Cancellation-free form of the quadratic formula.
  const double q = -0.5 * (k.phi1 + std::copysign(std::sqrt(disc), k.phi1));
  double r1 = q / k.phi2;
  double r2 = (q != 0.0) ? k.phi0 / q : -r1;
  if (r1 < r2) std::swap(r1, r2);
  out.roots = {r1, r2};
  return out;
}

inline CoexistenceRoots coexistence_roots(const Params& p) {
  return coexistence_roots(derived_constants(p));
}

struct Equilibrium {
  EqId id;
  State state;
  bool feasible;
  double residual;
  // Set on v7/v8 when the coexistence quadratic has a double root.
  bool fold = false;

  [[nodiscard]] std::string_view name() const { return genspec::name(id); }
};

inline bool feasibility(const State& s) {
  for (int i = 0; i < kDim; ++i)
    if (!(s[i] >= -kFeasibilityTolerance)) return false;
  return true;
}

inline bool feasibility(const Equilibrium& e) { return feasibility(e.state); }

namespace detail {

inline State assemble(const Params& p, const DerivedConstants& k, double x1, double x2,
                      double z, double zs) {
  State s;
  s[X1] = x1;
  s[X2] = x2;
  s[Z] = z;
  s[ZS] = zs;
  s[Y1] = k.C / p.mu * x1 * z;
  s[Y2] = p.alpha / p.gamma2 * x2 * z;
  s[YS1] = x1 / p.gamma1_s * (k.C * z + p.alpha_s * zs);
  return s;
}

inline Equilibrium finish(const Params& p, EqId id, State s) {
  Equilibrium e{id, s, false, 0.0};
  const bool finite = s.allFinite();
  e.residual = finite ? vector_field(p, s).norm() : std::numeric_limits<double>::infinity();
  e.feasible = finite && feasibility(s);
  if (e.feasible) e.state = s.cwiseMax(0.0);
  return e;
}

}  // namespace detail

inline std::vector<Equilibrium> all_equilibria(const Params& p) {
  const DerivedConstants k = derived_constants(p);
  std::vector<Equilibrium> out;
  out.reserve(9);
  const auto add = [&](EqId id, double x1, double x2, double z, double zs) {
    out.push_back(detail::finish(p, id, detail::assemble(p, k, x1, x2, z, zs)));
  };

  add(EqId::v0, 0, 0, 0, 0);
  add(EqId::v1, 1, 0, 0, 0);

  {
    const double x1 = -p.zeta_s / k.D;
    add(EqId::v2, x1, 0, 0, 1.0 / p.alpha_s + p.zeta_s / (p.alpha_s * k.D));
  }
  {
    // x1 from the z-equation, zs from the zs-equation with z eliminated
    // through the x1-equation, then z.
    const double x1 = p.zeta / k.A;
    const double t1 = p.alpha * p.zeta_s / (k.C * x1), t3 = k.D * p.alpha / k.C;
    const double denom = t1 + p.alpha_s + t3;
    // Cancellation residue at the pole is treated as an exact zero.
    const double scale = std::fabs(t1) + p.alpha_s + std::fabs(t3);
    const double zs = std::fabs(denom) <= 1e-12 * scale
                          ? std::numeric_limits<double>::infinity()
                          : (1.0 - x1) / denom;
    add(EqId::v3, x1, 0, (1.0 - x1 - p.alpha_s * zs) / p.alpha, zs);
  }

  add(EqId::v4, 0, p.beta1 / p.beta2, 0, 0);
  {
    const double x2 = p.zeta / k.B;
    add(EqId::v5, 0, x2, p.beta1 / p.alpha - p.beta2 * p.zeta / (p.alpha * k.B), 0);
  }
  add(EqId::v6, -p.zeta_s / k.D, p.beta1 / p.beta2 + p.zeta_s / k.D, 0,
      (p.beta2 - p.beta1) / (p.alpha_s * p.beta2));

  const CoexistenceRoots roots = coexistence_roots(k);
  for (std::size_t i = 0; i < roots.roots.size(); ++i) {
    const double x1 = roots.roots[i];
    const double x2 = (p.zeta - k.A * x1) / k.B;
    const double z = (p.beta1 - p.beta2 * (x1 + x2)) / p.alpha;
    const double zs = (1.0 - p.beta1 + (p.beta2 - 1.0) * (x1 + x2)) / p.alpha_s;
    add(i == 0 ? EqId::v7 : EqId::v8, x1, x2, z, zs);
    out.back().fold = roots.fold;
  }
  return out;
}

inline std::optional<Equilibrium> find_equilibrium(const std::vector<Equilibrium>& eqs, EqId id) {
  for (const auto& e : eqs)
    if (e.id == id) return e;
  return std::nullopt;
}

inline std::optional<Equilibrium> equilibrium(const Params& p, EqId id) {
  return find_equilibrium(all_equilibria(p), id);
}

// Pairs of distinct equilibria closer than tol; these are reported, never merged.
inline std::vector<std::pair<EqId, EqId>> collisions(const std::vector<Equilibrium>& eqs,
                                                      double tol = 1e-8) {
  std::vector<std::pair<EqId, EqId>> out;
  for (std::size_t i = 0; i < eqs.size(); ++i)
    for (std::size_t j = i + 1; j < eqs.size(); ++j)
      if (eqs[i].state.allFinite() && eqs[j].state.allFinite() &&
          (eqs[i].state - eqs[j].state).norm() < tol)
        out.emplace_back(eqs[i].id, eqs[j].id);
  return out;
}

}  // namespace genspec
