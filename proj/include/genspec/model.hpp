#pragma once

// Nondimensional generalist/specialist host-pathogen model: parameters,
// state layout, vector field and analytic Jacobian.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace genspec {

// Raised when a parameter set violates the modelling assumptions
// (positivity, persistence of uninfected cells, MOI below burst size).
struct ModelAssumptionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised by numerical procedures that cannot produce a trustworthy result
// (step-size underflow, orthant violation, eigen-solver failure).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kDim = 7;

using State = Eigen::Matrix<double, kDim, 1>;
using Matrix7 = Eigen::Matrix<double, kDim, kDim>;

// Component order of State, Matrix7 rows/columns and every CSV layout.
enum Var : int { X1 = 0, X2, YS1, Y1, Y2, ZS, Z };

inline constexpr std::array<std::string_view, kDim> kVarNames = {
    "x1", "x2", "ys1", "y1", "y2", "zs", "z"};

// States may dip below zero by integration truncation up to this amount.
inline constexpr double kNegativityTolerance = 1e-9;

struct DimensionalParams {
  double beta1, beta2;
  double delta1, delta2;
  double K;
  double alpha, alpha_s;
  double mu;
  double gamma1_s, gamma1, gamma2;
  double kappa_s, kappa1, kappa2;
  double nu_s, nu;
  double zeta_s, zeta;
};

struct Params {
  double beta1 = 0, beta2 = 0;
  double alpha = 0, alpha_s = 0;
  double mu = 0;
  double gamma1_s = 0, gamma1 = 0, gamma2 = 0;
  double kappa1 = 0, kappa2 = 0;
  double nu_s = 0, nu = 0;
  double zeta_s = 0, zeta = 0;

  [[nodiscard]] Params with_rates(double a, double a_s) const {
    Params q = *this;
    q.alpha = a;
    q.alpha_s = a_s;
    return q;
  }

  // Initial x2 used by basin sampling: carrying capacity of x2 without virus.
  [[nodiscard]] double x2_capacity() const { return beta1 / beta2; }

  friend bool operator==(const Params&, const Params&) = default;
};

// Field table shared by serialization, validation and CLI echo.
struct ParamField {
  std::string_view name;
  double Params::*member;
};

inline constexpr std::array<ParamField, 14> kParamFields = {{
    {"beta1", &Params::beta1},       {"beta2", &Params::beta2},
    {"alpha", &Params::alpha},       {"alpha_s", &Params::alpha_s},
    {"mu", &Params::mu},             {"gamma1_s", &Params::gamma1_s},
    {"gamma1", &Params::gamma1},     {"gamma2", &Params::gamma2},
    {"kappa1", &Params::kappa1},     {"kappa2", &Params::kappa2},
    {"nu_s", &Params::nu_s},         {"nu", &Params::nu},
    {"zeta_s", &Params::zeta_s},     {"zeta", &Params::zeta},
}};

// Reference parameter set used throughout the analysis; the infection
// rates are placeholders since they are the bifurcation parameters.
inline Params default_params(double alpha = 1.0, double alpha_s = 1.0) {
  Params p;
  p.beta1 = 1.5;
  p.beta2 = 2.0;
  p.mu = 0.1;
  p.gamma1_s = p.gamma1 = p.gamma2 = 0.25;
  p.kappa1 = p.kappa2 = 1.0;
  p.nu_s = p.nu = 0.5;
  p.zeta_s = p.zeta = 0.22;
  p.alpha = alpha;
  p.alpha_s = alpha_s;
  return p;
}

inline void validate(const Params& p) {
  for (const auto& f : kParamFields) {
    const double v = p.*(f.member);
    if (!(std::isfinite(v) && v > 0.0))
      throw ModelAssumptionError("parameter " + std::string(f.name) +
                                 " must be finite and strictly positive");
  }
  if (!(p.nu_s < 1.0))
    throw ModelAssumptionError("nu_s must be < 1 (specialist MOI below burst size)");
  if (!(p.nu < p.kappa1 && p.nu < p.kappa2))
    throw ModelAssumptionError("nu must be < kappa1 and < kappa2");
}

// Soft assumptions: true formulas stay valid, only interpretation changes.
inline std::vector<std::string> warnings(const Params& p) {
  std::vector<std::string> out;
  if (p.gamma1 * p.kappa1 / (p.mu + p.gamma1) <= p.nu)
    out.emplace_back("A <= 0: gamma1*kappa1/(mu+gamma1) <= nu (mutation rate not small)");
  if (p.beta1 == p.beta2)
    out.emplace_back("beta1 == beta2: gen-free-2 state is degenerate");
  return out;
}

inline void validate(const DimensionalParams& d) {
  const double fields[] = {d.beta1,    d.beta2,  d.delta1,  d.delta2,  d.K,
                           d.alpha,    d.alpha_s, d.mu,     d.gamma1_s, d.gamma1,
                           d.gamma2,   d.kappa_s, d.kappa1, d.kappa2,  d.nu_s,
                           d.nu,       d.zeta_s,  d.zeta};
  for (double v : fields)
    if (!(std::isfinite(v) && v > 0.0))
      throw ModelAssumptionError("dimensional parameters must be finite and strictly positive");
  if (!(d.beta1 > d.delta1 && d.beta2 > d.delta2))
    throw ModelAssumptionError("growth rates must exceed death rates (beta_i > delta_i)");
  if (d.beta1 == d.beta2 || d.delta1 == d.delta2)
    throw ModelAssumptionError("cell types must differ: beta1 != beta2 and delta1 != delta2");
}

// Time scale (beta1-delta1)^-1, cell scale x_max, virion scale x_max*kappa_s.
inline Params nondimensionalize(const DimensionalParams& d) {
  validate(d);
  const double r = d.beta1 - d.delta1;
  const double infection_scale = d.kappa_s * d.K / d.beta1;
  Params p;
  p.beta1 = (d.beta2 - d.delta2) / r;
  p.beta2 = d.beta2 / d.beta1;
  p.alpha = infection_scale * d.alpha;
  p.alpha_s = infection_scale * d.alpha_s;
  p.nu = d.nu / d.kappa_s;
  p.nu_s = d.nu_s / d.kappa_s;
  p.kappa1 = d.kappa1 / d.kappa_s;
  p.kappa2 = d.kappa2 / d.kappa_s;
  p.mu = d.mu / r;
  p.gamma1_s = d.gamma1_s / r;
  p.gamma1 = d.gamma1 / r;
  p.gamma2 = d.gamma2 / r;
  p.zeta_s = d.zeta_s / r;
  p.zeta = d.zeta / r;
  try {
    validate(p);
  } catch (const ModelAssumptionError& e) {
    throw ModelAssumptionError(std::string("nondimensional parameters violate model assumptions: ") +
                               e.what());
  }
  return p;
}

namespace detail {

// Unchecked vector field; also evaluated at infeasible equilibria.
template <class Vec>
inline State vector_field(const Params& p, const Vec& s) {
  const double x1 = s[X1], x2 = s[X2], ys1 = s[YS1], y1 = s[Y1], y2 = s[Y2],
               zs = s[ZS], z = s[Z];
  const double x = x1 + x2;
  State d;
  d[X1] = x1 * (1.0 - x) - x1 * p.alpha * z - x1 * p.alpha_s * zs;
  d[X2] = x2 * (p.beta1 - p.beta2 * x) - x2 * p.alpha * z;
  d[YS1] = p.alpha_s * zs * x1 + p.mu * y1 - p.gamma1_s * ys1;
  d[Y1] = p.alpha * z * x1 - p.mu * y1 - p.gamma1 * y1;
  d[Y2] = p.alpha * z * x2 - p.gamma2 * y2;
  d[ZS] = p.gamma1_s * ys1 - p.nu_s * p.alpha_s * zs * x1 - p.zeta_s * zs;
  d[Z] = p.kappa1 * p.gamma1 * y1 + p.kappa2 * p.gamma2 * y2 - p.nu * p.alpha * z * x -
         p.zeta * z;
  return d;
}

template <class Vec>
inline Matrix7 jacobian_unchecked(const Params& p, const Vec& s) {
  const double x1 = s[X1], x2 = s[X2], zs = s[ZS], z = s[Z];
  const double x = x1 + x2;
  Matrix7 J = Matrix7::Zero();

  J(X1, X1) = 1.0 - 2.0 * x1 - x2 - p.alpha * z - p.alpha_s * zs;
  J(X1, X2) = -x1;
  J(X1, ZS) = -p.alpha_s * x1;
  J(X1, Z) = -p.alpha * x1;

  J(X2, X1) = -p.beta2 * x2;
  J(X2, X2) = p.beta1 - p.beta2 * x1 - 2.0 * p.beta2 * x2 - p.alpha * z;
  J(X2, Z) = -p.alpha * x2;

  J(YS1, X1) = p.alpha_s * zs;
  J(YS1, YS1) = -p.gamma1_s;
  J(YS1, Y1) = p.mu;
  J(YS1, ZS) = p.alpha_s * x1;

  J(Y1, X1) = p.alpha * z;
  J(Y1, Y1) = -p.mu - p.gamma1;
  J(Y1, Z) = p.alpha * x1;

  J(Y2, X2) = p.alpha * z;
  J(Y2, Y2) = -p.gamma2;
  J(Y2, Z) = p.alpha * x2;

  J(ZS, X1) = -p.nu_s * p.alpha_s * zs;
  J(ZS, YS1) = p.gamma1_s;
  J(ZS, ZS) = -p.nu_s * p.alpha_s * x1 - p.zeta_s;

  J(Z, X1) = -p.nu * p.alpha * z;
  J(Z, X2) = -p.nu * p.alpha * z;
  J(Z, Y1) = p.kappa1 * p.gamma1;
  J(Z, Y2) = p.kappa2 * p.gamma2;
  J(Z, Z) = -p.nu * p.alpha * x - p.zeta;
  return J;
}

}  // namespace detail

inline void check_state(const State& s) {
  for (int i = 0; i < kDim; ++i)
    if (!(s[i] >= -kNegativityTolerance))
      throw std::invalid_argument("state component " + std::string(kVarNames[i]) +
                                  " is negative or not finite");
}

inline State rhs(const Params& p, const State& s) {
  check_state(s);
  return detail::vector_field(p, s);
}

inline Matrix7 jacobian(const Params& p, const State& s) {
  check_state(s);
  return detail::jacobian_unchecked(p, s);
}

inline double state_norm(const State& s) { return s.norm(); }

inline State make_state(double x1, double x2, double ys1, double y1, double y2,
                        double zs, double z) {
  State s;
  s << x1, x2, ys1, y1, y2, zs, z;
  return s;
}

// Host cells at virus-free capacity with the given initial viral loads.
inline State reference_initial_state(const Params& p, double zs0, double z0) {
  return make_state(1.0, p.x2_capacity(), 0.0, 0.0, 0.0, zs0, z0);
}

}  // namespace genspec
