#pragma once

// Dormand-Prince 5(4) with the Hairer-Wanner step controller and quintic
// dense output, over fixed-size Eigen vectors.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "genspec/model.hpp"

namespace genspec {

struct StepStats {
  long accepted = 0;
  long rejected = 0;
};

struct StepControl {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = 1.0;
};

// The first `kProjected` components are populations: values in
// [-kNegativityTolerance, 0) are clamped to zero after each accepted step,
// anything lower aborts the run.
template <int N, class F, int kProjected = kDim>
class Dopri5 {
 public:
  using Vec = Eigen::Matrix<double, N, 1>;

  Dopri5(F f, double t0, const Vec& y0, StepControl ctl) : f_(std::move(f)), ctl_(ctl) {
    if (!(ctl.rel_tol > 0.0 && ctl.abs_tol > 0.0 && ctl.max_step > 0.0))
      throw std::invalid_argument("integrator tolerances and max_step must be positive");
    reset(t0, y0);
    h_ = initial_step();
  }

  // Restart from a new state (after an external modification of y).
  void reset(double t, const Vec& y) {
    t_ = t_old_ = t;
    y_ = y_old_ = y;
    project(y_);
    k1_ = f_(t_, y_);
    fac_old_ = 1e-4;
  }

  double t() const { return t_; }
  const Vec& y() const { return y_; }
  const StepStats& stats() const { return stats_; }
  double last_step_start() const { return t_old_; }

  // One accepted step, never past t_limit.
  void step(double t_limit) {
    bool last_rejected = false;
    for (;;) {
      double h = std::min(h_, ctl_.max_step);
      const bool hits_limit = t_ + h >= t_limit;
      if (hits_limit) h = t_limit - t_;
      if (!(h > 1e-14 * std::max(1.0, std::fabs(t_)))) {
        std::ostringstream os;
        os << "step size underflow at t=" << t_ << " (h=" << h << ")";
        throw NumericalError(os.str());
      }
      const double err = attempt(h);
      if (!std::isfinite(err)) {
        h_ = 0.5 * h;
        ++stats_.rejected;
        last_rejected = true;
        continue;
      }
      const double fac11 = std::pow(err, 0.17);
      if (err <= 1.0) {
        double fac = fac11 / std::pow(fac_old_, 0.04);
        fac = std::clamp(fac / 0.9, 0.1, 5.0);
        double h_new = h / fac;
        if (last_rejected) h_new = std::min(h_new, h);
        fac_old_ = std::max(err, 1e-4);
        accept(h, hits_limit ? t_limit : t_ + h);
        // A step clipped by t_limit says little about the natural size.
        if (!hits_limit || h_new > h_) h_ = h_new;
        ++stats_.accepted;
        return;
      }
      h_ = h / std::min(5.0, fac11 / 0.9);
      ++stats_.rejected;
      last_rejected = true;
    }
  }

  // Dense output on [last_step_start(), t()].
  Vec dense(double t) const {
    const double h = t_ - t_old_;
    if (h == 0.0) return y_;
    const double th = (t - t_old_) / h;
    const double th1 = 1.0 - th;
    return r1_ + th * (r2_ + th1 * (r3_ + th * (r4_ + th1 * r5_)));
  }

 private:
  double initial_step() {
    const Vec sc = (ctl_.abs_tol + ctl_.rel_tol * y_.array().abs()).matrix();
    const double d0 = rms(y_, sc), d1 = rms(k1_, sc);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, ctl_.max_step);
    const Vec y1 = y_ + h0 * k1_;
    const double d2 = rms(f_(t_ + h0, y1) - k1_, sc) / h0;
    const double m = std::max(d1, d2);
    const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    return std::min({100.0 * h0, h1, ctl_.max_step});
  }

  static double rms(const Vec& v, const Vec& sc) {
    return std::sqrt((v.array() / sc.array()).square().mean());
  }

  double attempt(double h) {
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                     a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double t = t_;
    k2_ = f_(t + c2 * h, y_ + h * a21 * k1_);
    k3_ = f_(t + c3 * h, y_ + h * (a31 * k1_ + a32 * k2_));
    k4_ = f_(t + c4 * h, y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_));
    k5_ = f_(t + c5 * h, y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_));
    k6_ = f_(t + h, y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_));
    y_new_ = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
    k7_ = f_(t + h, y_new_);
    const Vec err = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    const Vec sc =
        (ctl_.abs_tol + ctl_.rel_tol * y_.array().abs().max(y_new_.array().abs())).matrix();
    return rms(err, sc);
  }

  void accept(double h, double t_new) {
    constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                     d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                     d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
    const bool projected = project(y_new_);
    const Vec ydiff = y_new_ - y_;
    const Vec bspl = h * k1_ - ydiff;
    r1_ = y_;
    r2_ = ydiff;
    r3_ = bspl;
    r4_ = ydiff - h * k7_ - bspl;
    r5_ = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
    t_old_ = t_;
    y_old_ = y_;
    t_ = t_new;
    y_ = y_new_;
    k1_ = projected ? f_(t_, y_) : k7_;
  }

  // Returns true when a component was clamped.
  bool project(Vec& y) const {
    bool changed = false;
    for (int i = 0; i < kProjected; ++i) {
      if (y[i] >= 0.0) continue;
      if (!(y[i] >= -kNegativityTolerance)) {
        std::ostringstream os;
        os << "state component " << kVarNames[i] << " = " << y[i]
           << " below the negativity tolerance at t=" << t_;
        throw NumericalError(os.str());
      }
      y[i] = 0.0;
      changed = true;
    }
    return changed;
  }

  F f_;
  StepControl ctl_;
  StepStats stats_;
  double t_ = 0, t_old_ = 0, h_ = 0, fac_old_ = 1e-4;
  Vec y_, y_old_, y_new_;
  Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_;
  Vec r1_, r2_, r3_, r4_, r5_;
};

template <int N, int kProjected = kDim, class F>
Dopri5<N, F, kProjected> make_dopri5(F f, double t0, const Eigen::Matrix<double, N, 1>& y0,
                                     StepControl ctl) {
  return Dopri5<N, F, kProjected>(std::move(f), t0, y0, ctl);
}

}  // namespace genspec
