#include <gtest/gtest.h>

#include "genspec/dynamics.hpp"
#include "genspec/lyapunov.hpp"
#include "test_support.hpp"

using namespace genspec;

namespace {

struct Regime {
  double alpha, alpha_s;
};

constexpr Regime kSink{0.2, 0.2}, kCycle{0.5, 0.7}, kChaos{0.5, 2.0};

LleResult run(Regime r, const LleConfig& cfg = {}, const std::optional<Tangent>& v0 = std::nullopt) {
  const Params p = default_params(r.alpha, r.alpha_s);
  return lle(p, reference_initial_state(p, 0.5, 0.5), cfg, v0);
}

}  // namespace

TEST(Lyapunov, SinkContracts) {
  const auto r = run(kSink);
  EXPECT_LT(r.lle, -1e-3);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.history.size(), 20000u);
}

TEST(Lyapunov, LimitCycleHasZeroExponent) { EXPECT_LT(std::fabs(run(kCycle).lle), 1e-2); }

TEST(Lyapunov, ChaosIsPositive) { EXPECT_GT(run(kChaos).lle, 1e-3); }

TEST(Lyapunov, RenormalizationIntervalInvariance) {
  LleConfig doubled;
  doubled.renorm_interval = 2.0;
  for (Regime r : {kSink, kCycle, kChaos})
    EXPECT_LT(std::fabs(run(r).lle - run(r, doubled).lle), 5e-3) << r.alpha << "," << r.alpha_s;
}

TEST(Lyapunov, InitialTangentInvariance) {
  genspec::testing::Gen g(61);
  for (Regime r : {kSink, kCycle, kChaos}) {
    const double a = run(r, {}, g.unit_vector()).lle;
    const double b = run(r, {}, g.unit_vector()).lle;
    EXPECT_LT(std::fabs(a - b), 2e-3) << r.alpha << "," << r.alpha_s;
  }
}

TEST(Lyapunov, GrowthRatePredictsDivergenceTime) {
  const Params p = default_params(kChaos.alpha, kChaos.alpha_s);
  const double rate = run(kChaos).lle;
  const double predicted = std::log(0.1 / 1e-4) / rate;

  IntegratorConfig cfg;
  cfg.t_end = 4000.0;
  cfg.sample_dt = 1.0;
  const auto a = integrate(p, reference_initial_state(p, 0.5, 0.5), cfg);
  const auto b = integrate(p, reference_initial_state(p, 0.5001, 0.5001), cfg);
  double observed = -1.0;
  for (std::size_t i = 0; i < a.t.size(); ++i)
    if ((a.states[i] - b.states[i]).norm() > 0.1) {
      observed = a.t[i];
      break;
    }
  ASSERT_GT(observed, 0.0);
  EXPECT_GT(observed, predicted / 3.0);
  EXPECT_LT(observed, predicted * 3.0);
}

TEST(Lyapunov, ConfigValidation) {
  const Params p = default_params(0.2, 0.2);
  LleConfig bad;
  bad.renorm_interval = 0.0;
  EXPECT_THROW(lle(p, reference_initial_state(p, 0.5, 0.5), bad), std::invalid_argument);
  bad = {};
  bad.accumulation = 5.0;
  EXPECT_THROW(lle(p, reference_initial_state(p, 0.5, 0.5), bad), std::invalid_argument);
  EXPECT_THROW(lle(p, reference_initial_state(p, 0.5, 0.5), {}, Tangent::Zero()),
               std::invalid_argument);
}

TEST(Lyapunov, NonConvergenceIsReportedNotThrown) {
  LleConfig short_run;
  short_run.transient = 0.0;
  short_run.accumulation = 20.0;
  short_run.tolerance = 1e-12;
  const auto r = run(kChaos, short_run);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.history.size(), 20u);
}
