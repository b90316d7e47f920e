#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cra/composition.hpp"
#include "cra/mttf.hpp"
#include "oracles.hpp"

namespace {

using cra::Adapter;
using cra::AdapterKind;
using cra::Measure;
using cra::ReliabilityFunction;
using cra::TimeUnit;

const cra::AgingParams kAging{1e3, 1e6, 2.0, 0.7, std::nullopt};
const cra::ThermalParams kThermal{2.0, 5.0, 300.0, 300.0};

cra::AdapterContext context() { return {"pu", kThermal, kAging, 2.0}; }

TEST(Adapter, BridgeSecondsToHours) {
  const auto out = cra::apply_adapter(Adapter::bridge(TimeUnit::Seconds, TimeUnit::Hours),
                                      Measure::failure_rate(1e-3 / 3600.0, TimeUnit::Seconds), context());
  EXPECT_EQ(out.tag, cra::MeasureTag::FailureRate);
  EXPECT_EQ(out.time_unit, TimeUnit::Hours);
  EXPECT_NEAR(out.scalar(), 1e-3, 1e-18);
}

TEST(Adapter, BridgeRoundTripIsIdentity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-12.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double rate = std::pow(10.0, u(rng));
    auto m = Measure::failure_rate(rate, TimeUnit::Seconds);
    m = cra::apply_adapter(Adapter::bridge(TimeUnit::Seconds, TimeUnit::Hours), m, context());
    m = cra::apply_adapter(Adapter::bridge(TimeUnit::Hours, TimeUnit::Seconds), m, context());
    ASSERT_NEAR(m.scalar(), rate, rate * 1e-15);
  }
}

TEST(Adapter, ZeroFitGivesConstantOne) {
  const auto out = cra::apply_adapter(Adapter::of(AdapterKind::FitToReliability), Measure::fit_rate(0.0), context());
  for (double t : {0.0, 10.0, 1e8}) EXPECT_EQ(out.reliability()(t), 1.0);
}

TEST(Adapter, FitToReliabilityUsesPerHourRate) {
  const auto out = cra::apply_adapter(Adapter::of(AdapterKind::FitToReliability), Measure::fit_rate(4e5), context());
  EXPECT_NEAR(out.reliability()(1000.0), std::exp(-0.4), 1e-15);
}

TEST(Adapter, ThermalChainMatchesHandComposition) {
  const cra::PowerTrace trace{"pu", 1.0, std::vector<double>(400, 10.0)};
  cra::ThermalParams settled = kThermal;
  settled.t_initial = 320.0;
  const cra::AdapterContext ctx{"pu", settled, kAging, 2.0};
  const cra::AdapterChain chain{Adapter::of(AdapterKind::PowerToTemperature),
                                Adapter::of(AdapterKind::TemperatureToFailureRate),
                                Adapter::of(AdapterKind::FailureRateToReliability)};
  const auto r = cra::apply_chain(chain, Measure::power(trace), ctx).reliability();

  // Independent hand composition: Black's MTTF at 320 K, then eta = m / Gamma(1.5).
  const double m = 1e3 * std::pow(1e6, -2.0) * std::exp(0.7 / (8.617e-5 * 320.0));
  const double eta = m / (0.5 * std::sqrt(M_PI));
  for (int i = 0; i <= 100; ++i) {
    const double t = 3.0 * m * i / 100.0;
    ASSERT_NEAR(r(t), std::exp(-std::pow(t / eta, 2.0)), 1e-9);
  }
}

TEST(Adapter, ChainFromAmbientStartStillMatchesModuleOperations) {
  std::vector<double> ramp;
  for (int k = 0; k < 300; ++k) ramp.push_back(0.05 * k);
  const cra::PowerTrace trace{"pu", 0.5, ramp};
  const cra::AdapterChain chain{Adapter::of(AdapterKind::PowerToTemperature),
                                Adapter::of(AdapterKind::TemperatureToFailureRate),
                                Adapter::of(AdapterKind::FailureRateToReliability)};
  const auto r = cra::apply_chain(chain, Measure::power(trace), context()).reliability();
  const auto expected = cra::permanent_fault_analysis(cra::simulate_temperature(trace, kThermal), kAging, 2.0);
  EXPECT_EQ(r, expected.reliability);
}

TEST(Adapter, RejectsTagMismatchAndMissingContext) {
  EXPECT_THROW(cra::apply_adapter(Adapter::of(AdapterKind::TemperatureToFailureRate), Measure::fit_rate(1.0), context()),
               cra::InputError);
  EXPECT_THROW(cra::apply_adapter(Adapter::of(AdapterKind::FailureRateToReliability),
                                  Measure::failure_rate(1.0, TimeUnit::Seconds), context()),
               cra::InputError);
  const cra::AdapterContext bare{"pu", std::nullopt, std::nullopt, 2.0};
  const cra::TemperatureProfile prof{"pu", 1.0, {330.0}};
  EXPECT_THROW(cra::apply_adapter(Adapter::of(AdapterKind::TemperatureToFailureRate), Measure::temperature(prof), bare),
               cra::InputError);
  const cra::PowerTrace trace{"pu", 1.0, {1.0}};
  EXPECT_THROW(cra::apply_adapter(Adapter::of(AdapterKind::PowerToTemperature), Measure::power(trace), bare),
               cra::InputError);
  EXPECT_THROW(cra::apply_adapter(Adapter::of(AdapterKind::CompetingRisksCombine),
                                  Measure::reliability(ReliabilityFunction::exponential(1.0)), context()),
               cra::InputError);
}

TEST(Adapter, CompatibleChainsNeverFailOnTags) {
  // Every chain the tracer accepts runs without a tag error.
  const std::vector<Adapter> pool{Adapter::of(AdapterKind::PowerToTemperature),
                                  Adapter::of(AdapterKind::TemperatureToFailureRate),
                                  Adapter::of(AdapterKind::FailureRateToReliability),
                                  Adapter::of(AdapterKind::FitToReliability),
                                  Adapter::bridge(TimeUnit::Hours, TimeUnit::Seconds),
                                  Adapter::bridge(TimeUnit::Seconds, TimeUnit::Hours)};
  const cra::PowerTrace trace{"pu", 1.0, {3.0, 4.0}};
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  int accepted = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    cra::AdapterChain chain;
    const int len = 1 + trial % 5;
    for (int i = 0; i < len; ++i) chain.push_back(pool[pick(rng)]);
    const auto outcome = cra::trace_chain({cra::MeasureTag::PowerTrace, TimeUnit::Seconds}, chain);
    if (!outcome.result) continue;
    ++accepted;
    const auto m = cra::apply_chain(chain, Measure::power(trace), context());
    ASSERT_EQ(m.tag, outcome.result->tag);
    ASSERT_EQ(m.time_unit, outcome.result->unit);
  }
  EXPECT_GT(accepted, 10);
}

TEST(CompetingRisks, IdentityFactor) {
  const auto w = ReliabilityFunction::weibull(800.0, 1.7);
  const auto c = cra::combine_competing_risks(w, cra::exponential_reliability(0.0));
  for (double t = 0.0; t < 5000.0; t += 50.0) EXPECT_EQ(c(t), w(t));
}

TEST(CompetingRisks, ExponentialRatesAdd) {
  const auto c = cra::combine_competing_risks(ReliabilityFunction::exponential(1e-4),
                                              ReliabilityFunction::exponential(4e-4));
  for (double t = 0.0; t < 20000.0; t += 250.0) EXPECT_NEAR(c(t), std::exp(-5e-4 * t), 1e-15);
  EXPECT_NEAR(*cra::mttf(c), 2000.0, 2.0);
}

TEST(CompetingRisks, WeibullWithExponentialShortensLife) {
  const auto c = cra::combine_competing_risks(ReliabilityFunction::weibull(1000.0, 2.0),
                                              ReliabilityFunction::exponential(1e-4));
  const double m = *cra::mttf(c);
  EXPECT_LT(m, 886.2269254527580);
  EXPECT_NEAR(m, oracle::survival_integral([&](double t) { return c(t); }), m * 1e-6);
}

TEST(CompetingRisks, DominatedByEachFactor) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = ReliabilityFunction::weibull(std::pow(10.0, 1.0 + 4.0 * u(rng)), 0.3 + 3.0 * u(rng));
    const auto b = ReliabilityFunction::exponential(std::pow(10.0, -6.0 + 4.0 * u(rng)));
    const auto c = cra::combine_competing_risks(a, b);
    for (double t = 0.0; t < 1e5; t += 997.0) ASSERT_LE(c(t), std::min(a(t), b(t)) + 1e-12);
  }
}

TEST(CompetingRisks, OrderAndGroupingDoNotMatter) {
  const auto a = ReliabilityFunction::weibull(1500.0, 2.2);
  const auto b = ReliabilityFunction::exponential(3e-4);
  const auto c = ReliabilityFunction::sampled({0.0, 500.0, 2000.0}, {1.0, 0.8, 0.3});
  const auto ab_c = cra::combine_competing_risks(cra::combine_competing_risks(a, b), c);
  const auto a_bc = cra::combine_competing_risks(a, cra::combine_competing_risks(b, c));
  const auto ba = cra::combine_competing_risks(b, a);
  const auto ab = cra::combine_competing_risks(a, b);
  for (double t = 0.0; t < 8000.0; t += 37.0) {
    ASSERT_NEAR(ab_c(t), a_bc(t), 1e-15);
    ASSERT_NEAR(ab(t), ba(t), 1e-15);
  }
}

TEST(CompetingRisks, MeasureOverloadChecksTags) {
  const auto m = cra::combine_competing_risks(Measure::reliability(ReliabilityFunction::exponential(1e-3)),
                                              Measure::reliability(ReliabilityFunction::exponential(2e-3)));
  EXPECT_NEAR(m.reliability()(100.0), std::exp(-0.3), 1e-15);
  EXPECT_THROW(cra::combine_competing_risks(Measure::fit_rate(1.0),
                                            Measure::reliability(ReliabilityFunction::exponential(1e-3))),
               cra::InputError);
}

}  // namespace
