#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cra/thermal.hpp"
#include "oracles.hpp"

namespace {

using cra::PowerTrace;
using cra::ThermalParams;

TEST(SteadyState, DirectFormula) {
  EXPECT_EQ(cra::steady_state_temperature(0.0, {2.0, 5.0, 300.0, 300.0}), 300.0);
  EXPECT_EQ(cra::steady_state_temperature(10.0, {2.0, 5.0, 300.0, 300.0}), 320.0);
  EXPECT_NEAR(cra::steady_state_temperature(7.5, {1.2, 1.0, 318.0, 318.0}), 327.0, 1e-12);
  EXPECT_THROW(cra::steady_state_temperature(-1.0, {1.0, 1.0, 300.0, 300.0}), cra::InputError);
}

TEST(Simulate, ZeroPowerAtAmbientStaysPut) {
  const PowerTrace trace{"c", 0.5, std::vector<double>(50, 0.0)};
  const auto prof = cra::simulate_temperature(trace, {2.0, 5.0, 300.0, 300.0});
  ASSERT_EQ(prof.samples.size(), 50u);
  for (double t : prof.samples) EXPECT_EQ(t, 300.0);
}

TEST(Simulate, ConstantPowerReachesSteadyState) {
  const PowerTrace trace{"c", 1.0, std::vector<double>(200, 10.0)};
  const ThermalParams params{2.0, 5.0, 300.0, 300.0};  // tau = 10 s
  const auto prof = cra::simulate_temperature(trace, params);
  for (std::size_t k = 99; k < prof.samples.size(); ++k) EXPECT_NEAR(prof.samples[k], 320.0, 1e-3);
}

TEST(Simulate, FirstSampleIsEndOfFirstStep) {
  const PowerTrace trace{"c", 2.0, {10.0}};
  const auto prof = cra::simulate_temperature(trace, {2.0, 5.0, 300.0, 300.0});
  EXPECT_NEAR(prof.samples[0], 320.0 - 20.0 * std::exp(-0.2), 1e-12);
}

TEST(Simulate, RampMatchesFineEulerOracle) {
  std::vector<double> ramp;
  for (int k = 0; k < 100; ++k) ramp.push_back(0.2 * k);
  const PowerTrace trace{"c", 1.0, ramp};
  const ThermalParams params{2.0, 5.0, 300.0, 305.0};
  const auto prof = cra::simulate_temperature(trace, params);
  const auto euler = oracle::euler_temperature(ramp, 1.0, 2.0, 5.0, 300.0, 305.0, 1000);
  double worst = 0.0;
  for (std::size_t k = 0; k < ramp.size(); ++k) worst = std::max(worst, std::abs(prof.samples[k] - euler[k]));
  EXPECT_LE(worst, 1e-3);
}

TEST(Simulate, RejectsBadTraces) {
  const ThermalParams params{2.0, 5.0, 300.0, 300.0};
  EXPECT_THROW(cra::simulate_temperature({"c", 1.0, {}}, params), cra::InputError);
  EXPECT_THROW(cra::simulate_temperature({"c", 1.0, {1.0, std::nan("")}}, params), cra::InputError);
  EXPECT_THROW(cra::simulate_temperature({"c", 1.0, {1.0, INFINITY}}, params), cra::InputError);
  EXPECT_THROW(cra::simulate_temperature({"c", 1.0, {-1.0}}, params), cra::InputError);
  EXPECT_THROW(cra::simulate_temperature({"c", 0.0, {1.0}}, params), cra::InputError);
  EXPECT_THROW(cra::simulate_temperature({"c", 1.0, {1.0}}, {0.0, 5.0, 300.0, 300.0}), cra::InputError);
}

class ThermalProperty : public ::testing::Test {
 protected:
  std::mt19937_64 rng{2024};
  std::uniform_real_distribution<double> u{0.0, 1.0};

  ThermalParams random_params() {
    return {0.1 + 5.0 * u(rng), 0.5 + 50.0 * u(rng), 250.0 + 100.0 * u(rng), 250.0 + 150.0 * u(rng)};
  }
  std::vector<double> random_power(std::size_t n) {
    std::vector<double> p(n);
    for (auto& x : p) x = 40.0 * u(rng);
    return p;
  }
};

TEST_F(ThermalProperty, ConstantPowerApproachIsMonotone) {
  for (int trial = 0; trial < 100; ++trial) {
    const auto params = random_params();
    const double p = 30.0 * u(rng);
    const auto prof = cra::simulate_temperature({"c", 0.1 + u(rng), std::vector<double>(300, p)}, params);
    const double target = cra::steady_state_temperature(p, params);
    double prev = std::abs(params.t_initial - target);
    for (double t : prof.samples) {
      const double gap = std::abs(t - target);
      ASSERT_LE(gap, prev);
      prev = gap;
    }
  }
}

TEST_F(ThermalProperty, SamplesStayInsideEnvelope) {
  for (int trial = 0; trial < 100; ++trial) {
    const auto params = random_params();
    const auto power = random_power(400);
    const auto prof = cra::simulate_temperature({"c", 0.05 + 3.0 * u(rng), power}, params);
    const double lo = std::min(params.t_initial, params.t_ambient);
    double hi = params.t_initial;
    for (double p : power) hi = std::max(hi, params.t_ambient + params.r_th * p);
    for (double t : prof.samples) {
      ASSERT_GE(t, lo - 1e-9);
      ASSERT_LE(t, hi + 1e-9);
    }
  }
}

TEST_F(ThermalProperty, HalvingTheStepIsExact) {
  for (int trial = 0; trial < 50; ++trial) {
    const auto params = random_params();
    const auto power = random_power(200);
    const double dt = 0.05 + 2.0 * u(rng);
    std::vector<double> doubled;
    for (double p : power) doubled.insert(doubled.end(), {p, p});
    const auto coarse = cra::simulate_temperature({"c", dt, power}, params);
    const auto fine = cra::simulate_temperature({"c", dt / 2.0, doubled}, params);
    for (std::size_t k = 0; k < power.size(); ++k) ASSERT_NEAR(coarse.samples[k], fine.samples[2 * k + 1], 1e-9);
  }
}

TEST_F(ThermalProperty, Deterministic) {
  const auto params = random_params();
  const PowerTrace trace{"c", 0.7, random_power(500)};
  const auto a = cra::simulate_temperature(trace, params);
  const auto b = cra::simulate_temperature(trace, params);
  EXPECT_EQ(a.samples, b.samples);
}

TEST(TraceCsv, ReadsUniformTrace) {
  std::istringstream in("time_s,power_w\n0,1.5\n0.5,2\n1.0,2.5\n");
  const auto trace = cra::read_power_trace(in, "pu", "mem");
  EXPECT_EQ(trace.dt_seconds, 0.5);
  EXPECT_EQ(trace.samples, (std::vector<double>{1.5, 2.0, 2.5}));
}

TEST(TraceCsv, RejectsMalformedFiles) {
  auto read = [](const std::string& text) {
    std::istringstream in(text);
    return cra::read_power_trace(in, "pu", "mem");
  };
  EXPECT_THROW(read(""), cra::InputError);
  EXPECT_THROW(read("t,p\n0,1\n1,1\n"), cra::InputError);
  EXPECT_THROW(read("time_s,power_w\n0,1\n"), cra::InputError);
  EXPECT_THROW(read("time_s,power_w\n1,1\n2,1\n"), cra::InputError);
  EXPECT_THROW(read("time_s,power_w\n0,1\n1,1\n3,1\n"), cra::InputError);
  EXPECT_THROW(read("time_s,power_w\n0,1\n1,x\n"), cra::InputError);
  EXPECT_THROW(read("time_s,power_w\n0,1\n1,-2\n"), cra::InputError);
  EXPECT_THROW(read("time_s,power_w\n0,1,3\n1,1\n"), cra::InputError);
}

TEST(TraceCsv, TemperatureExportReadsBack) {
  const auto prof = cra::simulate_temperature({"pu", 0.25, {1.0, 3.0, 0.0, 7.0}}, {1.5, 2.0, 300.0, 310.0});
  std::ostringstream out;
  cra::write_temperature_profile(out, prof);
  std::istringstream in(out.str());
  const auto back = cra::read_temperature_profile(in, "pu", "mem");
  EXPECT_EQ(back.dt_seconds, prof.dt_seconds);
  EXPECT_EQ(back.samples, prof.samples);
}

}  // namespace
