#pragma once

#include <optional>
#include <string>

#include "aging.hpp"
#include "error.hpp"
#include "measure.hpp"
#include "model.hpp"
#include "reliability.hpp"
#include "softerror.hpp"
#include "thermal.hpp"

namespace cra {

inline constexpr double kSecondsPerHour = 3600.0;

/// Component data an adapter may need; absent parts make the adapter fail.
struct AdapterContext {
  std::string component_id;
  std::optional<ThermalParams> thermal;
  std::optional<AgingParams> aging;
  double default_beta = 2.0;

  static AdapterContext of(const std::string& id, const ComponentPayload& p, double default_beta) {
    return {id, p.thermal, p.aging, default_beta};
  }
};

/**
 * Applies one adapter to a measure, dispatching to the owning module's
 * operation. Rate conversions between seconds and hours use 3600 s/h.
 */
inline Measure apply_adapter(const Adapter& adapter, const Measure& m, const AdapterContext& ctx) {
  const std::string& id = ctx.component_id;
  const auto expected = adapter_output(adapter, {m.tag, m.time_unit});
  if (!expected)
    throw InputError(detail::located(id, std::string(to_string(adapter.kind)) + " cannot accept " +
                                             to_string(MeasureSignature{m.tag, m.time_unit})));
  switch (adapter.kind) {
    case AdapterKind::PowerToTemperature:
      if (!ctx.thermal) throw InputError(detail::located(id, "PowerToTemperature needs thermal parameters"));
      return Measure::temperature(simulate_temperature(std::get<PowerTrace>(m.payload), *ctx.thermal));
    case AdapterKind::TemperatureToFailureRate:
      if (!ctx.aging) throw InputError(detail::located(id, "TemperatureToFailureRate needs aging parameters"));
      validate(*ctx.aging);
      return Measure::failure_rate(
          failure_rate_from_profile(std::get<TemperatureProfile>(m.payload), *ctx.aging), TimeUnit::Hours);
    case AdapterKind::FailureRateToReliability: {
      const double beta = ctx.aging ? ctx.aging->resolved_beta(ctx.default_beta) : ctx.default_beta;
      return Measure::reliability(weibull_from_mttf(1.0 / m.scalar(), beta));
    }
    case AdapterKind::FitToReliability:
      return Measure::reliability(exponential_reliability(m.scalar() / kHoursPerFit));
    case AdapterKind::TimeUnitBridge: {
      double rate = m.scalar();
      if (adapter.from == TimeUnit::Seconds && adapter.to == TimeUnit::Hours) rate *= kSecondsPerHour;
      if (adapter.from == TimeUnit::Hours && adapter.to == TimeUnit::Seconds) rate /= kSecondsPerHour;
      return Measure::failure_rate(rate, adapter.to);
    }
    case AdapterKind::CompetingRisksCombine:
      break;
  }
  throw InputError(detail::located(id, "CompetingRisksCombine joins two lanes; use combine_competing_risks"));
}

inline Measure apply_chain(const AdapterChain& chain, Measure m, const AdapterContext& ctx) {
  for (const auto& a : chain) m = apply_adapter(a, m, ctx);
  return m;
}

/**
 * Independent competing risks: the component survives to t only if neither
 * failure mode has struck, so R(t) = R_perm(t) * R_trans(t).
 */
inline ReliabilityFunction combine_competing_risks(const ReliabilityFunction& r_perm,
                                                   const ReliabilityFunction& r_trans) {
  return ReliabilityFunction::product({r_perm, r_trans});
}

inline Measure combine_competing_risks(const Measure& perm, const Measure& trans) {
  if (perm.tag != MeasureTag::Reliability || trans.tag != MeasureTag::Reliability)
    throw InputError("CompetingRisksCombine needs two Reliability measures");
  return Measure::reliability(combine_competing_risks(perm.reliability(), trans.reliability()));
}

}  // namespace cra
