#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "reliability.hpp"
#include "thermal.hpp"

namespace cra {

enum class MeasureTag { PowerTrace, TemperatureProfile, FailureRate, FitRate, Derating, Reliability };
enum class TimeUnit { Seconds, Hours };

inline const char* to_string(MeasureTag t) {
  switch (t) {
    case MeasureTag::PowerTrace: return "PowerTrace";
    case MeasureTag::TemperatureProfile: return "TemperatureProfile";
    case MeasureTag::FailureRate: return "FailureRate";
    case MeasureTag::FitRate: return "FitRate";
    case MeasureTag::Derating: return "Derating";
    case MeasureTag::Reliability: return "Reliability";
  }
  return "?";
}

inline const char* to_string(TimeUnit u) { return u == TimeUnit::Seconds ? "seconds" : "hours"; }

inline std::optional<TimeUnit> time_unit_from(const std::string& s) {
  if (s == "seconds") return TimeUnit::Seconds;
  if (s == "hours") return TimeUnit::Hours;
  return std::nullopt;
}

/**
 * A tagged value flowing between reliability levels. Rates are per
 * `time_unit`; FitRate is derated FIT (failures per 1e9 hours).
 */
struct Measure {
  using Payload = std::variant<PowerTrace, TemperatureProfile, double, ReliabilityFunction>;

  MeasureTag tag;
  Payload payload;
  TimeUnit time_unit = TimeUnit::Hours;

  double scalar() const { return std::get<double>(payload); }
  const ReliabilityFunction& reliability() const { return std::get<ReliabilityFunction>(payload); }

  static Measure power(PowerTrace t) { return {MeasureTag::PowerTrace, std::move(t), TimeUnit::Seconds}; }
  static Measure temperature(TemperatureProfile p) {
    return {MeasureTag::TemperatureProfile, std::move(p), TimeUnit::Seconds};
  }
  static Measure failure_rate(double rate, TimeUnit unit) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw InputError("failure rate measure must be > 0");
    return {MeasureTag::FailureRate, rate, unit};
  }
  static Measure fit_rate(double fit) {
    if (!(fit >= 0.0) || !std::isfinite(fit)) throw InputError("FIT measure must be >= 0");
    return {MeasureTag::FitRate, fit, TimeUnit::Hours};
  }
  static Measure derating(double d) {
    if (!(d >= 0.0 && d <= 1.0)) throw InputError("derating measure must lie in [0,1]");
    return {MeasureTag::Derating, d, TimeUnit::Hours};
  }
  static Measure reliability(ReliabilityFunction r) {
    return {MeasureTag::Reliability, std::move(r), TimeUnit::Hours};
  }
};

enum class AdapterKind {
  PowerToTemperature,
  TemperatureToFailureRate,
  FailureRateToReliability,
  FitToReliability,
  TimeUnitBridge,
  CompetingRisksCombine
};

inline const char* to_string(AdapterKind k) {
  switch (k) {
    case AdapterKind::PowerToTemperature: return "PowerToTemperature";
    case AdapterKind::TemperatureToFailureRate: return "TemperatureToFailureRate";
    case AdapterKind::FailureRateToReliability: return "FailureRateToReliability";
    case AdapterKind::FitToReliability: return "FitToReliability";
    case AdapterKind::TimeUnitBridge: return "TimeUnitBridge";
    case AdapterKind::CompetingRisksCombine: return "CompetingRisksCombine";
  }
  return "?";
}

inline std::optional<AdapterKind> adapter_kind_from(const std::string& s) {
  for (auto k : {AdapterKind::PowerToTemperature, AdapterKind::TemperatureToFailureRate,
                 AdapterKind::FailureRateToReliability, AdapterKind::FitToReliability,
                 AdapterKind::TimeUnitBridge, AdapterKind::CompetingRisksCombine})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

/// Declarative adapter record. Only TimeUnitBridge carries parameters.
struct Adapter {
  AdapterKind kind;
  TimeUnit from = TimeUnit::Seconds;
  TimeUnit to = TimeUnit::Hours;

  bool operator==(const Adapter&) const = default;

  static Adapter of(AdapterKind k) { return {k}; }
  static Adapter bridge(TimeUnit from, TimeUnit to) { return {AdapterKind::TimeUnitBridge, from, to}; }
};

using AdapterChain = std::vector<Adapter>;

/// Tag plus time unit; what an edge check tracks along a chain.
struct MeasureSignature {
  MeasureTag tag;
  TimeUnit unit;
  bool operator==(const MeasureSignature&) const = default;
};

inline std::string to_string(const MeasureSignature& s) {
  std::string out = to_string(s.tag);
  if (s.tag == MeasureTag::FailureRate) out += std::string("[per ") + to_string(s.unit) + "]";
  return out;
}

/**
 * What applying `a` to a measure of signature `in` yields, or nullopt when
 * the adapter does not accept that input. CompetingRisksCombine joins two
 * reliability lanes and is not valid inside a single chain.
 */
inline std::optional<MeasureSignature> adapter_output(const Adapter& a, MeasureSignature in) {
  switch (a.kind) {
    case AdapterKind::PowerToTemperature:
      if (in.tag == MeasureTag::PowerTrace) return MeasureSignature{MeasureTag::TemperatureProfile, TimeUnit::Seconds};
      break;
    case AdapterKind::TemperatureToFailureRate:
      if (in.tag == MeasureTag::TemperatureProfile) return MeasureSignature{MeasureTag::FailureRate, TimeUnit::Hours};
      break;
    case AdapterKind::FailureRateToReliability:
      if (in.tag == MeasureTag::FailureRate && in.unit == TimeUnit::Hours)
        return MeasureSignature{MeasureTag::Reliability, TimeUnit::Hours};
      break;
    case AdapterKind::FitToReliability:
      if (in.tag == MeasureTag::FitRate) return MeasureSignature{MeasureTag::Reliability, TimeUnit::Hours};
      break;
    case AdapterKind::TimeUnitBridge:
      if (in.tag == MeasureTag::FailureRate && in.unit == a.from) return MeasureSignature{in.tag, a.to};
      break;
    case AdapterKind::CompetingRisksCombine:
      break;
  }
  return std::nullopt;
}

/// Runs `chain` over signatures; returns the final signature or a reason it broke.
struct ChainOutcome {
  std::optional<MeasureSignature> result;
  std::string problem;
};

inline ChainOutcome trace_chain(MeasureSignature start, const AdapterChain& chain) {
  MeasureSignature cur = start;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto next = adapter_output(chain[i], cur);
    if (!next)
      return {std::nullopt, std::string("adapter #") + std::to_string(i) + " (" +
                                to_string(chain[i].kind) + ") cannot accept " + to_string(cur)};
    cur = *next;
  }
  return {cur, {}};
}

}  // namespace cra
