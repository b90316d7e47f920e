#pragma once

#include <cmath>
#include <optional>

#include "error.hpp"
#include "reliability.hpp"
#include "thermal.hpp"

namespace cra {

/// Boltzmann constant in eV/K, as used by the Arrhenius term.
inline constexpr double kBoltzmannEv = 8.617e-5;

/**
 * Black's-equation electromigration parameters. MTTF = A J^-n exp(Ea / kT),
 * with A chosen so the result is in hours. A missing Weibull shape is
 * filled in from the caller's default (see resolved_beta).
 */
struct AgingParams {
  double a_const;
  double j_density;  // A/cm^2
  double n_exp;
  double ea_ev;
  std::optional<double> weibull_beta;

  double resolved_beta(double fallback) const { return weibull_beta.value_or(fallback); }
  bool operator==(const AgingParams&) const = default;
};

struct PermanentFaultResult {
  double lambda_eff;  // per hour
  double mttf_hours;
  ReliabilityFunction reliability;
};

inline void validate(const AgingParams& p) {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(p.a_const)) throw InputError("aging: a_const must be > 0");
  if (!positive(p.j_density)) throw InputError("aging: j_density must be > 0");
  if (!(p.n_exp >= 0.0) || !std::isfinite(p.n_exp))
    throw InputError("aging: n_exp must be >= 0");
  if (!positive(p.ea_ev)) throw InputError("aging: ea_ev must be > 0");
  if (p.weibull_beta && !positive(*p.weibull_beta))
    throw InputError("aging: weibull_beta must be > 0");
}

inline double black_mttf(double temperature_k, const AgingParams& params) {
  if (!(temperature_k > 0.0))
    throw InputError("black_mttf: temperature must be > 0 K");
  return params.a_const * std::pow(params.j_density, -params.n_exp) *
         std::exp(params.ea_ev / (kBoltzmannEv * temperature_k));
}

/// Time-averaged sum of failure rates over a uniform-step profile, per hour.
inline double failure_rate_from_profile(const TemperatureProfile& profile,
                                        const AgingParams& params) {
  if (profile.samples.empty())
    throw InputError(detail::located(profile.component_id, "empty temperature profile"));
  double sum = 0.0;
  for (double t : profile.samples) sum += 1.0 / black_mttf(t, params);
  const double rate = sum / static_cast<double>(profile.samples.size());
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw AnalysisError(detail::located(
        profile.component_id, "effective failure rate is not a positive finite number"));
  return rate;
}

/// Gamma function for positive real arguments.
inline double gamma_function(double x) {
  if (!(x > 0.0)) throw InputError("gamma_function: argument must be > 0");
  return std::tgamma(x);
}

/// Weibull with the requested mean: eta = mttf / Gamma(1 + 1/beta).
inline ReliabilityFunction weibull_from_mttf(double mttf_hours, double beta) {
  if (!(mttf_hours > 0.0) || !std::isfinite(mttf_hours))
    throw InputError("weibull_from_mttf: mttf must be > 0");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw InputError("weibull_from_mttf: beta must be > 0");
  return ReliabilityFunction::weibull(mttf_hours / gamma_function(1.0 + 1.0 / beta), beta);
}

inline PermanentFaultResult permanent_fault_analysis(const TemperatureProfile& profile,
                                                     const AgingParams& params,
                                                     double default_beta) {
  validate(params);
  const double lambda = failure_rate_from_profile(profile, params);
  const double mttf_h = 1.0 / lambda;
  return {lambda, mttf_h, weibull_from_mttf(mttf_h, params.resolved_beta(default_beta))};
}

}  // namespace cra
