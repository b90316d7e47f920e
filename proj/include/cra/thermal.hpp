#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "format.hpp"

namespace cra {

/// Per-component power samples on a uniform step, watts.
struct PowerTrace {
  std::string component_id;
  double dt_seconds = 1.0;
  std::vector<double> samples;
};

/// Lumped single-node RC model of one component.
struct ThermalParams {
  double r_th;       // K/W
  double c_th;       // J/K
  double t_ambient;  // K
  double t_initial;  // K

  double tau() const { return r_th * c_th; }
  bool operator==(const ThermalParams&) const = default;
};

/// Temperature samples; sample k is the temperature at the end of step k.
struct TemperatureProfile {
  std::string component_id;
  double dt_seconds = 1.0;
  std::vector<double> samples;  // kelvin

  double peak() const { return *std::max_element(samples.begin(), samples.end()); }
};

inline void validate(const ThermalParams& p) {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(p.r_th)) throw InputError("thermal: r_th must be > 0");
  if (!positive(p.c_th)) throw InputError("thermal: c_th must be > 0");
  if (!positive(p.t_ambient)) throw InputError("thermal: t_ambient must be > 0 K");
  if (!positive(p.t_initial)) throw InputError("thermal: t_initial must be > 0 K");
}

inline void validate(const PowerTrace& trace) {
  const std::string& id = trace.component_id;
  if (trace.samples.empty())
    throw InputError(detail::located(id, "power trace has no samples"));
  if (!(trace.dt_seconds > 0.0) || !std::isfinite(trace.dt_seconds))
    throw InputError(detail::located(id, "power trace timestep must be > 0"));
  for (std::size_t k = 0; k < trace.samples.size(); ++k) {
    const double p = trace.samples[k];
    if (!std::isfinite(p))
      throw InputError(detail::located(id, "non-finite power at sample " +
                                               std::to_string(k)));
    if (p < 0.0)
      throw InputError(detail::located(id, "negative power at sample " +
                                               std::to_string(k)));
  }
}

inline double steady_state_temperature(double power_w, const ThermalParams& params) {
  if (!(power_w >= 0.0)) throw InputError("steady state: power must be >= 0");
  return params.t_ambient + params.r_th * power_w;
}

/**
 * Integrates C dT/dt = P(t) - (T - T_amb) / R with power held constant over
 * each step, using the exact exponential solution of that step:
 *   T_{k+1} = T_ss,k + (T_k - T_ss,k) exp(-dt / tau).
 */
inline TemperatureProfile simulate_temperature(const PowerTrace& trace,
                                               const ThermalParams& params) {
  validate(trace);
  validate(params);
  const double decay = std::exp(-trace.dt_seconds / params.tau());
  TemperatureProfile out{trace.component_id, trace.dt_seconds, {}};
  out.samples.reserve(trace.samples.size());
  double temp = params.t_initial;
  for (double p : trace.samples) {
    const double target = steady_state_temperature(p, params);
    temp = target + (temp - target) * decay;
    out.samples.push_back(temp);
  }
  return out;
}

namespace detail {

struct UniformSeries {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> values;
};

// Two-column CSV with a fixed header and uniformly spaced times.
inline UniformSeries read_uniform_csv(std::istream& in, const std::string& header,
                                      const std::string& source,
                                      bool must_start_at_zero) {
  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return source + ":" + std::to_string(line_no); };
  auto trim = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
  };
  if (!std::getline(in, line))
    throw InputError(source + ": empty file, expected header '" + header + "'");
  ++line_no;
  if (trim(line) != header)
    throw InputError(where() + ": expected header '" + header + "'");

  std::vector<double> times;
  UniformSeries out;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw InputError(where() + ": expected two comma-separated columns");
    const double t = parse_double(line.substr(0, comma), where());
    const double v = parse_double(line.substr(comma + 1), where());
    times.push_back(t);
    out.values.push_back(v);
  }
  if (times.size() < 2)
    throw InputError(source + ": need at least two rows to fix the timestep");
  out.t0 = times.front();
  out.dt = times[1] - times[0];
  if (must_start_at_zero && out.t0 != 0.0)
    throw InputError(source + ": times must start at 0");
  if (!(out.dt > 0.0))
    throw InputError(source + ": times must be strictly increasing");
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double expected = out.t0 + static_cast<double>(k) * out.dt;
    if (std::abs(times[k] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
      throw InputError(source + ":" + std::to_string(k + 2) +
                       ": times are not uniformly spaced");
  }
  return out;
}

}  // namespace detail

/// Reads `time_s,power_w` CSV.
inline PowerTrace read_power_trace(std::istream& in, const std::string& component_id,
                                   const std::string& source) {
  auto series = detail::read_uniform_csv(in, "time_s,power_w", source, true);
  PowerTrace trace{component_id, series.dt, std::move(series.values)};
  validate(trace);
  return trace;
}

inline PowerTrace read_power_trace_file(const std::string& path,
                                        const std::string& component_id) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open power trace '" + path + "'");
  return read_power_trace(in, component_id, path);
}

/// Reads `time_s,temp_k` CSV as written by write_temperature_profile.
inline TemperatureProfile read_temperature_profile(std::istream& in,
                                                   const std::string& component_id,
                                                   const std::string& source) {
  auto series = detail::read_uniform_csv(in, "time_s,temp_k", source, false);
  for (double v : series.values)
    if (!(v > 0.0) || !std::isfinite(v))
      throw InputError(source + ": temperatures must be finite and > 0 K");
  return {component_id, series.dt, std::move(series.values)};
}

inline TemperatureProfile read_temperature_profile_file(const std::string& path,
                                                        const std::string& component_id) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open temperature profile '" + path + "'");
  return read_temperature_profile(in, component_id, path);
}

/// Writes `time_s,temp_k`; the time column is the end of each step.
inline void write_temperature_profile(std::ostream& out, const TemperatureProfile& p) {
  out << "time_s,temp_k\n";
  for (std::size_t k = 0; k < p.samples.size(); ++k)
    out << format_double(static_cast<double>(k + 1) * p.dt_seconds) << ','
        << format_double(p.samples[k]) << '\n';
}

}  // namespace cra
