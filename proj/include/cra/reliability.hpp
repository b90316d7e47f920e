#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"

namespace cra {

class ReliabilityFunction;

/// R(t) = exp(-lambda t), lambda per hour.
struct Exponential {
  double lambda;
  bool operator==(const Exponential&) const = default;
};

/// R(t) = exp(-(t / eta)^beta), eta in hours.
struct Weibull {
  double eta;
  double beta;
  bool operator==(const Weibull&) const = default;
};

/**
 * Tabulated survival curve. Between samples the curve is log-linear (constant
 * hazard per segment); a segment ending at exactly zero falls linearly
 * instead. Past the last sample the final segment's hazard continues.
 */
struct Sampled {
  std::vector<double> times;
  std::vector<double> values;
  bool operator==(const Sampled&) const = default;
};

/// Pointwise product of independent survival factors (competing risks).
struct Product {
  std::vector<ReliabilityFunction> factors;
  bool operator==(const Product&) const;
};

/**
 * A validated survival function R(t) over hours. Construct through the
 * named factories; they enforce R(0) = 1, monotonicity and range.
 */
class ReliabilityFunction {
 public:
  using Form = std::variant<Exponential, Weibull, Sampled, Product>;

  static ReliabilityFunction exponential(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw InputError("exponential rate must be finite and > 0, got " +
                       std::to_string(lambda));
    return ReliabilityFunction(Exponential{lambda});
  }

  static ReliabilityFunction weibull(double eta, double beta) {
    if (!(eta > 0.0) || !std::isfinite(eta))
      throw InputError("weibull eta must be finite and > 0");
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw InputError("weibull beta must be finite and > 0");
    return ReliabilityFunction(Weibull{eta, beta});
  }

  static ReliabilityFunction sampled(std::vector<double> times,
                                     std::vector<double> values) {
    if (times.empty() || times.size() != values.size())
      throw InputError("sampled curve needs matching, nonempty time/value lists");
    if (times.front() != 0.0)
      throw InputError("sampled curve must start at t = 0");
    if (values.front() != 1.0)
      throw InputError("sampled curve must start at R = 1");
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
        throw InputError("sampled curve has a non-finite entry");
      if (values[i] < 0.0 || values[i] > 1.0)
        throw InputError("sampled value outside [0,1] at index " +
                         std::to_string(i));
      if (i > 0 && !(times[i] > times[i - 1]))
        throw InputError("sampled times must be strictly increasing");
      if (i > 0 && values[i] > values[i - 1])
        throw InputError("sampled values must be non-increasing");
    }
    return ReliabilityFunction(Sampled{std::move(times), std::move(values)});
  }

  /// R(t) = 1 for all t: one sample at the origin, zero hazard.
  static ReliabilityFunction constant_one() {
    return ReliabilityFunction(Sampled{{0.0}, {1.0}});
  }

  static ReliabilityFunction product(std::vector<ReliabilityFunction> factors) {
    if (factors.empty()) throw InputError("product needs at least one factor");
    return ReliabilityFunction(Product{std::move(factors)});
  }

  const Form& form() const { return form_; }

  /// Evaluates R(t), clamped to [0,1]. Callers guarantee t >= 0.
  double operator()(double t) const {
    return std::clamp(std::visit([t](const auto& f) { return eval(f, t); }, form_),
                      0.0, 1.0);
  }

  /// lim R(t) as t -> infinity. Nonzero means the mean lifetime is unbounded.
  double limit() const {
    return std::visit([](const auto& f) { return limit_of(f); }, form_);
  }

  bool operator==(const ReliabilityFunction&) const = default;

 private:
  explicit ReliabilityFunction(Form f) : form_(std::move(f)) {}

  static double eval(const Exponential& e, double t) {
    return std::exp(-e.lambda * t);
  }
  static double eval(const Weibull& w, double t) {
    return std::exp(-std::pow(t / w.eta, w.beta));
  }
  static double eval(const Sampled& s, double t);
  static double eval(const Product& p, double t) {
    double r = 1.0;
    for (const auto& f : p.factors) r *= f(t);
    return r;
  }

  static double limit_of(const Exponential&) { return 0.0; }
  static double limit_of(const Weibull&) { return 0.0; }
  static double limit_of(const Sampled& s);
  static double limit_of(const Product& p) {
    double r = 1.0;
    for (const auto& f : p.factors) r *= f.limit();
    return r;
  }

  Form form_;
};

inline bool Product::operator==(const Product& o) const {
  return factors == o.factors;
}

namespace detail {

/// Hazard of segment [i, i+1] of a sampled curve; 0 when flat.
/// Only meaningful when both endpoint values are positive.
inline double segment_hazard(const Sampled& s, std::size_t i) {
  const double len = s.times[i + 1] - s.times[i];
  return std::log(s.values[i] / s.values[i + 1]) / len;
}

/// Hazard continued past the last sample. Zero for a single-sample curve.
inline double tail_hazard(const Sampled& s) {
  const std::size_t n = s.times.size();
  if (n < 2 || s.values[n - 1] == 0.0) return 0.0;
  return segment_hazard(s, n - 2);
}

}  // namespace detail

inline double ReliabilityFunction::eval(const Sampled& s, double t) {
  if (t >= s.times.back()) {
    const double last = s.values.back();
    if (last == 0.0) return 0.0;
    return last * std::exp(-detail::tail_hazard(s) * (t - s.times.back()));
  }
  // First sample strictly after t; at least two samples exist here.
  const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - s.times.begin()) - 1;
  const double v0 = s.values[i];
  const double v1 = s.values[i + 1];
  const double frac = (t - s.times[i]) / (s.times[i + 1] - s.times[i]);
  if (v0 == 0.0) return 0.0;
  if (v1 == 0.0) return v0 * (1.0 - frac);
  return v0 * std::exp(frac * std::log(v1 / v0));
}

inline double ReliabilityFunction::limit_of(const Sampled& s) {
  return detail::tail_hazard(s) > 0.0 ? 0.0 : s.values.back();
}

/// Checked evaluation: rejects negative or non-finite times.
inline double eval_reliability_at(const ReliabilityFunction& r, double t_hours) {
  if (!(t_hours >= 0.0))
    throw InputError("reliability evaluated at negative or NaN time");
  return r(t_hours);
}

/// Short human-readable form name, used in reports.
inline std::string form_name(const ReliabilityFunction& r) {
  static constexpr const char* names[] = {"exponential", "weibull", "sampled",
                                          "product"};
  return names[r.form().index()];
}

}  // namespace cra
