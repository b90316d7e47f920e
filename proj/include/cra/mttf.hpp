#pragma once

#include <cmath>
#include <optional>
#include <variant>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "reliability.hpp"

namespace cra {

/// Integration horizon rule for survival curves without a closed form.
struct QuadratureOptions {
  double negligible = 1e-9;      // stop once R(T*) falls below this
  double horizon_cap = 1e9;      // hours
  double relative_tolerance = 1e-6;
};

/**
 * Integrates a non-increasing survival function over [0, T*], where T* is the
 * first power-of-two number of hours with R(T*) below the negligible level
 * (capped). The range is split into doubling panels [0,1], [1,2], [2,4], ...
 * so that curves living on very different time scales are all resolved;
 * each panel gets adaptive 15-point Gauss-Kronrod.
 */
template <typename Survival>
double integrate_survival(const Survival& r, const QuadratureOptions& opt = {}) {
  using boost::math::quadrature::gauss_kronrod;
  double horizon = 1.0;
  while (r(horizon) >= opt.negligible && horizon < opt.horizon_cap)
    horizon = std::min(horizon * 2.0, opt.horizon_cap);

  // Sub-hour scales: shrink the first panel until it holds the bulk.
  double first = 1.0;
  while (first > 1e-12 && r(first) < 0.5) first *= 0.5;

  auto panel = [&](double a, double b) {
    return gauss_kronrod<double, 15>::integrate(r, a, b, 15,
                                                opt.relative_tolerance);
  };
  double total = 0.0;
  double a = 0.0;
  double b = std::min(first, horizon);
  while (a < horizon) {
    total += panel(a, b);
    a = b;
    b = std::min(b * 2.0, horizon);
  }
  return total;
}

/**
 * Mean time to failure in hours, the integral of R over [0, inf).
 * std::nullopt marks an unbounded lifetime (R does not decay to zero).
 */
inline std::optional<double> mttf(const ReliabilityFunction& r,
                                  const QuadratureOptions& opt = {}) {
  if (r.limit() > 0.0) return std::nullopt;
  struct Visitor {
    const ReliabilityFunction& whole;
    const QuadratureOptions& opt;
    double operator()(const Exponential& e) const { return 1.0 / e.lambda; }
    double operator()(const Weibull& w) const {
      return w.eta * std::tgamma(1.0 + 1.0 / w.beta);
    }
    double operator()(const Sampled& s) const {
      double area = 0.0;
      for (std::size_t i = 0; i + 1 < s.times.size(); ++i) {
        const double v0 = s.values[i];
        const double v1 = s.values[i + 1];
        const double len = s.times[i + 1] - s.times[i];
        if (v0 == 0.0) break;
        if (v1 == 0.0) {
          area += 0.5 * v0 * len;
        } else if (v1 == v0) {
          area += v0 * len;
        } else {
          area += (v0 - v1) / detail::segment_hazard(s, i);
        }
      }
      const double last = s.values.back();
      if (last > 0.0) area += last / detail::tail_hazard(s);
      return area;
    }
    double operator()(const Product&) const {
      return integrate_survival(whole, opt);
    }
  };
  return std::visit(Visitor{r, opt}, r.form());
}

}  // namespace cra
