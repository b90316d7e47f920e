#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "error.hpp"
#include "format.hpp"
#include "mttf.hpp"
#include "random.hpp"
#include "reliability.hpp"
#include "success_tree.hpp"

namespace cra {

/// Per-component functions handed up from level II.
struct ComponentFunctions {
  ReliabilityFunction perm;
  ReliabilityFunction trans;
  ReliabilityFunction combined;
};

using ComponentFunctionMap = std::map<std::string, ComponentFunctions>;

/**
 * System-level curves on a time grid. `ratio` is r_sys_perm / r_sys_trans:
 * above 1 the transient faults are currently the more destructive kind.
 * It is absent where both curves are below 1e-15 or the denominator is 0.
 */
struct SystemCurves {
  std::vector<double> grid;
  std::vector<double> r_sys;
  std::vector<double> r_sys_perm;
  std::vector<double> r_sys_trans;
  std::vector<std::optional<double>> ratio;
  std::optional<double> mttf_sys;  // nullopt: unbounded
  std::map<std::string, std::optional<double>> component_mttf;
};

inline constexpr double kRatioFloor = 1e-15;

namespace detail {

inline const ReliabilityFunction& pick(const ComponentFunctions& f, int which) {
  return which == 0 ? f.combined : which == 1 ? f.perm : f.trans;
}

inline std::vector<const ComponentFunctions*> functions_in_order(const CompiledTree& tree,
                                                                 const ComponentFunctionMap& funcs) {
  std::vector<const ComponentFunctions*> out;
  for (const auto& e : tree.events()) {
    const auto it = funcs.find(e);
    if (it == funcs.end()) throw InputError("no reliability functions for basic event '" + e + "'");
    out.push_back(&it->second);
  }
  return out;
}

// Pins rounding-level upticks so the emitted curve is exactly non-increasing.
inline void enforce_non_increasing(std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) v[i] = std::min(v[i], v[i - 1]);
}

}  // namespace detail

inline SystemCurves system_reliability_curves(const SuccessTree& tree, const std::vector<double>& grid,
                                              const ComponentFunctionMap& funcs,
                                              const QuadratureOptions& quad = {}) {
  const CompiledTree compiled(tree);
  const auto ordered = detail::functions_in_order(compiled, funcs);
  const std::size_t n = ordered.size();

  auto system_at = [&](double t, int which) {
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = detail::pick(*ordered[i], which)(t);
    return compiled.probability(p);
  };

  SystemCurves c;
  c.grid = grid;
  for (double t : grid) {
    if (!(t >= 0.0)) throw InputError("system curves: negative grid time");
    c.r_sys.push_back(system_at(t, 0));
    c.r_sys_perm.push_back(system_at(t, 1));
    c.r_sys_trans.push_back(system_at(t, 2));
  }
  detail::enforce_non_increasing(c.r_sys);
  detail::enforce_non_increasing(c.r_sys_perm);
  detail::enforce_non_increasing(c.r_sys_trans);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double num = c.r_sys_perm[i];
    const double den = c.r_sys_trans[i];
    if ((num < kRatioFloor && den < kRatioFloor) || den == 0.0)
      c.ratio.push_back(std::nullopt);
    else
      c.ratio.push_back(num / den);
  }

  // R_sys(inf) is the tree evaluated at every component's limiting survival.
  std::vector<double> limits(n);
  for (std::size_t i = 0; i < n; ++i) limits[i] = ordered[i]->combined.limit();
  if (compiled.probability(limits) > 0.0) {
    c.mttf_sys = std::nullopt;
  } else {
    c.mttf_sys = integrate_survival([&](double t) { return system_at(t, 0); }, quad);
  }
  for (const auto& [id, f] : funcs) c.component_mttf[id] = mttf(f.combined, quad);
  return c;
}

/// Where the ratio first moves off 1 and where it first crosses back over.
struct Dominance {
  std::string initially;  // "transient", "permanent" or "neither"
  std::optional<double> first_crossing_hours;
};

inline Dominance dominance_summary(const SystemCurves& c, double tolerance = 1e-12) {
  Dominance d{"neither", std::nullopt};
  int current = 0;
  for (std::size_t i = 0; i < c.ratio.size(); ++i) {
    if (!c.ratio[i]) continue;
    const double r = *c.ratio[i];
    const int sign = r > 1.0 + tolerance ? 1 : r < 1.0 - tolerance ? -1 : 0;
    if (sign == 0) continue;
    if (current == 0) {
      current = sign;
      d.initially = sign > 0 ? "transient" : "permanent";
    } else if (sign != current) {
      d.first_crossing_hours = c.grid[i];
      break;
    }
  }
  return d;
}

inline void write_curves_csv(std::ostream& out, const SystemCurves& c) {
  out << "t_hours,r_sys,r_sys_perm,r_sys_trans,ratio\n";
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    out << format_double(c.grid[i]) << ',' << format_double(c.r_sys[i]) << ','
        << format_double(c.r_sys_perm[i]) << ',' << format_double(c.r_sys_trans[i]) << ',';
    if (c.ratio[i]) out << format_double(*c.ratio[i]);
    out << '\n';
  }
}

/**
 * Draws a failure time by inversion of R: solves R(T) = u. Products draw
 * each factor independently and take the minimum. Infinity when R never
 * falls to u.
 */
inline double draw_failure_time(const ReliabilityFunction& r, KeyedStream& rng) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  struct Visitor {
    KeyedStream& rng;
    double operator()(const Exponential& e) const { return -std::log(rng.uniform()) / e.lambda; }
    double operator()(const Weibull& w) const {
      return w.eta * std::pow(-std::log(rng.uniform()), 1.0 / w.beta);
    }
    double operator()(const Sampled& s) const {
      const double u = rng.uniform();
      for (std::size_t i = 0; i + 1 < s.times.size(); ++i) {
        const double v0 = s.values[i];
        const double v1 = s.values[i + 1];
        if (u < v1) continue;
        const double len = s.times[i + 1] - s.times[i];
        if (v1 == 0.0) return s.times[i] + len * (v0 - u) / v0;
        return s.times[i] + len * std::log(u / v0) / std::log(v1 / v0);
      }
      const double h = detail::tail_hazard(s);
      if (h <= 0.0) return inf;
      return s.times.back() + std::log(s.values.back() / u) / h;
    }
    double operator()(const Product& p) const {
      double t = inf;
      for (const auto& f : p.factors) t = std::min(t, draw_failure_time(f, rng));
      return t;
    }
  };
  return std::visit(Visitor{rng}, r.form());
}

struct MonteCarloCurve {
  std::vector<double> grid;
  std::vector<double> survival;
  std::vector<double> std_error;
  std::uint64_t samples = 0;
};

/// Permanent and transient functions per component for the sampling oracle.
struct ComponentRisks {
  ReliabilityFunction perm;
  ReliabilityFunction trans;
};

namespace detail {

/**
 * Adds, for samples [first, last), one count at the number of grid points
 * strictly before the sampled system failure time. Sample i uses
 * KeyedStream(seed, i), drawing perm then trans per event in first-appearance
 * order.
 */
inline void accumulate_system_samples(const IndexedTree& structure,
                                      const std::vector<const ComponentRisks*>& risks,
                                      const std::vector<double>& grid, std::uint64_t seed,
                                      std::uint64_t first, std::uint64_t last,
                                      std::vector<std::uint64_t>& bins) {
  const std::size_t n = risks.size();
  std::vector<double> fail(n);
  std::vector<std::size_t> order(n);
  std::vector<std::uint8_t> up(n);

  for (std::uint64_t s = first; s < last; ++s) {
    KeyedStream rng(seed, s);
    for (std::size_t i = 0; i < n; ++i) {
      const double tp = draw_failure_time(risks[i]->perm, rng);
      const double tt = draw_failure_time(risks[i]->trans, rng);
      fail[i] = std::min(tp, tt);
    }
    // The structure is coherent, so the system dies at the first component
    // death after which the structure function is false.
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fail[a] < fail[b]; });
    std::fill(up.begin(), up.end(), 1);
    double t_sys = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t c = order[k];
      if (std::isinf(fail[c])) break;
      up[c] = 0;
      if (!structure(up)) {
        t_sys = fail[c];
        break;
      }
    }
    const auto alive = std::lower_bound(grid.begin(), grid.end(), t_sys) - grid.begin();
    ++bins[static_cast<std::size_t>(alive)];
  }
}

}  // namespace detail

/**
 * Sampling oracle for the whole combination chain: per sample, component
 * failure time = min(permanent, transient) drawn by inversion; the system
 * is up at grid time t iff the structure function holds on the components
 * still alive at t. Trials may be split across workers without changing
 * any count.
 */
inline MonteCarloCurve monte_carlo_system(const SuccessTree& tree, const std::map<std::string, ComponentRisks>& risks,
                                          std::uint64_t n_samples, std::uint64_t seed,
                                          const std::vector<double>& grid, unsigned workers = 1) {
  if (n_samples == 0) throw InputError("monte carlo: n_samples must be > 0");
  if (!std::is_sorted(grid.begin(), grid.end())) throw InputError("monte carlo: grid must be sorted");
  const IndexedTree structure(tree);
  const auto events = basic_events(tree);
  std::vector<const ComponentRisks*> ordered;
  for (const auto& e : events) {
    const auto it = risks.find(e);
    if (it == risks.end()) throw InputError("no reliability functions for basic event '" + e + "'");
    ordered.push_back(&it->second);
  }

  workers = std::max(1u, workers);
  std::vector<std::vector<std::uint64_t>> bins(workers, std::vector<std::uint64_t>(grid.size() + 1, 0));
  if (workers == 1) {
    detail::accumulate_system_samples(structure, ordered, grid, seed, 0, n_samples, bins[0]);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t lo = n_samples * w / workers;
      const std::uint64_t hi = n_samples * (w + 1) / workers;
      pool.emplace_back([&, w, lo, hi] {
        detail::accumulate_system_samples(structure, ordered, grid, seed, lo, hi, bins[w]);
      });
    }
    for (auto& t : pool) t.join();
  }

  MonteCarloCurve out;
  out.grid = grid;
  out.samples = n_samples;
  // bins[k] counts samples alive at exactly the first k grid points.
  std::uint64_t alive = 0;
  std::vector<std::uint64_t> alive_at(grid.size(), 0);
  for (std::size_t k = grid.size() + 1; k-- > 1;) {
    for (const auto& b : bins) alive += b[k];
    alive_at[k - 1] = alive;
  }
  const double nd = static_cast<double>(n_samples);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double p = static_cast<double>(alive_at[i]) / nd;
    out.survival.push_back(p);
    out.std_error.push_back(std::sqrt(p * (1.0 - p) / nd));
  }
  return out;
}

}  // namespace cra
