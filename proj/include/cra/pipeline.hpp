#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "aging.hpp"
#include "composition.hpp"
#include "error.hpp"
#include "model.hpp"
#include "mttf.hpp"
#include "softerror.hpp"
#include "system.hpp"
#include "thermal.hpp"

namespace cra {

inline constexpr const char* kToolVersion = "cra 1.0.0";

struct PipelineOptions {
  std::optional<std::uint64_t> seed;
  std::uint64_t injection_trials = 10000;
  std::optional<std::uint64_t> mc_trials;
  double default_beta = 2.0;
  unsigned workers = 1;
};

struct InjectionSummary {
  double fit;
  InjectionResult result;
};

struct ComponentReport {
  std::string id;
  std::string permanent_source;  // "power_trace" or "temperature_trace"
  std::optional<double> steady_state_temperature_k;
  std::optional<double> peak_temperature_k;
  std::optional<double> lambda_eff_per_hour;
  std::optional<double> permanent_mttf_hours;
  double effective_fit = 0.0;
  double transient_lambda_per_hour = 0.0;
  std::vector<InjectionSummary> injections;
  std::optional<double> combined_mttf_hours;
  std::optional<ComponentFunctions> functions;
};

struct MonteCarloSummary {
  std::uint64_t samples;
  std::uint64_t seed;
  double max_abs_deviation;
  double within_3se_fraction;
};

struct Report {
  std::string model_name;
  std::vector<ComponentReport> components;
  SystemCurves curves;
  Dominance dominance;
  std::optional<MonteCarloSummary> monte_carlo;
  PipelineOptions options;
  std::size_t grid_points;
  double time_horizon_hours;
};

namespace detail {

// Re-raises the active exception with the component and stage prefixed,
// keeping its category (input vs analysis).
[[noreturn]] inline void rethrow_in_stage(const std::string& component, const std::string& stage) {
  const std::string prefix = "component '" + component + "' stage '" + stage + "': ";
  try {
    throw;
  } catch (const InputError& e) {
    throw InputError(prefix + e.what());
  } catch (const AnalysisError& e) {
    throw AnalysisError(prefix + e.what());
  } catch (const std::exception& e) {
    throw AnalysisError(prefix + e.what());
  }
}

template <typename F>
auto in_stage(const std::string& component, const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (...) {
    rethrow_in_stage(component, stage);
  }
}

inline void require_seed(const PipelineOptions& o, const std::string& why) {
  if (!o.seed) throw InputError("a seed is required for " + why + " (pass --seed)");
}

inline ComponentReport analyze_component(const SystemModel& model, const CrnNode& node,
                                         const PipelineOptions& opt) {
  const ComponentPayload& p = *node.payload;
  const EdgeAdapters edge = [&] {
    const auto it = model.adapters.find(node.id);
    return it == model.adapters.end() ? EdgeAdapters{} : it->second;
  }();
  const AdapterContext ctx = AdapterContext::of(node.id, p, opt.default_beta);
  ComponentReport rep;
  rep.id = node.id;
  rep.permanent_source = p.power_trace ? "power_trace" : "temperature_trace";

  // Permanent lane: power trace -> temperature -> failure rate -> reliability.
  Measure perm = in_stage(node.id, "load-trace", [&] {
    if (p.power_trace) {
      const PowerTrace trace = read_power_trace_file(model.resolve(*p.power_trace).string(), node.id);
      const double mean = std::accumulate(trace.samples.begin(), trace.samples.end(), 0.0) /
                          static_cast<double>(trace.samples.size());
      rep.steady_state_temperature_k = steady_state_temperature(mean, p.thermal);
      return Measure::power(trace);
    }
    return Measure::temperature(
        read_temperature_profile_file(model.resolve(*p.temperature_trace).string(), node.id));
  });
  auto observe = [&](const Measure& m) {
    if (m.tag == MeasureTag::TemperatureProfile)
      rep.peak_temperature_k = std::get<TemperatureProfile>(m.payload).peak();
    if (m.tag == MeasureTag::FailureRate && m.time_unit == TimeUnit::Hours) rep.lambda_eff_per_hour = m.scalar();
  };
  observe(perm);
  for (const Adapter& a : edge.permanent) {
    perm = in_stage(node.id, to_string(a.kind), [&] { return apply_adapter(a, perm, ctx); });
    observe(perm);
  }

  // Transient lane: netlist -> injection per FIT-bearing net -> FIT -> reliability.
  const Netlist netlist = in_stage(node.id, "parse-netlist", [&] {
    return read_netlist_file(model.resolve(p.netlist).string());
  });
  const Workload workload = in_stage(node.id, "load-workload", [&]() -> Workload {
    validate(p.ser, netlist);
    if (!p.workload) return UniformWorkload{};
    return read_workload_file(model.resolve(*p.workload).string(), netlist.inputs().size());
  });
  std::map<std::string, double> deratings;
  for (const auto& net : fit_bearing_nets(netlist, p.ser)) {
    require_seed(opt, "fault injection");
    auto result = in_stage(node.id, "inject", [&] {
      return inject_campaign(netlist, net, opt.injection_trials, *opt.seed, workload, opt.workers);
    });
    deratings[net] = result.derating;
    rep.injections.push_back({p.ser.fit(net), std::move(result)});
  }
  rep.effective_fit = in_stage(node.id, "ser", [&] { return effective_fit(netlist, p.ser, deratings); });
  rep.transient_lambda_per_hour = rep.effective_fit / kHoursPerFit;
  Measure trans = Measure::fit_rate(rep.effective_fit);
  for (const Adapter& a : edge.transient)
    trans = in_stage(node.id, to_string(a.kind), [&] { return apply_adapter(a, trans, ctx); });

  const Measure combined = in_stage(node.id, "CompetingRisksCombine",
                                    [&] { return combine_competing_risks(perm, trans); });
  rep.functions = ComponentFunctions{perm.reliability(), trans.reliability(), combined.reliability()};
  rep.permanent_mttf_hours = mttf(rep.functions->perm);
  rep.combined_mttf_hours = mttf(rep.functions->combined);
  return rep;
}

}  // namespace detail

/**
 * Runs every leaf analysis, lifts the results through the declared adapter
 * chains, combines the two fault types per component and evaluates the
 * success tree over the model grid. Nothing is written here.
 */
inline Report run_pipeline(const SystemModel& model, const PipelineOptions& opt) {
  if (const auto violations = check_measure_compatibility(model); !violations.empty()) {
    std::string msg = "measure compatibility check failed:";
    for (const auto& v : violations) msg += "\n  " + v.describe();
    throw InputError(msg);
  }
  if (opt.injection_trials == 0) throw InputError("injection trials must be > 0");
  if (!(opt.default_beta > 0.0)) throw InputError("default Weibull beta must be > 0");
  if (opt.mc_trials) {
    detail::require_seed(opt, "the Monte Carlo system oracle");
    if (*opt.mc_trials == 0) throw InputError("Monte Carlo trials must be > 0");
  }

  Report rep{model.name, {}, {}, {}, std::nullopt, opt, model.grid_points, model.time_horizon_hours};
  ComponentFunctionMap funcs;
  for (const CrnNode* c : model.components()) {
    rep.components.push_back(detail::analyze_component(model, *c, opt));
    funcs.emplace(c->id, *rep.components.back().functions);
  }

  const auto grid = model.grid();
  rep.curves = detail::in_stage(model.root.id, "system", [&] {
    return system_reliability_curves(model.success_tree, grid, funcs);
  });
  rep.dominance = dominance_summary(rep.curves);

  if (opt.mc_trials) {
    std::map<std::string, ComponentRisks> risks;
    for (const auto& [id, f] : funcs) risks.emplace(id, ComponentRisks{f.perm, f.trans});
    const auto mc = monte_carlo_system(model.success_tree, risks, *opt.mc_trials, *opt.seed, grid, opt.workers);
    double worst = 0.0;
    std::size_t within = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double dev = std::abs(mc.survival[i] - rep.curves.r_sys[i]);
      worst = std::max(worst, dev);
      const double p = rep.curves.r_sys[i];
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(mc.samples));
      if (dev <= 3.0 * se + 1e-12) ++within;
    }
    rep.monte_carlo = MonteCarloSummary{mc.samples, *opt.seed, worst,
                                        static_cast<double>(within) / static_cast<double>(grid.size())};
  }
  return rep;
}

namespace detail {

inline nlohmann::ordered_json optional_number(const std::optional<double>& v, const char* absent = nullptr) {
  if (v) return *v;
  if (absent) return absent;
  return nullptr;
}

inline nlohmann::ordered_json reliability_json(const ReliabilityFunction& r) {
  nlohmann::ordered_json j;
  j["form"] = form_name(r);
  if (const auto* e = std::get_if<Exponential>(&r.form())) j["lambda_per_hour"] = e->lambda;
  if (const auto* w = std::get_if<Weibull>(&r.form())) {
    j["eta_hours"] = w->eta;
    j["beta"] = w->beta;
  }
  if (std::holds_alternative<Sampled>(r.form()) && r.limit() == 1.0) j["constant"] = 1.0;
  return j;
}

}  // namespace detail

/// The JSON report; byte-identical for identical inputs and options.
inline std::string report_json(const Report& rep, const std::string& curve_file = "curves.csv") {
  using detail::optional_number;
  nlohmann::ordered_json j;
  j["model"] = rep.model_name;
  j["components"] = nlohmann::ordered_json::array();
  for (const auto& c : rep.components) {
    nlohmann::ordered_json cj;
    cj["id"] = c.id;
    auto& perm = cj["permanent"];
    perm["source"] = c.permanent_source;
    perm["steady_state_temperature_k"] = optional_number(c.steady_state_temperature_k);
    perm["peak_temperature_k"] = optional_number(c.peak_temperature_k);
    perm["lambda_eff_per_hour"] = optional_number(c.lambda_eff_per_hour);
    perm["mttf_hours"] = optional_number(c.permanent_mttf_hours, "unbounded");
    perm["reliability"] = detail::reliability_json(c.functions->perm);
    auto& trans = cj["transient"];
    trans["effective_fit"] = c.effective_fit;
    trans["lambda_per_hour"] = c.transient_lambda_per_hour;
    trans["reliability"] = detail::reliability_json(c.functions->trans);
    trans["injections"] = nlohmann::ordered_json::array();
    for (const auto& inj : c.injections) {
      nlohmann::ordered_json ij;
      ij["node"] = inj.result.node;
      ij["fit"] = inj.fit;
      ij["trials"] = inj.result.trials;
      ij["errors"] = inj.result.errors;
      ij["derating"] = inj.result.derating;
      ij["ci95_low"] = inj.result.ci95.low;
      ij["ci95_high"] = inj.result.ci95.high;
      ij["ci95_half_width"] = inj.result.ci95_half_width();
      trans["injections"].push_back(std::move(ij));
    }
    cj["combined_mttf_hours"] = optional_number(c.combined_mttf_hours, "unbounded");
    j["components"].push_back(std::move(cj));
  }

  auto& sys = j["system"];
  sys["mttf_hours"] = optional_number(rep.curves.mttf_sys, "unbounded");
  sys["curve_file"] = curve_file;
  sys["ratio_definition"] = "r_sys_perm / r_sys_trans; above 1 means transient faults dominate";
  sys["dominance"]["initially"] = rep.dominance.initially;
  sys["dominance"]["first_crossing_hours"] = optional_number(rep.dominance.first_crossing_hours);
  sys["final"]["r_sys"] = rep.curves.r_sys.back();
  sys["final"]["r_sys_perm"] = rep.curves.r_sys_perm.back();
  sys["final"]["r_sys_trans"] = rep.curves.r_sys_trans.back();

  auto& mc = j["monte_carlo"];
  if (rep.monte_carlo) {
    mc["status"] = "ran";
    mc["samples"] = rep.monte_carlo->samples;
    mc["seed"] = rep.monte_carlo->seed;
    mc["max_abs_deviation"] = rep.monte_carlo->max_abs_deviation;
    mc["within_3se_fraction"] = rep.monte_carlo->within_3se_fraction;
  } else {
    mc["status"] = "skipped";
    mc["reason"] = "no --mc-trials given";
  }

  auto& run = j["run"];
  run["seed"] = rep.options.seed ? nlohmann::ordered_json(*rep.options.seed) : nlohmann::ordered_json(nullptr);
  run["injection_trials"] = rep.options.injection_trials;
  run["mc_trials"] = rep.options.mc_trials ? nlohmann::ordered_json(*rep.options.mc_trials)
                                           : nlohmann::ordered_json(nullptr);
  run["default_weibull_beta"] = rep.options.default_beta;
  run["grid_points"] = rep.grid_points;
  run["time_horizon_hours"] = rep.time_horizon_hours;
  run["tool_version"] = kToolVersion;
  return j.dump(2) + "\n";
}

/**
 * Writes report.json and curves.csv into `out_dir`. Both are rendered
 * first, written under temporary names, then renamed into place, so a
 * failure never leaves a partial file behind.
 */
inline void write_outputs(const Report& rep, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  const std::string report = report_json(rep, "curves.csv");
  std::ostringstream curves;
  write_curves_csv(curves, rep.curves);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw InputError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  const fs::path report_tmp = out_dir / ".report.json.tmp";
  const fs::path curves_tmp = out_dir / ".curves.csv.tmp";
  auto write = [](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (!out) throw AnalysisError("failed writing '" + p.string() + "'");
  };
  bool curves_placed = false;
  try {
    write(report_tmp, report);
    write(curves_tmp, curves.str());
    fs::rename(curves_tmp, out_dir / "curves.csv");
    curves_placed = true;
    fs::rename(report_tmp, out_dir / "report.json");
  } catch (...) {
    fs::remove(report_tmp, ec);
    fs::remove(curves_tmp, ec);
    if (curves_placed) fs::remove(out_dir / "curves.csv", ec);
    throw;
  }
}

}  // namespace cra
