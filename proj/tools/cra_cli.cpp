// Command-line front end: the full pipeline plus one subcommand per stage.
// Exit status 0 on success, 1 on input or usage errors, 2 on analysis errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cra/cra.hpp"

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// Writes to `path` via a temporary and a rename, or to stdout when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  const fs::path target(path);
  const fs::path tmp = target.parent_path() / ("." + target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw cra::InputError("cannot write '" + path + "'");
  }
  fs::rename(tmp, target);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cra::InputError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw cra::InputError(path + ": " + e.what());
  }
}

struct AnalyzeArgs {
  std::string system, out;
  std::optional<std::uint64_t> mc_trials, seed;
  std::uint64_t injection_trials = 10000;
  double beta = 2.0;
  unsigned jobs = 1;
};

void run_analyze(const AnalyzeArgs& a) {
  const auto model = cra::load_system_file(a.system);
  cra::PipelineOptions opt;
  opt.seed = a.seed;
  opt.injection_trials = a.injection_trials;
  opt.mc_trials = a.mc_trials;
  opt.default_beta = a.beta;
  opt.workers = a.jobs;
  const auto report = cra::run_pipeline(model, opt);
  cra::write_outputs(report, a.out);
}

struct ThermalArgs {
  std::string trace, out;
  double rth = 0, cth = 0, tamb = 0;
  std::optional<double> tinit;
};

void run_thermal(const ThermalArgs& a) {
  const auto trace = cra::read_power_trace_file(a.trace, fs::path(a.trace).stem().string());
  const cra::ThermalParams params{a.rth, a.cth, a.tamb, a.tinit.value_or(a.tamb)};
  std::ostringstream csv;
  cra::write_temperature_profile(csv, cra::simulate_temperature(trace, params));
  emit(a.out, csv.str());
}

struct InjectArgs {
  std::string netlist, node, workload, out;
  std::optional<std::uint64_t> trials, seed;
  bool exhaustive = false;
  unsigned jobs = 1;
};

void run_inject(const InjectArgs& a) {
  const auto nl = cra::read_netlist_file(a.netlist);
  ojson j;
  j["netlist"] = a.netlist;
  j["node"] = a.node;
  if (a.exhaustive) {
    if (!a.workload.empty()) throw cra::InputError("--exhaustive enumerates all vectors; drop --workload");
    const auto exact = cra::exhaustive_derating(nl, a.node);
    j["method"] = "exhaustive";
    j["visible"] = exact.count;
    j["vectors"] = exact.total;
    j["derating"] = exact.value();
  } else {
    if (!a.trials || !a.seed) throw cra::InputError("inject needs --trials and --seed (or --exhaustive)");
    cra::Workload w = cra::UniformWorkload{};
    if (!a.workload.empty()) w = cra::read_workload_file(a.workload, nl.inputs().size());
    const auto r = cra::inject_campaign(nl, a.node, *a.trials, *a.seed, w, a.jobs);
    j["method"] = "monte_carlo";
    j["workload"] = a.workload.empty() ? "uniform" : a.workload;
    j["seed"] = *a.seed;
    j["trials"] = r.trials;
    j["errors"] = r.errors;
    j["derating"] = r.derating;
    j["ci95_low"] = r.ci95.low;
    j["ci95_high"] = r.ci95.high;
    j["ci95_half_width"] = r.ci95_half_width();
  }
  emit(a.out, j.dump(2) + "\n");
}

struct TreeArgs {
  std::string tree, probs, out;
  bool brute_force = false;
};

void run_tree_eval(const TreeArgs& a) {
  const auto tree = cra::tree_from_json(read_json_file(a.tree), a.tree);
  const auto pj = read_json_file(a.probs);
  if (!pj.is_object()) throw cra::InputError(a.probs + ": expected an object of event -> probability");
  std::map<std::string, double> probs;
  for (const auto& [k, v] : pj.items()) {
    if (!v.is_number()) throw cra::InputError(a.probs + ": probability for '" + k + "' is not a number");
    probs[k] = v.get<double>();
  }
  ojson j;
  j["method"] = a.brute_force ? "brute_force" : "decision_diagram";
  j["events"] = cra::basic_events(tree);
  j["probability"] = a.brute_force ? cra::brute_force_probability(tree, probs) : cra::tree_probability(tree, probs);
  emit(a.out, j.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-layer reliability analysis"};
  app.set_version_flag("--version", cra::kToolVersion);
  app.require_subcommand(1);

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Run the full pipeline on a system description");
  analyze->add_option("--system", an.system, "System description (JSON)")->required()->check(CLI::ExistingFile);
  analyze->add_option("--out", an.out, "Output directory for report.json and curves.csv")->required();
  analyze->add_option("--mc-trials", an.mc_trials, "Run the Monte Carlo system oracle with N samples");
  analyze->add_option("--injection-trials", an.injection_trials, "Fault-injection trials per node")
      ->capture_default_str();
  analyze->add_option("--seed", an.seed, "Seed for every stochastic stage");
  analyze->add_option("--beta", an.beta, "Weibull shape when a component gives none")->capture_default_str();
  analyze->add_option("--jobs", an.jobs, "Worker threads for sampling stages")->capture_default_str();

  ThermalArgs th;
  auto* thermal = app.add_subcommand("thermal", "Power trace to temperature profile (CSV)");
  thermal->add_option("--trace", th.trace, "Power trace CSV (time_s,power_w)")->required()->check(CLI::ExistingFile);
  thermal->add_option("--rth", th.rth, "Thermal resistance, K/W")->required();
  thermal->add_option("--cth", th.cth, "Thermal capacitance, J/K")->required();
  thermal->add_option("--tamb", th.tamb, "Ambient temperature, K")->required();
  thermal->add_option("--tinit", th.tinit, "Initial temperature, K (default: ambient)");
  thermal->add_option("--out", th.out, "Output file (default: stdout)");

  InjectArgs in;
  auto* inject = app.add_subcommand("inject", "Fault-injection derating of one netlist node");
  inject->add_option("--netlist", in.netlist, "Netlist file")->required()->check(CLI::ExistingFile);
  inject->add_option("--node", in.node, "Net to flip")->required();
  inject->add_option("--trials", in.trials, "Injection trials");
  inject->add_option("--seed", in.seed, "Campaign seed");
  inject->add_flag("--exhaustive", in.exhaustive, "Enumerate every input vector instead of sampling");
  inject->add_option("--workload", in.workload, "Explicit input vectors, one per line")->check(CLI::ExistingFile);
  inject->add_option("--jobs", in.jobs, "Worker threads")->capture_default_str();
  inject->add_option("--out", in.out, "Output file (default: stdout)");

  TreeArgs tr;
  auto* tree = app.add_subcommand("tree-eval", "Success-tree probability");
  tree->add_option("--tree", tr.tree, "Tree (JSON)")->required()->check(CLI::ExistingFile);
  tree->add_option("--probs", tr.probs, "Event probabilities (JSON object)")->required()->check(CLI::ExistingFile);
  tree->add_flag("--brute-force", tr.brute_force, "Enumerate all event states");
  tree->add_option("--out", tr.out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*analyze) run_analyze(an);
    if (*thermal) run_thermal(th);
    if (*inject) run_inject(in);
    if (*tree) run_tree_eval(tr);
  } catch (const cra::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const cra::AnalysisError& e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
