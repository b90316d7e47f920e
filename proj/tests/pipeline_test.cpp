#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cra/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

const fs::path kModels = fs::path(CRA_SOURCE_DIR) / "models";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class PipelineTest : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("cra_pipeline_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  static cra::PipelineOptions seeded(std::uint64_t seed, std::uint64_t trials = 2000) {
    cra::PipelineOptions o;
    o.seed = seed;
    o.injection_trials = trials;
    return o;
  }
};

TEST_F(PipelineTest, TwoUnitModelMatchesClosedFormComposition) {
  const auto model = cra::load_system_file(kModels / "two_pu" / "system.json");
  EXPECT_TRUE(cra::check_measure_compatibility(model).empty());
  const auto rep = cra::run_pipeline(model, seeded(1));
  ASSERT_TRUE(rep.curves.mttf_sys.has_value());
  EXPECT_NEAR(*rep.curves.mttf_sys, 1000.0, 1.0);
  for (std::size_t i = 0; i < rep.curves.grid.size(); ++i) {
    const double t = rep.curves.grid[i];
    ASSERT_NEAR(rep.curves.r_sys[i], std::exp(-1e-3 * t), 1e-9);
    ASSERT_NEAR(*rep.curves.ratio[i], std::exp(6e-4 * t), 1e-9 * std::exp(6e-4 * t));
  }
  for (const auto& c : rep.components) {
    EXPECT_NEAR(*c.steady_state_temperature_k, 327.0, 1e-9);
    EXPECT_NEAR(*c.lambda_eff_per_hour, 1e-4, 1e-15);
    EXPECT_NEAR(c.transient_lambda_per_hour, 4e-4, 1e-18);
    for (const auto& inj : c.injections) EXPECT_EQ(inj.result.derating, 1.0);
  }
  EXPECT_EQ(rep.dominance.initially, "transient");
}

TEST_F(PipelineTest, ZeroFitZeroPowerModel) {
  std::ofstream(dir / "idle.csv") << "time_s,power_w\n0,0\n1,0\n2,0\n";
  std::ofstream(dir / "inv.net") << "INPUT a\nGATE y NOT a\nOUTPUT y\n";
  const std::string doc = R"({
    "name": "idle", "time_horizon_hours": 50000, "grid_points": 40,
    "hierarchy": {"id": "S", "kind": "System", "children": [
      {"id": "A", "kind": "Component",
       "thermal": {"r_th": 1.0, "c_th": 1.0, "t_ambient": 330.0},
       "aging": {"a_const": 2e6, "j_density": 1e6, "n_exp": 2, "ea_ev": 0.7},
       "power_trace": "idle.csv", "netlist": "inv.net", "ser": {"default_fit": 0}},
      {"id": "B", "kind": "Component",
       "thermal": {"r_th": 1.0, "c_th": 1.0, "t_ambient": 330.0},
       "aging": {"a_const": 2e6, "j_density": 1e6, "n_exp": 2, "ea_ev": 0.7},
       "power_trace": "idle.csv", "netlist": "inv.net"}]},
    "adapters": {
      "A": {"permanent": ["PowerToTemperature", "TemperatureToFailureRate", "FailureRateToReliability"],
            "transient": ["FitToReliability"]},
      "B": {"permanent": ["PowerToTemperature", "TemperatureToFailureRate", "FailureRateToReliability"],
            "transient": ["FitToReliability"]}},
    "success_tree": {"gate": "OR", "inputs": [{"event": "A"}, {"event": "B"}]}})";
  const auto model = cra::load_system(doc, dir);
  cra::PipelineOptions opt;  // no seed needed: nothing is stochastic
  const auto rep = cra::run_pipeline(model, opt);
  for (std::size_t i = 0; i < rep.curves.grid.size(); ++i) {
    ASSERT_EQ(rep.curves.r_sys_trans[i], 1.0);
    if (rep.curves.ratio[i]) {
      ASSERT_EQ(*rep.curves.ratio[i], rep.curves.r_sys_perm[i]);
    }
  }
  EXPECT_TRUE(rep.components[0].injections.empty());
  EXPECT_NE(cra::report_json(rep).find("\"status\": \"skipped\""), std::string::npos);
}

TEST_F(PipelineTest, OutputsAreByteIdenticalAcrossRunsAndWorkerCounts) {
  const auto model = cra::load_system_file(kModels / "edge_node" / "system.json");
  auto opt = seeded(77, 3000);
  opt.mc_trials = 5000;
  cra::write_outputs(cra::run_pipeline(model, opt), dir / "a");
  cra::write_outputs(cra::run_pipeline(model, opt), dir / "b");
  opt.workers = 3;
  cra::write_outputs(cra::run_pipeline(model, opt), dir / "c");
  for (const char* f : {"report.json", "curves.csv"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "c" / f)) << f;
  }
}

TEST_F(PipelineTest, EdgeNodeReportIsConsistent) {
  const auto model = cra::load_system_file(kModels / "edge_node" / "system.json");
  auto opt = seeded(5, 4000);
  opt.mc_trials = 20000;
  const auto rep = cra::run_pipeline(model, opt);
  ASSERT_EQ(rep.components.size(), 3u);
  for (const auto& c : rep.components) {
    ASSERT_TRUE(c.functions.has_value());
    EXPECT_GT(c.effective_fit, 0.0);
    ASSERT_TRUE(c.combined_mttf_hours.has_value());
    EXPECT_LT(*c.combined_mttf_hours, *c.permanent_mttf_hours);
  }
  const auto& mem = rep.components[2];
  EXPECT_EQ(mem.permanent_source, "temperature_trace");
  EXPECT_FALSE(mem.steady_state_temperature_k.has_value());
  for (const auto& inj : mem.injections)
    if (inj.result.node == "spare") {
      EXPECT_EQ(inj.result.errors, 0u);
    }
  ASSERT_TRUE(rep.monte_carlo.has_value());
  EXPECT_GE(rep.monte_carlo->within_3se_fraction, 0.9);
  for (std::size_t i = 0; i < rep.curves.grid.size(); ++i)
    ASSERT_LE(rep.curves.r_sys[i], std::min(rep.curves.r_sys_perm[i], rep.curves.r_sys_trans[i]) + 1e-12);
}

TEST_F(PipelineTest, StagesMatchStandaloneOperations) {
  const auto model = cra::load_system_file(kModels / "edge_node" / "system.json");
  const auto rep = cra::run_pipeline(model, seeded(11, 2500));
  const auto& cpu = rep.components[0];
  ASSERT_EQ(cpu.id, "CPU");
  const auto* node = model.find("CPU");
  const auto& p = *node->payload;
  const auto trace = cra::read_power_trace_file(model.resolve(*p.power_trace).string(), "CPU");
  const auto prof = cra::simulate_temperature(trace, p.thermal);
  EXPECT_EQ(*cpu.peak_temperature_k, prof.peak());
  const auto perm = cra::permanent_fault_analysis(prof, p.aging, 2.0);
  EXPECT_EQ(*cpu.lambda_eff_per_hour, perm.lambda_eff);
  EXPECT_EQ(cpu.functions->perm, perm.reliability);

  const auto nl = cra::read_netlist_file(model.resolve(p.netlist).string());
  for (const auto& inj : cpu.injections) {
    const auto alone = cra::inject_campaign(nl, inj.result.node, 2500, 11);
    EXPECT_EQ(alone.errors, inj.result.errors) << inj.result.node;
  }
}

TEST_F(PipelineTest, StageFailureNamesComponentAndStage) {
  std::ofstream(dir / "p.csv") << "time_s,power_w\n0,1\n1,1\n";
  std::ofstream(dir / "bad.net") << "INPUT a\nGATE y NOT a\n";
  const std::string doc = R"({"name": "broken", "time_horizon_hours": 10,
    "hierarchy": {"id": "S", "kind": "System", "children": [
      {"id": "X", "kind": "Component",
       "thermal": {"r_th": 1.0, "c_th": 1.0, "t_ambient": 330.0},
       "aging": {"a_const": 2e6, "j_density": 1e6, "n_exp": 2, "ea_ev": 0.7},
       "power_trace": "p.csv", "netlist": "bad.net"}]},
    "adapters": {"X": {"permanent": ["PowerToTemperature", "TemperatureToFailureRate", "FailureRateToReliability"],
                       "transient": ["FitToReliability"]}},
    "success_tree": {"event": "X"}})";
  const auto model = cra::load_system(doc, dir);
  try {
    cra::run_pipeline(model, seeded(1));
    FAIL() << "expected failure";
  } catch (const cra::InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("component 'X'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("parse-netlist"), std::string::npos) << msg;
    EXPECT_NE(msg.find("OUTPUT"), std::string::npos) << msg;
  }
}

TEST_F(PipelineTest, RefusesIncompatibleModelsAndMissingSeeds) {
  auto model = cra::load_system_file(kModels / "two_pu" / "system.json");
  EXPECT_THROW(cra::run_pipeline(model, cra::PipelineOptions{}), cra::InputError);
  model.adapters.at("PU2").transient.clear();
  try {
    cra::run_pipeline(model, seeded(1));
    FAIL();
  } catch (const cra::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("PU2"), std::string::npos);
  }
}

TEST_F(PipelineTest, FailedWriteLeavesNothingBehind) {
  const auto model = cra::load_system_file(kModels / "two_pu" / "system.json");
  const auto rep = cra::run_pipeline(model, seeded(1, 100));
  fs::create_directories(dir / "out" / "report.json" / "occupied");
  EXPECT_ANY_THROW(cra::write_outputs(rep, dir / "out"));
  EXPECT_FALSE(fs::exists(dir / "out" / "curves.csv"));
  EXPECT_FALSE(fs::exists(dir / "out" / ".report.json.tmp"));
  EXPECT_FALSE(fs::exists(dir / "out" / ".curves.csv.tmp"));
}

TEST_F(PipelineTest, ReportMarksUnboundedAndCarriesMetadata) {
  const auto model = cra::load_system_file(kModels / "two_pu" / "system.json");
  auto opt = seeded(3, 500);
  opt.mc_trials = 1000;
  const auto j = nlohmann::json::parse(cra::report_json(cra::run_pipeline(model, opt)));
  EXPECT_EQ(j["run"]["seed"], 3);
  EXPECT_EQ(j["run"]["injection_trials"], 500);
  EXPECT_EQ(j["run"]["grid_points"], 512);
  EXPECT_EQ(j["run"]["tool_version"], cra::kToolVersion);
  EXPECT_EQ(j["monte_carlo"]["status"], "ran");
  EXPECT_EQ(j["system"]["curve_file"], "curves.csv");
  EXPECT_TRUE(j["system"]["mttf_hours"].is_number());
}

}  // namespace
