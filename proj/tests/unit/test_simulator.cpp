//------------------------------------------------------------------------------
//
//   Copyright 2026 The fedcdc-market Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedcdc/errors.hpp"
#include "fedcdc/simulator.hpp"

using namespace fedcdc;
using namespace fedcdc::sim;

namespace {

ScenarioConfig small_config(Scenario s, std::size_t rounds = 12)
{
  auto cfg                       = default_config();
  cfg.scenario                   = s;
  cfg.rounds                     = rounds;
  cfg.data.dim                   = 8;
  cfg.hidden                     = {16};
  cfg.partition.samples_per_do   = 40;
  cfg.partition.samples_per_val  = 40;
  cfg.partition.samples_per_test = 40;
  cfg.partition.public_size      = 100;
  cfg.fl.local_epochs            = 1;
  cfg.distill.epochs             = 1;
  cfg.seed                       = 5;
  cfg.threads                    = 1;
  return cfg;
}

std::string slurp(std::filesystem::path const &p)
{
  std::ifstream      in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(std::string const &name)
{
  auto dir = std::filesystem::temp_directory_path() / ("fedcdc_sim_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(RunScenario, RestrictedRecruitsEightOwners)
{
  auto const trace = run_scenario(small_config(Scenario::Restricted));
  ASSERT_EQ(trace.rows.size(), 12u * 3u);
  for (std::size_t r = 0; r < 12; ++r)
  {
    std::set<OwnerId> shared_taken;
    for (std::size_t i = 0; i < 3; ++i)
    {
      auto const &row = trace.rows[r * 3 + i];
      EXPECT_EQ(row.round, r);
      EXPECT_EQ(row.dc, i);
      EXPECT_EQ(row.recruited.size(), 8u) << "round " << r << " dc " << i;
      for (OwnerId o : row.recruited)
      {
        EXPECT_TRUE(shared_taken.insert(o).second) << "owner " << o << " served twice";
      }
    }
  }
  EXPECT_TRUE(trace.alliances.empty());
}

TEST(RunScenario, RematchOnlyEveryPeriod)
{
  auto const trace = run_scenario(small_config(Scenario::Restricted));
  for (std::size_t r = 1; r < 12; ++r)
  {
    if (r % 5 != 0)
    {
      EXPECT_EQ(trace.rows[r * 3].recruited, trace.rows[(r - 1) * 3].recruited);
    }
  }
}

TEST(RunScenario, UnrestrictedRecruitsTwelveOwners)
{
  auto const trace = run_scenario(small_config(Scenario::Unrestricted, 3));
  for (auto const &row : trace.rows)
  {
    EXPECT_EQ(row.recruited.size(), 12u);
  }
}

TEST(RunScenario, FedCdcCreatesOneAllianceAtRoundTen)
{
  auto const trace = run_scenario(small_config(Scenario::FedCDC, 16));
  ASSERT_EQ(trace.alliances.size(), 1u);
  auto const &a = trace.alliances[0];
  EXPECT_EQ(a.round, 10u);
  EXPECT_EQ(a.participants, (std::vector<ConsumerId>{0, 1, 2}));
  EXPECT_EQ(a.shared_labels.size(), 2u);
  EXPECT_EQ(a.contested.size(), 6u);
  EXPECT_EQ(a.value, 36u);
  EXPECT_EQ(a.synthetic_id, 3u);
  // Participants stop recruiting the contested owners once the alliance exists.
  for (auto const &row : trace.rows)
  {
    EXPECT_EQ(row.recruited.size(), row.round < 10 ? 8u : 6u);
    if (row.round >= 10)
    {
      for (OwnerId o : row.recruited)
      {
        EXPECT_EQ(std::count(a.contested.begin(), a.contested.end(), o), 0);
      }
    }
  }
}

TEST(RunScenario, BestSnapshotUsesEarliestMaximum)
{
  auto const trace = run_scenario(small_config(Scenario::Restricted));
  for (std::size_t i = 0; i < 3; ++i)
  {
    double      best_val  = -1.0;
    double      best_test = 0.0;
    std::size_t best_r    = 0;
    for (std::size_t r = 0; r < 12; ++r)
    {
      auto const &row = trace.rows[r * 3 + i];
      EXPECT_GE(row.val_acc, 0.0);
      EXPECT_LE(row.val_acc, 1.0);
      if (row.val_acc > best_val)
      {
        best_val  = row.val_acc;
        best_test = row.test_acc;
        best_r    = r;
      }
      EXPECT_EQ(row.best_round, best_r);
      EXPECT_EQ(row.best_test_acc, best_test);
    }
  }
}

TEST(RunScenario, Deterministic)
{
  auto const cfg = small_config(Scenario::FedCDC, 12);
  auto const a   = run_scenario(cfg);
  auto const b   = run_scenario(cfg);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k)
  {
    EXPECT_EQ(a.rows[k].val_acc, b.rows[k].val_acc);
    EXPECT_EQ(a.rows[k].recruited, b.rows[k].recruited);
  }
  auto da = scratch("det_a");
  auto db = scratch("det_b");
  emit_metrics(a, da);
  emit_metrics(b, db);
  for (char const *f : {"accuracy.csv", "alliances.json", "summary.json"})
  {
    EXPECT_EQ(slurp(da / f), slurp(db / f)) << f;
  }
}

TEST(RunScenario, ThreadCountDoesNotChangeResults)
{
  auto cfg     = small_config(Scenario::FedCDC, 11);
  auto const a = run_scenario(cfg);
  cfg.threads  = 4;
  auto const b = run_scenario(cfg);
  EXPECT_EQ(a.final_mean_accuracy(), b.final_mean_accuracy());
}

TEST(RunScenario, InvalidConfigFailsBeforeTraining)
{
  auto cfg           = small_config(Scenario::FedCDC);
  cfg.alliance_start = 12;
  EXPECT_THROW(run_scenario(cfg), ConfigError);
  cfg        = small_config(Scenario::Restricted);
  cfg.rounds = 0;
  EXPECT_THROW(run_scenario(cfg), ConfigError);
}

TEST(RunScenario, FirstPriceWithEmptyBudgetsStarves)
{
  auto cfg           = small_config(Scenario::Restricted, 2);
  cfg.mechanism      = Mechanism::FirstPrice;
  cfg.initial_budget = 0.0;
  auto const trace   = run_scenario(cfg);
  std::size_t starved = 0;
  for (auto const &e : trace.events)
  {
    starved += e.kind == "starvation";
  }
  EXPECT_EQ(starved, 6u);
  for (auto const &row : trace.rows)
  {
    EXPECT_TRUE(row.recruited.empty());
  }
}

TEST(RunScenario, FirstPriceAllianceIsFunded)
{
  auto cfg         = small_config(Scenario::FedCDC, 12);
  cfg.mechanism    = Mechanism::FirstPrice;
  cfg.budget_share = 10.0;
  cfg.initial_budget = 1000.0;
  auto const trace = run_scenario(cfg);
  ASSERT_EQ(trace.alliances.size(), 1u);
  EXPECT_DOUBLE_EQ(trace.alliances[0].budget, 30.0);
}

TEST(EmitMetrics, OneRoundLayout)
{
  auto const trace = run_scenario(small_config(Scenario::Restricted, 1));
  auto const dir   = scratch("layout");
  emit_metrics(trace, dir);
  std::istringstream csv(slurp(dir / "accuracy.csv"));
  std::string        line;
  std::vector<std::string> lines;
  while (std::getline(csv, line))
  {
    lines.push_back(line);
  }
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "round,dc_id,val_acc,test_acc,mean_acc");
  EXPECT_EQ(lines[1].rfind("0,0,", 0), 0u);
  EXPECT_EQ(slurp(dir / "alliances.json"), "[]\n");
  auto const summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["scenario"], "restricted");
  EXPECT_EQ(summary["per_dc"].size(), 3u);
}

TEST(EmitMetrics, RejectsEmptyTraceAndUnwritableDir)
{
  EXPECT_THROW(emit_metrics(MetricsTrace{}, scratch("empty")), std::invalid_argument);
  auto const trace = run_scenario(small_config(Scenario::Restricted, 1));
  auto const file  = scratch("blocker");
  std::ofstream(file) << "x";
  EXPECT_THROW(emit_metrics(trace, file / "sub"), std::runtime_error);
  std::filesystem::remove(file);
}

TEST(Compare, RecoveredGap)
{
  auto const g = recovered_gap(79.88, 50.67, 82.90);
  ASSERT_TRUE(g.has_value());
  EXPECT_NEAR(*g, (79.88 - 50.67) / (82.90 - 50.67), 1e-12);
  EXPECT_NEAR(*g, 0.906, 1e-3);
  EXPECT_FALSE(recovered_gap(0.6, 0.5, 0.5).has_value());
}

TEST(Compare, DegenerateReportSaysUndefined)
{
  CompareReport r;
  r.final_accuracy[Scenario::Restricted] = 0.5;
  EXPECT_NE(r.table().find("undefined"), std::string::npos);
}

TEST(Config, JsonRoundTrip)
{
  auto cfg           = small_config(Scenario::FedCDC);
  cfg.mechanism      = Mechanism::FirstPrice;
  cfg.fl.method      = fed::Aggregation::FedDF;
  cfg.thresholds     = {3, 4};
  nlohmann::json j   = cfg;
  auto const     back = config_from_json(j);
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(Config, RejectsUnknownKeysAndBadValues)
{
  EXPECT_THROW(config_from_json(nlohmann::json{{"roundz", 3}}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"fl", {{"method", "fedprox"}}}}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"rounds", "many"}}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"scenario", "chaos"}}), ConfigError);
  auto cfg        = default_config();
  cfg.distill.alpha = 2.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, LoadFromFile)
{
  EXPECT_NO_THROW(load_config("default").validate());
  auto const dir = scratch("cfg");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "ok.json") << R"({"scenario": "restricted", "rounds": 7, "seed": 3})";
  auto const cfg = load_config((dir / "ok.json").string());
  EXPECT_EQ(cfg.scenario, Scenario::Restricted);
  EXPECT_EQ(cfg.rounds, 7u);
  EXPECT_EQ(cfg.partition.seed, 3u);
  std::ofstream(dir / "bad.json") << R"({"rounds": )";
  EXPECT_THROW(load_config((dir / "bad.json").string()), ParseError);
  EXPECT_THROW(load_config((dir / "missing.json").string()), ConfigError);
}
