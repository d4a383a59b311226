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

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedcdc/alliance.hpp"
#include "fedcdc/config.hpp"

namespace fedcdc::sim {

struct RoundRecord
{
  std::size_t          round         = 0;
  ConsumerId           dc            = 0;
  double               val_acc       = 0.0;  // current model
  double               test_acc      = 0.0;  // current model
  double               best_test_acc = 0.0;  // test accuracy of the best-validation snapshot so far
  std::size_t          best_round    = 0;
  std::vector<OwnerId> recruited;
};

struct AllianceRecord
{
  std::size_t                  round = 0;
  alliance::Uid                uid   = 0;
  ConsumerId                   synthetic_id = 0;
  std::vector<ConsumerId>      participants;
  LabelSet                     shared_labels;
  LabelSet                     model_labels;
  std::vector<OwnerId>         contested;
  mwc::Weight                  value = 0;
  std::map<ConsumerId, double> payments;
  double                       budget        = 0.0;
  double                       final_val_acc = 0.0;  // on the shared labels
};

struct Event
{
  std::size_t round = 0;
  std::string kind;
  std::string detail;
};

struct MetricsTrace
{
  Scenario                    scenario = Scenario::FedCDC;
  std::uint64_t               seed     = 0;
  std::size_t                 rounds   = 0;
  std::size_t                 consumers = 0;
  std::vector<RoundRecord>    rows;  // ordered by (round, dc)
  std::vector<AllianceRecord> alliances;
  std::vector<Event>          events;

  /// Mean over consumers of the best-snapshot test accuracy after `round`.
  double mean_accuracy(std::size_t round) const;
  double final_mean_accuracy() const;
};

/// Runs the federated market round loop for cfg.scenario. Fully determined by cfg.
/// Throws ConfigError before any training if the configuration is invalid.
MetricsTrace run_scenario(ScenarioConfig const &cfg);

/// Writes accuracy.csv, alliances.json and summary.json into `out_dir`
/// (created if missing). Output bytes depend only on the trace.
void emit_metrics(MetricsTrace const &trace, std::filesystem::path const &out_dir);

/// (fedcdc - restricted) / (unrestricted - restricted); nullopt when the
/// denominator is zero.
std::optional<double> recovered_gap(double fedcdc, double restricted, double unrestricted);

struct CompareReport
{
  std::uint64_t              seed = 0;
  std::map<Scenario, double> final_accuracy;
  std::optional<double>      gap_ratio;

  std::string table() const;
};

/// Runs all three scenarios on the same seed and partition.
CompareReport compare_scenarios(ScenarioConfig const &base);

}  // namespace fedcdc::sim
