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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedcdc/alliance.hpp"
#include "fedcdc/dataset.hpp"
#include "fedcdc/distillation.hpp"
#include "fedcdc/fed_algos.hpp"

namespace fedcdc::sim {

enum class Scenario
{
  Unrestricted,  // every consumer recruits every owner it wants, every round
  Restricted,    // competitive market, contested owners split by the mechanism
  FedCDC,        // restricted market plus alliances and distillation merges
};

enum class Mechanism
{
  RandomPartition,
  FirstPrice,
};

std::string to_string(Scenario s);
std::string to_string(Mechanism m);
Scenario    parse_scenario(std::string const &name);
Mechanism   parse_mechanism(std::string const &name);

struct DataSourceConfig
{
  std::string kind        = "blobs";  // "blobs" or "idx"
  std::size_t num_classes = 10;
  std::size_t dim         = 16;
  double      spread      = 1.6;
  std::string idx_images;
  std::string idx_labels;
};

struct ScenarioConfig
{
  Scenario    scenario        = Scenario::FedCDC;
  std::size_t rounds          = 50;
  std::size_t matching_period = 5;
  std::size_t alliance_start  = 10;
  std::size_t history_span    = 5;

  data::PartitionSpec partition;
  DataSourceConfig    data;
  std::vector<std::size_t> hidden = {64, 32};

  fed::FlRoundConfig     fl;
  distill::DistillConfig distill;
  alliance::Thresholds   thresholds;

  Mechanism mechanism      = Mechanism::RandomPartition;
  double    bid_amount     = 1.0;
  double    initial_budget = 100.0;
  double    budget_share   = 0.0;

  std::uint64_t seed    = 0;
  std::size_t   threads = 0;  // 0 = hardware concurrency

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

/// Desk-scale defaults mirroring the evaluation setup: 3 consumers, 24 owners
/// in 4 groups, n_c = 4, 50 rounds, MLP [64, 32], Adam lr 1e-3, batch 32.
ScenarioConfig default_config();

void           to_json(nlohmann::json &j, ScenarioConfig const &cfg);
ScenarioConfig config_from_json(nlohmann::json const &j);

/// Reads a JSON scenario file; missing keys keep their defaults, unknown
/// keys are rejected. The literal name "default" yields default_config().
ScenarioConfig load_config(std::string const &path_or_name);

}  // namespace fedcdc::sim
