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

#include "fedcdc/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "fedcdc/errors.hpp"

namespace fedcdc::sim {

using nlohmann::json;

std::string to_string(Scenario s)
{
  switch (s)
  {
  case Scenario::Unrestricted:
    return "unrestricted";
  case Scenario::Restricted:
    return "restricted";
  case Scenario::FedCDC:
    return "fedcdc";
  }
  return "?";
}

std::string to_string(Mechanism m)
{
  return m == Mechanism::RandomPartition ? "random_partition" : "first_price";
}

Scenario parse_scenario(std::string const &name)
{
  for (auto s : {Scenario::Unrestricted, Scenario::Restricted, Scenario::FedCDC})
  {
    if (to_string(s) == name)
    {
      return s;
    }
  }
  throw ConfigError("unknown scenario '" + name + "'");
}

Mechanism parse_mechanism(std::string const &name)
{
  for (auto m : {Mechanism::RandomPartition, Mechanism::FirstPrice})
  {
    if (to_string(m) == name)
    {
      return m;
    }
  }
  throw ConfigError("unknown matching mechanism '" + name + "'");
}

namespace {

std::string method_name(fed::Aggregation a)
{
  return a == fed::Aggregation::FedAvg ? "fedavg" : "feddf";
}

fed::Aggregation parse_method(std::string const &name)
{
  if (name == "fedavg")
  {
    return fed::Aggregation::FedAvg;
  }
  if (name == "feddf")
  {
    return fed::Aggregation::FedDF;
  }
  throw ConfigError("unknown aggregation method '" + name + "'");
}

// Reads optional keys from one JSON object and rejects any key it never read.
class Section
{
public:
  Section(json const &j, std::string path)
    : j_(j)
    , path_(std::move(path))
  {
    if (!j_.is_object())
    {
      throw ConfigError("config section '" + path_ + "' must be an object");
    }
  }

  template <typename T>
  void get(char const *key, T &out)
  {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end())
    {
      try
      {
        out = it->get<T>();
      }
      catch (json::exception const &e)
      {
        throw ConfigError("config key '" + path_ + key + "': " + e.what());
      }
    }
  }

  json const *child(char const *key)
  {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const
  {
    for (auto const &[key, value] : j_.items())
    {
      if (!seen_.contains(key))
      {
        throw ConfigError("unknown config key '" + path_ + key + "'");
      }
    }
  }

private:
  json const           &j_;
  std::string           path_;
  std::set<std::string> seen_;
};

}  // namespace

void ScenarioConfig::validate() const
{
  if (rounds < 1)
  {
    throw ConfigError("rounds must be >= 1");
  }
  if (matching_period < 1)
  {
    throw ConfigError("matching_period must be >= 1");
  }
  if (history_span < 1)
  {
    throw ConfigError("history_span must be >= 1");
  }
  if (scenario == Scenario::FedCDC && alliance_start >= rounds)
  {
    throw ConfigError("alliance_start (" + std::to_string(alliance_start) +
                      ") must precede the last round (" + std::to_string(rounds) + ")");
  }
  if (data.kind != "blobs" && data.kind != "idx")
  {
    throw ConfigError("data.kind must be 'blobs' or 'idx'");
  }
  if (data.kind == "idx" && (data.idx_images.empty() || data.idx_labels.empty()))
  {
    throw ConfigError("idx data source needs idx_images and idx_labels paths");
  }
  if (data.kind == "blobs")
  {
    partition.validate(data.num_classes);
    if (data.dim < 2 || !(data.spread >= 0.0))
    {
      throw ConfigError("blob data needs dim >= 2 and a nonnegative spread");
    }
  }
  if (hidden.empty() ||
      std::find(hidden.begin(), hidden.end(), std::size_t{0}) != hidden.end())
  {
    throw ConfigError("model.hidden must list positive layer widths");
  }
  fl.validate();
  distill.validate();
  if (scenario == Scenario::FedCDC && partition.public_size == 0)
  {
    throw ConfigError("the fedcdc scenario needs a public distillation set");
  }
  if (fl.method == fed::Aggregation::FedDF && partition.public_size == 0)
  {
    throw ConfigError("FedDF aggregation needs a public distillation set");
  }
  if (!(bid_amount > 0.0) || initial_budget < 0.0 || budget_share < 0.0)
  {
    throw ConfigError("bid_amount must be positive; budgets nonnegative");
  }
  if (partition.n_dc > alliance::kMaxEnumeratedConsumers)
  {
    throw ConfigError("too many consumers for alliance enumeration");
  }
}

ScenarioConfig default_config()
{
  return ScenarioConfig{};
}

void to_json(json &j, ScenarioConfig const &c)
{
  j = json{
      {"scenario", to_string(c.scenario)},
      {"rounds", c.rounds},
      {"matching_period", c.matching_period},
      {"alliance_start", c.alliance_start},
      {"history_span", c.history_span},
      {"seed", c.seed},
      {"threads", c.threads},
      {"data",
       {{"kind", c.data.kind},
        {"num_classes", c.data.num_classes},
        {"dim", c.data.dim},
        {"spread", c.data.spread},
        {"idx_images", c.data.idx_images},
        {"idx_labels", c.data.idx_labels}}},
      {"partition",
       {{"n_dc", c.partition.n_dc},
        {"n_do", c.partition.n_do},
        {"n_c", c.partition.n_c},
        {"samples_per_do", c.partition.samples_per_do},
        {"samples_per_val", c.partition.samples_per_val},
        {"samples_per_test", c.partition.samples_per_test},
        {"public_size", c.partition.public_size},
        {"shuffle_classes", c.partition.shuffle_classes}}},
      {"model", {{"hidden", c.hidden}}},
      {"fl",
       {{"method", method_name(c.fl.method)},
        {"local_epochs", c.fl.local_epochs},
        {"distill_epochs", c.fl.distill_epochs},
        {"batch_size", c.fl.batch_size},
        {"lr", c.fl.lr},
        {"alpha", c.fl.alpha}}},
      {"distill",
       {{"alpha", c.distill.alpha},
        {"epochs", c.distill.epochs},
        {"batch_size", c.distill.batch_size},
        {"lr", c.distill.lr}}},
      {"alliance",
       {{"min_labels", c.thresholds.min_labels},
        {"min_owners", c.thresholds.min_owners},
        {"budget_share", c.budget_share}}},
      {"market",
       {{"mechanism", to_string(c.mechanism)},
        {"bid_amount", c.bid_amount},
        {"initial_budget", c.initial_budget}}},
  };
}

ScenarioConfig config_from_json(json const &j)
{
  ScenarioConfig c = default_config();
  Section        root(j, "");

  std::string scenario = to_string(c.scenario);
  root.get("scenario", scenario);
  c.scenario = parse_scenario(scenario);
  root.get("rounds", c.rounds);
  root.get("matching_period", c.matching_period);
  root.get("alliance_start", c.alliance_start);
  root.get("history_span", c.history_span);
  root.get("seed", c.seed);
  root.get("threads", c.threads);

  if (auto const *d = root.child("data"))
  {
    Section s(*d, "data.");
    s.get("kind", c.data.kind);
    s.get("num_classes", c.data.num_classes);
    s.get("dim", c.data.dim);
    s.get("spread", c.data.spread);
    s.get("idx_images", c.data.idx_images);
    s.get("idx_labels", c.data.idx_labels);
    s.finish();
  }
  if (auto const *p = root.child("partition"))
  {
    Section s(*p, "partition.");
    s.get("n_dc", c.partition.n_dc);
    s.get("n_do", c.partition.n_do);
    s.get("n_c", c.partition.n_c);
    s.get("samples_per_do", c.partition.samples_per_do);
    s.get("samples_per_val", c.partition.samples_per_val);
    s.get("samples_per_test", c.partition.samples_per_test);
    s.get("public_size", c.partition.public_size);
    s.get("shuffle_classes", c.partition.shuffle_classes);
    s.finish();
  }
  if (auto const *m = root.child("model"))
  {
    Section s(*m, "model.");
    s.get("hidden", c.hidden);
    s.finish();
  }
  if (auto const *f = root.child("fl"))
  {
    Section     s(*f, "fl.");
    std::string method = method_name(c.fl.method);
    s.get("method", method);
    c.fl.method = parse_method(method);
    s.get("local_epochs", c.fl.local_epochs);
    s.get("distill_epochs", c.fl.distill_epochs);
    s.get("batch_size", c.fl.batch_size);
    s.get("lr", c.fl.lr);
    s.get("alpha", c.fl.alpha);
    s.finish();
  }
  if (auto const *d = root.child("distill"))
  {
    Section s(*d, "distill.");
    s.get("alpha", c.distill.alpha);
    s.get("epochs", c.distill.epochs);
    s.get("batch_size", c.distill.batch_size);
    s.get("lr", c.distill.lr);
    s.finish();
  }
  if (auto const *a = root.child("alliance"))
  {
    Section s(*a, "alliance.");
    s.get("min_labels", c.thresholds.min_labels);
    s.get("min_owners", c.thresholds.min_owners);
    s.get("budget_share", c.budget_share);
    s.finish();
  }
  if (auto const *m = root.child("market"))
  {
    Section     s(*m, "market.");
    std::string mech = to_string(c.mechanism);
    s.get("mechanism", mech);
    c.mechanism = parse_mechanism(mech);
    s.get("bid_amount", c.bid_amount);
    s.get("initial_budget", c.initial_budget);
    s.finish();
  }
  root.finish();
  c.partition.seed = c.seed;
  return c;
}

ScenarioConfig load_config(std::string const &path_or_name)
{
  if (path_or_name == "default")
  {
    return default_config();
  }
  std::ifstream in(path_or_name);
  if (!in)
  {
    throw ConfigError("cannot open config file " + path_or_name);
  }
  json j;
  try
  {
    in >> j;
  }
  catch (json::parse_error const &e)
  {
    throw ParseError("config " + path_or_name + " is not valid JSON: " + e.what(), e.byte);
  }
  return config_from_json(j);
}

}  // namespace fedcdc::sim
