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

#include "fedcdc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedcdc/errors.hpp"
#include "fedcdc/parallel.hpp"

namespace fedcdc::sim {

namespace {

// Stream tags for derive_seed so every random draw has its own coordinates.
enum Stream : std::uint64_t
{
  kBlobs = 1,
  kInit,
  kMatch,
  kTrain,
  kMerge,
  kAlliance,
};

data::LabeledDataset load_base(ScenarioConfig const &cfg)
{
  if (cfg.data.kind == "idx")
  {
    return data::load_idx(cfg.data.idx_images, cfg.data.idx_labels);
  }
  auto              spec   = cfg.partition;
  spec.seed                = cfg.seed;
  auto const        demand = data::partition_demand(spec, cfg.data.num_classes);
  std::size_t const per_class = *std::max_element(demand.begin(), demand.end());
  return data::gen_blobs(cfg.data.num_classes, cfg.data.dim, per_class, cfg.data.spread,
                         derive_seed(cfg.seed, {kBlobs}));
}

struct BestSnapshot
{
  double      val  = -1.0;
  double      test = 0.0;
  std::size_t round = 0;
};

class Market
{
public:
  explicit Market(ScenarioConfig const &cfg)
    : cfg_(cfg)
  {
    auto spec = cfg.partition;
    spec.seed = cfg.seed;
    auto base = load_base(cfg);
    part_     = data::build_market_partition(spec, base);

    model_spec_.input_dim   = base.dim();
    model_spec_.hidden      = cfg.hidden;
    model_spec_.num_classes = base.num_classes;

    for (std::size_t o = 0; o < part_.owner_shards.size(); ++o)
    {
      market::DataOwner owner;
      owner.id     = o;
      owner.shard  = std::make_shared<data::LabeledDataset const>(std::move(part_.owner_shards[o]));
      owner.labels = part_.owner_labels[o];
      owner.validate();
      owners_.push_back(std::move(owner));
    }
    for (std::size_t i = 0; i < part_.consumer_labels.size(); ++i)
    {
      market::DataConsumer dc;
      dc.id         = i;
      dc.labels     = part_.consumer_labels[i];
      dc.model      = nn::Mlp(model_spec_.dims(), dc.labels, derive_seed(cfg.seed, {kInit, i}));
      dc.expert     = dc.model;
      dc.validation = std::move(part_.validation[i]);
      dc.test       = std::move(part_.test[i]);
      dc.budget     = cfg.initial_budget;
      dc.validate();
      consumers_.push_back(std::move(dc));
    }
    best_.resize(consumers_.size());
    history_ = std::make_unique<market::BiddingHistory>(cfg.history_span, consumers_.size(),
                                                        owners_.size());

    trace_.scenario  = cfg.scenario;
    trace_.seed      = cfg.seed;
    trace_.rounds    = cfg.rounds;
    trace_.consumers = consumers_.size();
  }

  MetricsTrace run()
  {
    for (std::size_t r = 0; r < cfg_.rounds; ++r)
    {
      bool rematch = r % cfg_.matching_period == 0 || !matching_;
      if (cfg_.scenario == Scenario::FedCDC && r >= cfg_.alliance_start &&
          (r - cfg_.alliance_start) % cfg_.matching_period == 0)
      {
        rematch = create_alliances(r) || rematch;
      }
      auto const bids = collect_bids();
      record_history(r, bids);
      if (cfg_.scenario == Scenario::Unrestricted)
      {
        matching_ = unrestricted_matching(bids);
      }
      else if (rematch)
      {
        matching_ = match(r, bids);
      }
      train(r);
      if (cfg_.scenario == Scenario::FedCDC)
      {
        merge(r);
      }
      evaluate(r);
    }
    return std::move(trace_);
  }

private:
  std::size_t total_consumers() const
  {
    return consumers_.size() + alliances_.size();
  }

  bool in_alliance_owner(ConsumerId i, OwnerId o) const
  {
    for (auto const &a : alliances_)
    {
      auto const &c = a.candidate;
      if (std::binary_search(c.participants.begin(), c.participants.end(), i) &&
          std::binary_search(c.contested.begin(), c.contested.end(), o))
      {
        return true;
      }
    }
    return false;
  }

  // Rows 0..m-1 are real consumers, then one row per alliance.
  market::BidMatrix collect_bids() const
  {
    market::BidMatrix bids(total_consumers(), owners_.size());
    for (auto const &dc : consumers_)
    {
      for (auto const &o : owners_)
      {
        if (!set_intersection(dc.labels, o.labels).empty() && !in_alliance_owner(dc.id, o.id))
        {
          bids.set(dc.id, o.id, cfg_.bid_amount);
        }
      }
    }
    for (std::size_t a = 0; a < alliances_.size(); ++a)
    {
      for (OwnerId o : alliances_[a].candidate.contested)
      {
        bids.set(consumers_.size() + a, o, cfg_.bid_amount);
      }
    }
    return bids;
  }

  void record_history(std::size_t r, market::BidMatrix const &bids)
  {
    market::BidMatrix real(consumers_.size(), owners_.size());
    for (std::size_t i = 0; i < consumers_.size(); ++i)
    {
      for (std::size_t o = 0; o < owners_.size(); ++o)
      {
        real.set(i, o, bids(i, o));
      }
    }
    history_->record(r, real);
  }

  std::vector<std::vector<OwnerId>> unrestricted_matching(market::BidMatrix const &bids) const
  {
    std::vector<std::vector<OwnerId>> out(total_consumers());
    for (std::size_t i = 0; i < bids.consumers(); ++i)
    {
      for (std::size_t o = 0; o < bids.owners(); ++o)
      {
        if (bids(i, o) > 0.0)
        {
          out[i].push_back(o);
        }
      }
    }
    return out;
  }

  std::vector<std::vector<OwnerId>> match(std::size_t r, market::BidMatrix const &bids)
  {
    market::Matching m;
    if (cfg_.mechanism == Mechanism::FirstPrice)
    {
      std::vector<double> budgets;
      for (auto const &dc : consumers_)
      {
        budgets.push_back(dc.budget);
      }
      for (auto const &a : alliances_)
      {
        budgets.push_back(a.consumer.budget);
      }
      m = market::match_first_price(bids, budgets);
      for (std::size_t i = 0; i < consumers_.size(); ++i)
      {
        consumers_[i].budget = budgets[i];
      }
      for (std::size_t a = 0; a < alliances_.size(); ++a)
      {
        alliances_[a].consumer.budget = budgets[consumers_.size() + a];
      }
    }
    else
    {
      std::vector<OwnerId>          contested;
      std::set<ConsumerId>          contenders;
      std::map<OwnerId, ConsumerId> uncontested;
      for (std::size_t o = 0; o < bids.owners(); ++o)
      {
        std::vector<ConsumerId> bidders;
        for (std::size_t i = 0; i < bids.consumers(); ++i)
        {
          if (bids(i, o) > 0.0)
          {
            bidders.push_back(i);
          }
        }
        if (bidders.size() == 1)
        {
          uncontested.emplace(o, bidders.front());
        }
        else if (bidders.size() > 1)
        {
          contested.push_back(o);
          contenders.insert(bidders.begin(), bidders.end());
        }
      }
      for (OwnerId o : contested)
      {
        for (ConsumerId i : contenders)
        {
          if (!(bids(i, o) > 0.0))
          {
            throw ConfigError("random-partition matching needs every contender to bid on every "
                              "contested owner; consumer " +
                              std::to_string(i) + " skips owner " + std::to_string(o));
          }
        }
      }
      std::vector<ConsumerId> pool(contenders.begin(), contenders.end());
      if (!pool.empty() && contested.size() % pool.size() != 0)
      {
        throw ConfigError(std::to_string(contested.size()) +
                          " contested owners cannot be split evenly between " +
                          std::to_string(pool.size()) + " consumers");
      }
      std::size_t const per_dc = pool.empty() ? 0 : contested.size() / pool.size();
      m = market::match_random_partition(contested, pool, per_dc, uncontested,
                                         derive_seed(cfg_.seed, {kMatch, r}));
    }
    std::vector<std::vector<OwnerId>> out(total_consumers());
    for (auto const &[o, c] : m.assignment)
    {
      out.at(c).push_back(o);
    }
    return out;
  }

  bool create_alliances(std::size_t r)
  {
    auto report = alliance::create_alliances(
        consumers_, *history_, cfg_.thresholds, policy_, alliances_, uids_, cfg_.budget_share,
        model_spec_, consumers_.size() + alliances_.size(), derive_seed(cfg_.seed, {kAlliance, r}));
    for (auto const &note : report.offers.rejected_responses)
    {
      trace_.events.push_back({r, "rejected_response", note});
    }
    for (auto const &note : report.created.skipped)
    {
      trace_.events.push_back({r, "alliance_skipped", note});
    }
    for (auto &a : report.created.alliances)
    {
      AllianceRecord rec;
      rec.round         = r;
      rec.uid           = a.candidate.uid;
      rec.synthetic_id  = a.consumer.id;
      rec.participants  = a.candidate.participants;
      rec.shared_labels = a.candidate.shared_labels;
      rec.model_labels  = a.consumer.labels;
      rec.contested     = a.candidate.contested;
      rec.value         = a.value;
      rec.payments      = a.payments;
      rec.budget        = a.budget();
      trace_.alliances.push_back(rec);
      for (ConsumerId i : a.candidate.participants)
      {
        consumers_[i].budget -= a.payments.at(i);
        policy_.add_membership(i, a.candidate.shared_labels);
      }
      std::ostringstream detail;
      detail << "uid " << a.candidate.uid << " value " << a.value;
      trace_.events.push_back({r, "alliance_created", detail.str()});
      alliances_.push_back(std::move(a));
    }
    return !report.created.alliances.empty();
  }

  bool has_alliance(ConsumerId i) const
  {
    return std::any_of(alliances_.begin(), alliances_.end(), [&](alliance::Alliance const &a) {
      return std::binary_search(a.candidate.participants.begin(),
                                a.candidate.participants.end(), i);
    });
  }

  void train(std::size_t r)
  {
    std::size_t const        n = total_consumers();
    std::vector<fed::RoundOutcome> outcomes(n);
    auto                     fl = cfg_.fl;
    fl.threads                  = 1;
    parallel_for(n, cfg_.threads, [&](std::size_t c) {
      std::vector<market::DataOwner> recruited;
      for (OwnerId o : (*matching_)[c])
      {
        recruited.push_back(owners_[o]);
      }
      nn::Mlp const &start = c < consumers_.size()
                                 ? consumers_[c].model
                                 : alliances_[c - consumers_.size()].consumer.model;
      outcomes[c] = fed::run_fl_round(start, recruited, fl, derive_seed(cfg_.seed, {kTrain, r, c}),
                                      &part_.public_set);
    });
    for (std::size_t c = 0; c < n; ++c)
    {
      if (outcomes[c].starved)
      {
        trace_.events.push_back({r, "starvation", "consumer " + std::to_string(c) +
                                                      " recruited no owners; training skipped"});
      }
      if (c < consumers_.size())
      {
        auto &dc = consumers_[c];
        if (has_alliance(c))
        {
          dc.expert = std::move(outcomes[c].model);
        }
        else
        {
          dc.model = std::move(outcomes[c].model);
        }
      }
      else
      {
        alliances_[c - consumers_.size()].consumer.model = std::move(outcomes[c].model);
      }
    }
  }

  void merge(std::size_t r)
  {
    std::vector<ConsumerId> members;
    for (auto const &dc : consumers_)
    {
      if (has_alliance(dc.id))
      {
        members.push_back(dc.id);
      }
    }
    std::vector<nn::Mlp> merged(members.size());
    parallel_for(members.size(), cfg_.threads, [&](std::size_t k) {
      auto const              &dc = consumers_[members[k]];
      distill::TeacherEnsemble ensemble;
      ensemble.target_active = dc.model.active_mask();
      for (auto const &a : alliances_)
      {
        if (std::binary_search(a.candidate.participants.begin(), a.candidate.participants.end(),
                               dc.id))
        {
          ensemble.teachers.push_back(&a.consumer.model);
        }
      }
      ensemble.teachers.push_back(&dc.expert);
      merged[k] = distill::distill_train(dc.model, ensemble, part_.public_set, cfg_.distill,
                                         derive_seed(cfg_.seed, {kMerge, r, dc.id}))
                      .student;
    });
    for (std::size_t k = 0; k < members.size(); ++k)
    {
      consumers_[members[k]].model = std::move(merged[k]);
    }
  }

  void evaluate(std::size_t r)
  {
    for (auto const &dc : consumers_)
    {
      RoundRecord rec;
      rec.round    = r;
      rec.dc       = dc.id;
      rec.val_acc  = fed::evaluate(dc.model, dc.validation, dc.labels);
      rec.test_acc = dc.test.empty() ? rec.val_acc : fed::evaluate(dc.model, dc.test, dc.labels);
      auto &best   = best_[dc.id];
      if (rec.val_acc > best.val)
      {
        best = {rec.val_acc, rec.test_acc, r};
      }
      rec.best_test_acc = best.test;
      rec.best_round    = best.round;
      rec.recruited     = (*matching_)[dc.id];
      trace_.rows.push_back(std::move(rec));
    }
    for (std::size_t a = 0; a < alliances_.size(); ++a)
    {
      auto const &sc = alliances_[a].consumer;
      if (!sc.validation.empty())
      {
        trace_.alliances[a].final_val_acc =
            fed::evaluate(sc.model, sc.validation, alliances_[a].candidate.shared_labels);
      }
    }
  }

  ScenarioConfig const                            &cfg_;
  data::MarketPartition                            part_;
  alliance::ModelSpec                              model_spec_;
  std::vector<market::DataOwner>                   owners_;
  std::vector<market::DataConsumer>                consumers_;
  std::vector<alliance::Alliance>                  alliances_;
  std::unique_ptr<market::BiddingHistory>          history_;
  std::optional<std::vector<std::vector<OwnerId>>> matching_;
  alliance::UidSource                              uids_;
  alliance::DefaultAcceptancePolicy                policy_;
  std::vector<BestSnapshot>                        best_;
  MetricsTrace                                     trace_;
};

std::string fixed(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

double MetricsTrace::mean_accuracy(std::size_t round) const
{
  double      sum = 0.0;
  std::size_t n   = 0;
  for (auto const &row : rows)
  {
    if (row.round == round)
    {
      sum += row.best_test_acc;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double MetricsTrace::final_mean_accuracy() const
{
  return rows.empty() ? 0.0 : mean_accuracy(rows.back().round);
}

MetricsTrace run_scenario(ScenarioConfig const &cfg)
{
  cfg.validate();
  Market market(cfg);
  return market.run();
}

void emit_metrics(MetricsTrace const &trace, std::filesystem::path const &out_dir)
{
  if (trace.rows.empty())
  {
    throw std::invalid_argument("cannot emit metrics for an empty trace");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  auto open = [&](char const *name) {
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out)
    {
      throw std::runtime_error("cannot write " + (out_dir / name).string());
    }
    return out;
  };

  {
    auto out = open("accuracy.csv");
    out << "round,dc_id,val_acc,test_acc,mean_acc\n";
    for (auto const &row : trace.rows)
    {
      out << row.round << ',' << row.dc << ',' << fixed(row.val_acc) << ','
          << fixed(row.best_test_acc) << ',' << fixed(trace.mean_accuracy(row.round)) << '\n';
    }
  }

  nlohmann::json alliances = nlohmann::json::array();
  for (auto const &a : trace.alliances)
  {
    nlohmann::json payments = nlohmann::json::object();
    for (auto const &[id, p] : a.payments)
    {
      payments[std::to_string(id)] = p;
    }
    alliances.push_back({{"round", a.round},
                         {"uid", a.uid},
                         {"synthetic_dc", a.synthetic_id},
                         {"participants", a.participants},
                         {"shared_labels", a.shared_labels},
                         {"model_labels", a.model_labels},
                         {"contested_owners", a.contested},
                         {"value", a.value},
                         {"payments", payments},
                         {"budget", a.budget},
                         {"final_val_acc", a.final_val_acc}});
  }
  open("alliances.json") << alliances.dump(2) << '\n';

  nlohmann::json per_dc = nlohmann::json::array();
  for (auto const &row : trace.rows)
  {
    if (row.round == trace.rows.back().round)
    {
      per_dc.push_back({{"dc", row.dc},
                        {"best_round", row.best_round},
                        {"test_acc", row.best_test_acc},
                        {"final_val_acc", row.val_acc}});
    }
  }
  nlohmann::json events = nlohmann::json::array();
  for (auto const &e : trace.events)
  {
    events.push_back({{"round", e.round}, {"kind", e.kind}, {"detail", e.detail}});
  }
  nlohmann::json summary{{"scenario", to_string(trace.scenario)},
                         {"seed", trace.seed},
                         {"rounds", trace.rounds},
                         {"consumers", trace.consumers},
                         {"final_mean_accuracy", trace.final_mean_accuracy()},
                         {"per_dc", per_dc},
                         {"alliances", trace.alliances.size()},
                         {"events", events}};
  open("summary.json") << summary.dump(2) << '\n';
}

std::optional<double> recovered_gap(double fedcdc, double restricted, double unrestricted)
{
  double const denom = unrestricted - restricted;
  if (denom == 0.0 || !std::isfinite(denom))
  {
    return std::nullopt;
  }
  return (fedcdc - restricted) / denom;
}

std::string CompareReport::table() const
{
  std::ostringstream os;
  os << "seed " << seed << '\n';
  os << "scenario        final_mean_acc\n";
  for (auto const &[s, acc] : final_accuracy)
  {
    std::string name = to_string(s);
    name.resize(16, ' ');
    os << name << fixed(acc) << '\n';
  }
  os << "recovered_gap   " << (gap_ratio ? fixed(*gap_ratio) : std::string("undefined")) << '\n';
  return os.str();
}

CompareReport compare_scenarios(ScenarioConfig const &base)
{
  CompareReport report;
  report.seed = base.seed;
  for (auto s : {Scenario::Unrestricted, Scenario::Restricted, Scenario::FedCDC})
  {
    auto cfg     = base;
    cfg.scenario = s;
    report.final_accuracy[s] = run_scenario(cfg).final_mean_accuracy();
  }
  report.gap_ratio = recovered_gap(report.final_accuracy.at(Scenario::FedCDC),
                                   report.final_accuracy.at(Scenario::Restricted),
                                   report.final_accuracy.at(Scenario::Unrestricted));
  return report;
}

}  // namespace fedcdc::sim
