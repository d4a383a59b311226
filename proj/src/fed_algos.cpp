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

#include "fedcdc/fed_algos.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "fedcdc/errors.hpp"
#include "fedcdc/parallel.hpp"

namespace fedcdc::fed {

void FlRoundConfig::validate() const
{
  if (local_epochs < 1)
  {
    throw ConfigError("local_epochs must be >= 1");
  }
  if (method == Aggregation::FedDF && distill_epochs < 1)
  {
    throw ConfigError("FedDF needs distill_epochs >= 1");
  }
  if (batch_size == 0 || !(lr > 0.0))
  {
    throw ConfigError("batch size and learning rate must be positive");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0))
  {
    throw ConfigError("FedDF alpha must lie in [0,1]");
  }
}

nn::Mlp fedavg_aggregate(std::span<WeightedModel const> locals)
{
  if (locals.empty())
  {
    throw std::invalid_argument("fedavg_aggregate needs at least one model");
  }
  std::size_t total = 0;
  for (auto const &l : locals)
  {
    if (l.model == nullptr || !l.model->same_architecture(*locals.front().model))
    {
      throw ShapeError("fedavg_aggregate: local models differ in architecture or label mask");
    }
    total += l.samples;
  }
  if (total == 0)
  {
    throw std::invalid_argument("fedavg_aggregate: total sample count is zero");
  }
  nn::Mlp out = *locals.front().model;
  out.params().setZero();
  for (auto const &l : locals)
  {
    out.params() += (static_cast<double>(l.samples) / static_cast<double>(total)) *
                    l.model->params();
  }
  return out;
}

nn::Mlp local_train(nn::Mlp model, data::LabeledDataset const &shard, std::size_t epochs,
                    std::size_t batch_size, double lr, std::uint64_t seed)
{
  if (shard.empty())
  {
    return model;
  }
  nn::AdamState            opt(static_cast<std::size_t>(model.params().size()), {.lr = lr});
  std::mt19937_64          rng(seed);
  std::vector<std::size_t> order(shard.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  nn::Matrix           xb;
  std::vector<ClassId> yb;
  for (std::size_t e = 0; e < epochs; ++e)
  {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size)
    {
      std::size_t const len = std::min(batch_size, order.size() - start);
      xb.resize(static_cast<Eigen::Index>(len), shard.features.cols());
      yb.resize(len);
      for (std::size_t i = 0; i < len; ++i)
      {
        xb.row(static_cast<Eigen::Index>(i)) =
            shard.features.row(static_cast<Eigen::Index>(order[start + i]));
        yb[i] = shard.labels[order[start + i]];
      }
      nn::train_step(model, opt, xb, yb);
    }
  }
  return model;
}

FedDfResult feddf_round(nn::Mlp const &global, std::span<WeightedModel const> locals,
                        data::UnlabeledDataset const &public_set, FlRoundConfig const &cfg,
                        std::uint64_t seed)
{
  if (public_set.empty())
  {
    throw std::invalid_argument("FedDF needs a nonempty public dataset");
  }
  nn::Mlp student = fedavg_aggregate(locals);
  if (!student.same_architecture(global))
  {
    throw ShapeError("FedDF local models do not match the global architecture");
  }
  distill::TeacherEnsemble ensemble;
  ensemble.target_active = global.active_mask();
  for (auto const &l : locals)
  {
    ensemble.teachers.push_back(l.model);
  }
  distill::DistillConfig const dcfg{
      .alpha = cfg.alpha, .epochs = cfg.distill_epochs, .batch_size = cfg.batch_size, .lr = cfg.lr};
  auto res = distill::distill_train(std::move(student), ensemble, public_set, dcfg, seed,
                                    distill::TeacherWeighting::Uniform);
  return {std::move(res.student), res.initial_loss, res.final_loss};
}

RoundOutcome run_fl_round(nn::Mlp const &model, std::span<market::DataOwner const> owners,
                          FlRoundConfig const &cfg, std::uint64_t seed,
                          data::UnlabeledDataset const *public_set)
{
  cfg.validate();
  LabelSet const active = model.active_labels();

  std::vector<data::LabeledDataset> shards;
  std::vector<OwnerId>              ids;
  for (auto const &o : owners)
  {
    if (!o.shard)
    {
      continue;
    }
    auto usable = is_subset(o.labels, active) ? *o.shard : o.shard->filter(active);
    if (!usable.empty())
    {
      shards.push_back(std::move(usable));
      ids.push_back(o.id);
    }
  }

  RoundOutcome out{model, false, shards.size(), 0};
  if (shards.empty())
  {
    out.starved = true;
    return out;
  }

  std::vector<nn::Mlp> locals(shards.size());
  parallel_for(shards.size(), cfg.threads, [&](std::size_t i) {
    locals[i] = local_train(model, shards[i], cfg.local_epochs, cfg.batch_size, cfg.lr,
                            derive_seed(seed, {ids[i]}));
  });

  std::vector<WeightedModel> weighted;
  for (std::size_t i = 0; i < locals.size(); ++i)
  {
    weighted.push_back({&locals[i], shards[i].size()});
    out.samples_used += shards[i].size();
  }

  if (cfg.method == Aggregation::FedAvg)
  {
    out.model = fedavg_aggregate(weighted);
  }
  else
  {
    if (public_set == nullptr)
    {
      throw std::invalid_argument("FedDF aggregation requires the public dataset");
    }
    out.model = feddf_round(model, weighted, *public_set, cfg, derive_seed(seed, {0xDFULL})).model;
  }
  return out;
}

double evaluate(nn::Mlp const &model, data::LabeledDataset const &shard,
                LabelSet const &restrict_to)
{
  if (shard.empty())
  {
    throw std::invalid_argument("cannot evaluate on an empty shard");
  }
  if (restrict_to.empty() || !is_subset(restrict_to, model.active_labels()))
  {
    throw std::invalid_argument("evaluation labels " + to_string(restrict_to) +
                                " are not a nonempty subset of the model's active labels");
  }
  nn::Matrix const logits  = model.forward(shard.features);
  std::size_t      correct = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r)
  {
    ClassId best = *restrict_to.begin();
    for (ClassId c : restrict_to)
    {
      if (logits(r, c) > logits(r, best))
      {
        best = c;
      }
    }
    if (best == shard.labels[static_cast<std::size_t>(r)])
    {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(shard.size());
}

}  // namespace fedcdc::fed
