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
#include <span>
#include <vector>

#include "fedcdc/dataset.hpp"
#include "fedcdc/distillation.hpp"
#include "fedcdc/market.hpp"
#include "fedcdc/nn.hpp"

namespace fedcdc::fed {

enum class Aggregation
{
  FedAvg,
  FedDF,
};

struct FlRoundConfig
{
  std::size_t local_epochs   = 5;
  std::size_t distill_epochs = 5;   // server-side distillation, FedDF only
  std::size_t batch_size     = 32;
  double      lr             = 1e-3;
  double      alpha          = 1.0; // loss mix for FedDF distillation
  Aggregation method         = Aggregation::FedAvg;
  std::size_t threads        = 1;   // workers for per-owner local training

  void validate() const;
};

struct WeightedModel
{
  nn::Mlp const *model   = nullptr;
  std::size_t    samples = 0;
};

/// Sample-count weighted parameter mean. All models must share dims and masks.
nn::Mlp fedavg_aggregate(std::span<WeightedModel const> locals);

/// `epochs` shuffled minibatch passes of Adam over `shard`, fresh optimiser state.
nn::Mlp local_train(nn::Mlp model, data::LabeledDataset const &shard, std::size_t epochs,
                    std::size_t batch_size, double lr, std::uint64_t seed);

struct FedDfResult
{
  nn::Mlp model;
  double  initial_loss = 0.0;
  double  final_loss   = 0.0;
};

/// FedAvg initialisation followed by distillation towards the uniformly
/// averaged teacher logits of `locals` on the public pool.
FedDfResult feddf_round(nn::Mlp const &global, std::span<WeightedModel const> locals,
                        data::UnlabeledDataset const &public_set, FlRoundConfig const &cfg,
                        std::uint64_t seed);

struct RoundOutcome
{
  nn::Mlp     model;
  bool        starved      = false;  // no owners recruited, model unchanged
  std::size_t owners_used  = 0;
  std::size_t samples_used = 0;
};

/// Broadcast `model`, train locally on every owner, aggregate with cfg.method.
/// Owner samples whose label is not active in the model are ignored.
/// `public_set` is required only for FedDF.
RoundOutcome run_fl_round(nn::Mlp const &model, std::span<market::DataOwner const> owners,
                          FlRoundConfig const &cfg, std::uint64_t seed,
                          data::UnlabeledDataset const *public_set = nullptr);

/// Fraction of samples whose argmax over `restrict_to` equals the label
/// (ties resolve to the lowest class id).
double evaluate(nn::Mlp const &model, data::LabeledDataset const &shard,
                LabelSet const &restrict_to);

}  // namespace fedcdc::fed
