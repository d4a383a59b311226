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

#include <memory>
#include <numeric>

#include "fedcdc/dataset.hpp"
#include "fedcdc/errors.hpp"
#include "fedcdc/fed_algos.hpp"

using namespace fedcdc;
using namespace fedcdc::fed;

namespace {

std::vector<std::size_t> const kDims{4, 8, 4};
LabelSet const                 kAll{0, 1, 2, 3};

nn::Mlp constant_model(double value)
{
  auto m = nn::Mlp::zeros(kDims, kAll);
  m.params().setConstant(value);
  return m;
}

market::DataOwner owner(OwnerId id, data::LabeledDataset shard)
{
  market::DataOwner o;
  o.id     = id;
  o.labels = shard.label_set();
  o.shard  = std::make_shared<data::LabeledDataset const>(std::move(shard));
  return o;
}

}  // namespace

TEST(FedAvg, EqualSizesGiveMean)
{
  nn::Mlp const a(kDims, kAll, 1);
  nn::Mlp const b(kDims, kAll, 2);
  std::vector<WeightedModel> locals{{&a, 500}, {&b, 500}};
  auto const                 agg = fedavg_aggregate(locals);
  EXPECT_LE((agg.params() - 0.5 * (a.params() + b.params())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FedAvg, ShardWeightedBlend)
{
  nn::Mlp const a(kDims, kAll, 3);
  nn::Mlp const b(kDims, kAll, 4);
  std::vector<WeightedModel> locals{{&a, 1000}, {&b, 3000}};
  auto const                 agg = fedavg_aggregate(locals);
  EXPECT_LE((agg.params() - (0.25 * a.params() + 0.75 * b.params())).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(FedAvg, SingleModelUnchanged)
{
  nn::Mlp const              a(kDims, kAll, 5);
  std::vector<WeightedModel> locals{{&a, 17}};
  EXPECT_EQ(fedavg_aggregate(locals).params(), a.params());
}

TEST(FedAvg, IdenticalModelsAreFixedPoint)
{
  nn::Mlp const              a(kDims, kAll, 6);
  std::vector<WeightedModel> locals{{&a, 3}, {&a, 11}, {&a, 1}};
  EXPECT_LE((fedavg_aggregate(locals).params() - a.params()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FedAvg, WeightsMatchRationalShares)
{
  // Model k holds the constant k+1, so the aggregate is sum (n_k/N)(k+1),
  // which equals an exact integer ratio.
  std::vector<std::size_t> const sizes{1, 2, 4, 9};
  std::vector<nn::Mlp>           models;
  for (std::size_t k = 0; k < sizes.size(); ++k)
  {
    models.push_back(constant_model(static_cast<double>(k + 1)));
  }
  std::vector<WeightedModel> locals;
  std::size_t                numer = 0;
  std::size_t                total = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k)
  {
    locals.push_back({&models[k], sizes[k]});
    numer += sizes[k] * (k + 1);
    total += sizes[k];
  }
  double const expected = static_cast<double>(numer) / static_cast<double>(total);
  auto const   agg      = fedavg_aggregate(locals);
  for (Eigen::Index i = 0; i < agg.params().size(); ++i)
  {
    EXPECT_NEAR(agg.params()[i], expected, 1e-14);
  }
}

TEST(FedAvg, RejectsMismatchedModels)
{
  nn::Mlp const              a(kDims, kAll, 1);
  nn::Mlp const              b({4, 6, 4}, kAll, 1);
  nn::Mlp const              c(kDims, {0, 1}, 1);
  std::vector<WeightedModel> ab{{&a, 1}, {&b, 1}};
  std::vector<WeightedModel> ac{{&a, 1}, {&c, 1}};
  EXPECT_THROW(fedavg_aggregate(ab), ShapeError);
  EXPECT_THROW(fedavg_aggregate(ac), ShapeError);
  EXPECT_THROW(fedavg_aggregate(std::vector<WeightedModel>{}), std::invalid_argument);
}

TEST(RunFlRound, SingleOwnerEqualsLocalTraining)
{
  auto const              data = data::gen_blobs(4, 4, 20, 1.0, 1);
  nn::Mlp const           init(kDims, kAll, 9);
  FlRoundConfig           cfg;
  cfg.local_epochs = 2;
  std::vector<market::DataOwner> owners{owner(3, data)};
  auto const out = run_fl_round(init, owners, cfg, 42);
  auto const ref = local_train(init, data, 2, cfg.batch_size, cfg.lr, derive_seed(42, {3}));
  EXPECT_EQ(out.model.params(), ref.params());
  EXPECT_FALSE(out.starved);
  EXPECT_EQ(out.owners_used, 1u);
  EXPECT_EQ(out.samples_used, 80u);
}

TEST(RunFlRound, NoOwnersMeansStarved)
{
  nn::Mlp const init(kDims, kAll, 9);
  auto const    out = run_fl_round(init, {}, FlRoundConfig{}, 1);
  EXPECT_TRUE(out.starved);
  EXPECT_EQ(out.model.params(), init.params());
}

TEST(RunFlRound, IgnoresLabelsOutsideTask)
{
  auto const    data = data::gen_blobs(4, 4, 10, 1.0, 2);
  nn::Mlp const init(kDims, {0, 1}, 9);
  std::vector<market::DataOwner> owners{owner(0, data)};
  FlRoundConfig                  cfg;
  cfg.local_epochs = 1;
  auto const out   = run_fl_round(init, owners, cfg, 5);
  EXPECT_EQ(out.samples_used, 20u);
}

TEST(RunFlRound, Reproducible)
{
  auto const    data = data::gen_blobs(4, 4, 30, 1.0, 3);
  nn::Mlp const init(kDims, kAll, 1);
  std::vector<market::DataOwner> owners{owner(0, data.filter({0, 1})), owner(1, data.filter({2, 3}))};
  FlRoundConfig                  cfg;
  cfg.local_epochs = 1;
  cfg.threads      = 2;
  auto const a     = run_fl_round(init, owners, cfg, 11);
  cfg.threads      = 1;
  auto const b     = run_fl_round(init, owners, cfg, 11);
  EXPECT_EQ(a.model.params(), b.model.params());
}

TEST(RunFlRound, HomogeneousOwnersMatchPooledTraining)
{
  auto const data  = data::gen_blobs(4, 8, 600, 1.2, 8);
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  for (std::size_t i = 0; i < data.size(); ++i)
  {
    (i % 600 < 450 ? train_rows : val_rows).push_back(i);
  }
  auto const train = data.subset(train_rows);
  auto const val   = data.subset(val_rows);

  // Interleave classes so every owner receives a homogeneous slice.
  std::vector<market::DataOwner> owners;
  for (std::size_t k = 0; k < 6; ++k)
  {
    std::vector<std::size_t> rows;
    for (std::size_t i = k; i < train.size(); i += 6)
    {
      rows.push_back(i);
    }
    owners.push_back(owner(k, train.subset(rows)));
  }
  std::vector<market::DataOwner> pooled{owner(0, train)};

  FlRoundConfig cfg;
  cfg.local_epochs = 1;
  nn::Mlp fed_model({8, 16, 4}, kAll, 4);
  nn::Mlp central = fed_model;
  // Averaging slows progress per round, so run both to convergence.
  for (std::uint64_t r = 0; r < 80; ++r)
  {
    fed_model = run_fl_round(fed_model, owners, cfg, r).model;
    central   = run_fl_round(central, pooled, cfg, r).model;
  }
  EXPECT_NEAR(evaluate(fed_model, val, kAll), evaluate(central, val, kAll), 0.05);
}

TEST(Evaluate, PerfectModelScoresOne)
{
  auto const data = data::gen_blobs(2, 2, 50, 0.2, 1);
  nn::Mlp    model({2, 8, 2}, {0, 1}, 3);
  model            = local_train(model, data, 30, 16, 1e-2, 1);
  EXPECT_DOUBLE_EQ(evaluate(model, data, {0, 1}), 1.0);
}

TEST(Evaluate, UniformModelNearChance)
{
  auto const data  = data::gen_blobs(4, 4, 500, 1.0, 2);
  auto const model = nn::Mlp::zeros(kDims, kAll);
  // All logits tie, so every prediction is class 0.
  EXPECT_DOUBLE_EQ(evaluate(model, data, kAll), 0.25);

  nn::Mlp random_model(kDims, kAll, 19);
  EXPECT_NEAR(evaluate(random_model, data, kAll), 0.25, 0.1);
}

TEST(Evaluate, RestrictionAndScaleInvariance)
{
  auto const data = data::gen_blobs(4, 4, 40, 1.0, 6);
  nn::Mlp    model(kDims, kAll, 7);
  auto const sub  = data.filter({1, 2});
  double const restricted = evaluate(model, sub, {1, 2});
  EXPECT_GE(restricted, evaluate(model, sub, kAll));

  // Scaling the last layer scales the logits; argmax cannot change.
  nn::Mlp scaled = model;
  auto const n_last = static_cast<Eigen::Index>(kDims[1] * kDims[2] + kDims[2]);
  scaled.params().tail(n_last) *= 3.5;
  EXPECT_EQ(evaluate(scaled, data, kAll), evaluate(model, data, kAll));
}

TEST(Evaluate, RejectsBadInputs)
{
  nn::Mlp const model(kDims, {0, 1}, 1);
  auto const    data = data::gen_blobs(2, 4, 5, 1.0, 1);
  EXPECT_THROW(evaluate(model, data.subset(std::vector<std::size_t>{}), {0, 1}),
               std::invalid_argument);
  EXPECT_THROW(evaluate(model, data, {0, 3}), std::invalid_argument);
}

TEST(FedDf, SelfDistillationStartsAtZero)
{
  auto const    data = data::gen_blobs(4, 4, 20, 1.0, 1);
  nn::Mlp const global(kDims, kAll, 2);
  std::vector<WeightedModel> locals{{&global, 10}};
  data::UnlabeledDataset     pub{data.features};
  FlRoundConfig              cfg;
  cfg.method = Aggregation::FedDF;
  auto const r = feddf_round(global, locals, pub, cfg, 3);
  EXPECT_NEAR(r.initial_loss, 0.0, 1e-12);
}

TEST(FedDf, DuplicateTeacherIsIdempotent)
{
  auto const    data = data::gen_blobs(4, 4, 20, 1.0, 1);
  nn::Mlp const global(kDims, kAll, 2);
  nn::Mlp const t(kDims, kAll, 5);
  data::UnlabeledDataset pub{data.features};
  FlRoundConfig          cfg;
  cfg.method = Aggregation::FedDF;
  std::vector<WeightedModel> one{{&t, 10}};
  std::vector<WeightedModel> two{{&t, 10}, {&t, 10}};
  auto const a = feddf_round(global, one, pub, cfg, 3);
  auto const b = feddf_round(global, two, pub, cfg, 3);
  EXPECT_LE((a.model.params() - b.model.params()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FedDf, DistillationReducesLoss)
{
  auto const    data = data::gen_blobs(4, 4, 100, 1.0, 1);
  nn::Mlp const global(kDims, kAll, 2);
  auto const    t1 = local_train(global, data.filter({0, 1, 2}), 3, 32, 1e-2, 1);
  auto const    t2 = local_train(global, data.filter({1, 2, 3}), 3, 32, 1e-2, 2);
  std::vector<WeightedModel> locals{{&t1, 300}, {&t2, 300}};
  data::UnlabeledDataset     pub{data.features};
  FlRoundConfig              cfg;
  cfg.method = Aggregation::FedDF;
  auto const r = feddf_round(global, locals, pub, cfg, 3);
  EXPECT_LT(r.final_loss, r.initial_loss);
}

TEST(FlRoundConfig, Validation)
{
  FlRoundConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg       = FlRoundConfig{};
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
