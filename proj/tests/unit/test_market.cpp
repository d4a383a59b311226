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

#include <limits>
#include <memory>
#include <set>

#include "fedcdc/dataset.hpp"
#include "fedcdc/errors.hpp"
#include "fedcdc/market.hpp"

using namespace fedcdc;
using namespace fedcdc::market;

TEST(BidMatrix, LiteralAndAccess)
{
  BidMatrix const b{{1.0, 0.0}, {0.5, 2.0}};
  EXPECT_EQ(b.consumers(), 2u);
  EXPECT_EQ(b.owners(), 2u);
  EXPECT_EQ(b(1, 1), 2.0);
  EXPECT_THROW((BidMatrix{{1.0}, {1.0, 2.0}}), ShapeError);
}

TEST(BidMatrix, RejectsInvalidBids)
{
  BidMatrix b(1, 2);
  EXPECT_THROW(b.set(0, 0, -1.0), std::invalid_argument);
  EXPECT_THROW(b.set(0, 0, std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
  EXPECT_THROW(b.set(0, 1, std::numeric_limits<double>::infinity()), std::invalid_argument);
  EXPECT_THROW((BidMatrix{{-1.0}}), std::invalid_argument);
}

TEST(BiddingHistory, RingArithmetic)
{
  BiddingHistory h(3, 1, 1);
  for (std::size_t r = 0; r < 4; ++r)
  {
    BidMatrix b(1, 1);
    b.set(0, 0, static_cast<double>(r + 10));
    h.record(r, b);
  }
  EXPECT_EQ(h.slot(0)(0, 0), 13.0);
  EXPECT_EQ(h.slot(1)(0, 0), 11.0);
  EXPECT_EQ(h.slot(2)(0, 0), 12.0);
}

TEST(BiddingHistory, ZeroRecordKeepsZeroHistory)
{
  BiddingHistory h(2, 2, 3);
  h.record(0, BidMatrix(2, 3));
  EXPECT_EQ(h.max_bids(), BidMatrix(2, 3));
}

TEST(BiddingHistory, ShapeMismatch)
{
  BiddingHistory h(2, 2, 3);
  EXPECT_THROW(h.record(0, BidMatrix(3, 2)), ShapeError);
  EXPECT_THROW(BiddingHistory(0, 1, 1), ConfigError);
}

TEST(BiddingHistory, MaxBids)
{
  BiddingHistory h(2, 1, 2);
  h.record(0, BidMatrix{{1.0, 0.0}});
  h.record(1, BidMatrix{{0.0, 2.0}});
  EXPECT_EQ(h.max_bids(), (BidMatrix{{1.0, 2.0}}));

  BiddingHistory single(1, 1, 2);
  single.record(5, BidMatrix{{0.3, 0.7}});
  EXPECT_EQ(single.max_bids(), (BidMatrix{{0.3, 0.7}}));
}

TEST(BiddingHistory, MaxIsAttainedUpperBound)
{
  BiddingHistory h(4, 3, 5);
  std::uint64_t  state = 1;
  for (std::size_t r = 0; r < 9; ++r)
  {
    BidMatrix b(3, 5);
    for (std::size_t i = 0; i < 3; ++i)
    {
      for (std::size_t o = 0; o < 5; ++o)
      {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        b.set(i, o, static_cast<double>(state >> 60));
      }
    }
    h.record(r, b);
  }
  auto const m = h.max_bids();
  for (std::size_t i = 0; i < 3; ++i)
  {
    for (std::size_t o = 0; o < 5; ++o)
    {
      bool attained = false;
      for (std::size_t s = 0; s < h.span(); ++s)
      {
        EXPECT_GE(m(i, o), h.slot(s)(i, o));
        attained = attained || m(i, o) == h.slot(s)(i, o);
      }
      EXPECT_TRUE(attained);
    }
  }
}

TEST(RandomPartition, EachConsumerGetsPerDc)
{
  std::vector<OwnerId> const    contested{0, 1, 2, 3, 4, 5};
  std::vector<ConsumerId> const consumers{0, 1, 2};
  std::map<OwnerId, ConsumerId> uncontested{{6, 0}, {7, 1}};
  auto const m = match_random_partition(contested, consumers, 2, uncontested, 7);
  EXPECT_EQ(m.assignment.size(), 8u);
  for (ConsumerId c : consumers)
  {
    std::size_t n = 0;
    for (OwnerId o : m.owners_of(c))
    {
      n += o < 6 ? 1 : 0;
    }
    EXPECT_EQ(n, 2u);
  }
  EXPECT_EQ(m.assignment.at(6), 0u);
  EXPECT_EQ(m.assignment.at(7), 1u);
}

TEST(RandomPartition, NoContestedOwners)
{
  std::map<OwnerId, ConsumerId> uncontested{{0, 2}, {3, 1}};
  auto const m = match_random_partition({}, std::vector<ConsumerId>{}, 0, uncontested, 1);
  EXPECT_EQ(m.assignment, uncontested);
}

TEST(RandomPartition, SeedDeterminismAndVariety)
{
  std::vector<OwnerId> const    contested{0, 1, 2, 3, 4, 5};
  std::vector<ConsumerId> const consumers{0, 1, 2};
  auto const a = match_random_partition(contested, consumers, 2, {}, 3);
  auto const b = match_random_partition(contested, consumers, 2, {}, 3);
  EXPECT_EQ(a, b);
  std::set<std::map<OwnerId, ConsumerId>> seen;
  for (std::uint64_t s = 0; s < 20; ++s)
  {
    seen.insert(match_random_partition(contested, consumers, 2, {}, s).assignment);
  }
  EXPECT_GT(seen.size(), 1u);
}

TEST(RandomPartition, RejectsUnevenPool)
{
  std::vector<OwnerId> const    contested{0, 1, 2, 3, 4};
  std::vector<ConsumerId> const consumers{0, 1, 2};
  EXPECT_THROW(match_random_partition(contested, consumers, 2, {}, 1), ConfigError);
}

TEST(FirstPrice, HighestBidWins)
{
  std::vector<double> budgets{10.0, 10.0};
  auto const          m = match_first_price(BidMatrix{{3.0}, {5.0}}, budgets);
  EXPECT_EQ(m.assignment.at(0), 1u);
  EXPECT_EQ(budgets, (std::vector<double>{10.0, 5.0}));
}

TEST(FirstPrice, TieGoesToLowestIndex)
{
  std::vector<double> budgets{10.0, 10.0};
  auto const          m = match_first_price(BidMatrix{{4.0}, {4.0}}, budgets);
  EXPECT_EQ(m.assignment.at(0), 0u);
}

TEST(FirstPrice, BudgetGatesBids)
{
  std::vector<double> budgets{3.0, 4.0};
  auto const          m = match_first_price(BidMatrix{{3.0}, {5.0}}, budgets);
  EXPECT_EQ(m.assignment.at(0), 0u);
  EXPECT_EQ(budgets[0], 0.0);
}

TEST(FirstPrice, UnbidOwnersStayUnmatchedAndBudgetsDrain)
{
  std::vector<double> budgets{5.0, 5.0};
  BidMatrix const     bids{{3.0, 3.0, 0.0}, {1.0, 1.0, 0.0}};
  auto const          m = match_first_price(bids, budgets);
  EXPECT_EQ(m.assignment.at(0), 0u);
  EXPECT_EQ(m.assignment.at(1), 1u);  // consumer 0 can no longer afford 3
  EXPECT_FALSE(m.assignment.contains(2));
  EXPECT_THROW(match_first_price(bids, budgets = {1.0}), ShapeError);
}

TEST(Participants, Validation)
{
  DataOwner o;
  o.id     = 0;
  o.labels = {0};
  o.shard  = std::make_shared<data::LabeledDataset const>(data::gen_blobs(2, 2, 3, 1.0, 1));
  EXPECT_THROW(o.validate(), ConfigError);
  o.labels = {0, 1};
  EXPECT_NO_THROW(o.validate());
}
