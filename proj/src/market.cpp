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

#include "fedcdc/market.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "fedcdc/errors.hpp"

namespace fedcdc::market {

void DataOwner::validate() const
{
  if (!shard || shard->empty())
  {
    throw ConfigError("data owner " + std::to_string(id) + " has an empty shard");
  }
  if (!is_subset(shard->label_set(), labels))
  {
    throw ConfigError("data owner " + std::to_string(id) +
                      " holds samples outside its declared label set");
  }
}

void DataConsumer::validate() const
{
  if (labels.empty())
  {
    throw ConfigError("data consumer " + std::to_string(id) + " has no target labels");
  }
  if (!validation.empty() && !is_subset(validation.label_set(), labels))
  {
    throw ConfigError("data consumer " + std::to_string(id) +
                      " validation shard has labels outside its task");
  }
  if (budget < 0.0)
  {
    throw ConfigError("data consumer " + std::to_string(id) + " has a negative budget");
  }
}

BidMatrix::BidMatrix(std::size_t consumers, std::size_t owners)
  : rows_(consumers)
  , cols_(owners)
  , data_(consumers * owners, 0.0)
{}

BidMatrix::BidMatrix(std::initializer_list<std::initializer_list<double>> rows)
  : rows_(rows.size())
  , cols_(rows.size() == 0 ? 0 : rows.begin()->size())
{
  data_.assign(rows_ * cols_, 0.0);
  std::size_t i = 0;
  for (auto const &row : rows)
  {
    if (row.size() != cols_)
    {
      throw ShapeError("ragged bid matrix literal");
    }
    std::size_t o = 0;
    for (double v : row)
    {
      set(i, o++, v);
    }
    ++i;
  }
}

void BidMatrix::set(std::size_t consumer, std::size_t owner, double value)
{
  if (!(value >= 0.0) || !std::isfinite(value))
  {
    throw std::invalid_argument("bids must be finite and nonnegative, got " +
                                std::to_string(value));
  }
  data_.at(consumer * cols_ + owner) = value;
}

BiddingHistory::BiddingHistory(std::size_t span, std::size_t consumers, std::size_t owners)
  : consumers_(consumers)
  , owners_(owners)
  , slots_(span, BidMatrix(consumers, owners))
{
  if (span == 0)
  {
    throw ConfigError("bidding history span must be at least 1");
  }
}

void BiddingHistory::record(std::size_t round, BidMatrix const &bids)
{
  if (bids.consumers() != consumers_ || bids.owners() != owners_)
  {
    throw ShapeError("bid matrix is " + std::to_string(bids.consumers()) + "x" +
                     std::to_string(bids.owners()) + ", history expects " +
                     std::to_string(consumers_) + "x" + std::to_string(owners_));
  }
  slots_[round % slots_.size()] = bids;
}

BidMatrix BiddingHistory::max_bids() const
{
  BidMatrix out(consumers_, owners_);
  for (auto const &s : slots_)
  {
    for (std::size_t i = 0; i < consumers_; ++i)
    {
      for (std::size_t o = 0; o < owners_; ++o)
      {
        out.set(i, o, std::max(out(i, o), s(i, o)));
      }
    }
  }
  return out;
}

std::vector<OwnerId> Matching::owners_of(ConsumerId consumer) const
{
  std::vector<OwnerId> out;
  for (auto const &[owner, c] : assignment)
  {
    if (c == consumer)
    {
      out.push_back(owner);
    }
  }
  return out;
}

Matching match_random_partition(std::span<OwnerId const> contested,
                                std::span<ConsumerId const> consumers, std::size_t per_dc,
                                std::map<OwnerId, ConsumerId> const &uncontested,
                                std::uint64_t seed)
{
  if (contested.size() != per_dc * consumers.size())
  {
    throw ConfigError("random partition needs exactly " + std::to_string(per_dc) + " x " +
                      std::to_string(consumers.size()) + " contested owners, got " +
                      std::to_string(contested.size()));
  }
  Matching out;
  out.assignment = uncontested;

  std::vector<OwnerId> pool(contested.begin(), contested.end());
  std::sort(pool.begin(), pool.end());
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t i = 0; i < pool.size(); ++i)
  {
    auto const [it, inserted] = out.assignment.emplace(pool[i], consumers[i / per_dc]);
    if (!inserted)
    {
      throw ConfigError("owner " + std::to_string(pool[i]) +
                        " is both contested and uncontested");
    }
  }
  return out;
}

Matching match_first_price(BidMatrix const &bids, std::vector<double> &budgets)
{
  if (budgets.size() != bids.consumers())
  {
    throw ShapeError("one budget per bidding consumer is required");
  }
  Matching out;
  for (std::size_t o = 0; o < bids.owners(); ++o)
  {
    std::optional<std::size_t> winner;
    for (std::size_t i = 0; i < bids.consumers(); ++i)
    {
      double const b = bids(i, o);
      if (b > 0.0 && budgets[i] >= b && (!winner || b > bids(*winner, o)))
      {
        winner = i;
      }
    }
    if (winner)
    {
      budgets[*winner] -= bids(*winner, o);
      out.assignment.emplace(o, *winner);
    }
  }
  return out;
}

}  // namespace fedcdc::market
