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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fedcdc/dataset.hpp"
#include "fedcdc/nn.hpp"
#include "fedcdc/types.hpp"

namespace fedcdc::market {

struct DataOwner
{
  OwnerId                                     id = 0;
  std::shared_ptr<data::LabeledDataset const> shard;
  LabelSet                                    labels;

  // Throws ConfigError if the shard is empty or holds labels outside `labels`.
  void validate() const;
};

struct DataConsumer
{
  ConsumerId           id = 0;
  LabelSet             labels;
  nn::Mlp              model;
  nn::Mlp              expert;   // trained on non-alliance owners when in an alliance
  data::LabeledDataset validation;
  data::LabeledDataset test;
  double               budget       = 0.0;
  bool                 is_synthetic = false;

  void validate() const;
};

/// Nonnegative m x n matrix of bids (rows = consumers, columns = owners).
class BidMatrix
{
public:
  BidMatrix() = default;
  BidMatrix(std::size_t consumers, std::size_t owners);
  BidMatrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t consumers() const noexcept
  {
    return rows_;
  }
  std::size_t owners() const noexcept
  {
    return cols_;
  }

  double operator()(std::size_t consumer, std::size_t owner) const
  {
    return data_[consumer * cols_ + owner];
  }

  // Rejects negative or non-finite values with std::invalid_argument.
  void set(std::size_t consumer, std::size_t owner, double value);

  bool operator==(BidMatrix const &) const = default;

private:
  std::size_t         rows_ = 0;
  std::size_t         cols_ = 0;
  std::vector<double> data_;
};

/// Ring buffer over the last k rounds of real-consumer bids.
class BiddingHistory
{
public:
  BiddingHistory(std::size_t span, std::size_t consumers, std::size_t owners);

  std::size_t span() const noexcept
  {
    return slots_.size();
  }
  std::size_t consumers() const noexcept
  {
    return consumers_;
  }
  std::size_t owners() const noexcept
  {
    return owners_;
  }
  BidMatrix const &slot(std::size_t i) const
  {
    return slots_.at(i);
  }

  /// Stores `bids` in slot (round mod k). Throws ShapeError on dimension mismatch.
  void record(std::size_t round, BidMatrix const &bids);

  /// Elementwise maximum over the stored rounds.
  BidMatrix max_bids() const;

private:
  std::size_t            consumers_;
  std::size_t            owners_;
  std::vector<BidMatrix> slots_;
};

/// Owner -> consumer assignment for one round. Consumer ids at or beyond the
/// number of real consumers denote synthetic (alliance) consumers.
struct Matching
{
  std::map<OwnerId, ConsumerId> assignment;

  std::vector<OwnerId> owners_of(ConsumerId consumer) const;
  bool                 operator==(Matching const &) const = default;
};

/// Randomly splits the contested owners so each consumer receives exactly
/// `per_dc` of them; uncontested owners go to their single interested consumer.
/// Throws ConfigError when |contested| != per_dc * |consumers|.
Matching match_random_partition(std::span<OwnerId const> contested,
                                std::span<ConsumerId const> consumers, std::size_t per_dc,
                                std::map<OwnerId, ConsumerId> const &uncontested,
                                std::uint64_t seed);

/// Per-owner first-price auction in owner order: the highest positive bidder
/// whose remaining budget covers its bid wins and pays the bid. Ties go to the
/// lowest consumer index. `budgets` is decremented in place.
Matching match_first_price(BidMatrix const &bids, std::vector<double> &budgets);

}  // namespace fedcdc::market
