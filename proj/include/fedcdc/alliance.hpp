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
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedcdc/market.hpp"
#include "fedcdc/maxclique.hpp"
#include "fedcdc/types.hpp"

namespace fedcdc::alliance {

using Uid     = std::uint64_t;
using UidPair = std::pair<Uid, Uid>;  // always (smaller, larger)

UidPair make_pair(Uid a, Uid b);

struct Thresholds
{
  std::size_t min_labels = 2;  // n_{L,min}
  std::size_t min_owners = 2;  // n_{delta,min}
};

/// Fresh, never-repeating candidate ids across the lifetime of a market.
class UidSource
{
public:
  Uid next() noexcept
  {
    return next_++;
  }

private:
  Uid next_ = 1;
};

struct AllianceCandidate
{
  Uid                     uid = 0;
  std::vector<ConsumerId> participants;   // ascending, size >= 2
  LabelSet                shared_labels;  // intersection of participant tasks
  std::vector<OwnerId>    contested;      // owners every participant bid on

  bool same_coalition(AllianceCandidate const &other) const
  {
    return participants == other.participants && shared_labels == other.shared_labels;
  }
};

/// g = |participants| * |shared labels| * |contested owners|.
mwc::Weight candidate_value(AllianceCandidate const &c);

/// One candidate per consumer subset of size >= 2 whose shared labels and
/// commonly bid-on owners meet the thresholds. Subsets are visited by size,
/// then lexicographically. Throws ConfigError for more than 20 consumers.
std::vector<AllianceCandidate> enumerate_candidates(std::span<LabelSet const> consumer_labels,
                                                    market::BidMatrix const &max_bids,
                                                    Thresholds const &thresholds, UidSource &uids);

std::vector<AllianceCandidate> enumerate_candidates(std::span<LabelSet const> consumer_labels,
                                                    market::BiddingHistory const &history,
                                                    Thresholds const &thresholds, UidSource &uids);

/// Rejects synthetic consumers, which may never join an alliance.
std::vector<AllianceCandidate> enumerate_candidates(std::span<market::DataConsumer const> consumers,
                                                    market::BiddingHistory const &history,
                                                    Thresholds const &thresholds, UidSource &uids);

inline constexpr std::size_t kMaxEnumeratedConsumers = 20;

// What a consumer is told about an offer: no participant identities.
struct AnonymizedOffer
{
  Uid                  uid               = 0;
  std::size_t          participant_count = 0;
  LabelSet             labels;
  std::vector<OwnerId> contested;
};

struct DCResponse
{
  std::set<Uid>     accepted;
  std::set<UidPair> rejected_pairs;
};

class AcceptancePolicy
{
public:
  virtual ~AcceptancePolicy() = default;
  virtual DCResponse respond(ConsumerId consumer, std::span<AnonymizedOffer const> offers) = 0;
};

/// Label sets overlap in at least half of the smaller one.
bool near_duplicate(LabelSet const &a, LabelSet const &b);

/// Accepts every offer except near-duplicates of an alliance the consumer is
/// already in, and flags every near-duplicate pair of offers as conflicting.
class DefaultAcceptancePolicy : public AcceptancePolicy
{
public:
  void add_membership(ConsumerId consumer, LabelSet labels);

  DCResponse respond(ConsumerId consumer, std::span<AnonymizedOffer const> offers) override;

private:
  std::map<ConsumerId, std::vector<LabelSet>> memberships_;
};

struct OfferOutcome
{
  std::vector<AllianceCandidate> accepted;
  std::set<UidPair>              conflicts;
  std::vector<std::string>       rejected_responses;  // one note per malformed DC response
};

/// Sends each consumer the anonymised offers it participates in and keeps a
/// candidate only if all its participants accept. A response naming an uid
/// that was not offered is discarded as a whole and treated as declining.
OfferOutcome offer_and_collect(std::span<AllianceCandidate const> candidates,
                               std::size_t num_consumers, AcceptancePolicy &policy);

/// Maximum-value conflict-free subset via maximum-weight clique.
std::vector<AllianceCandidate> select_alliances(std::span<AllianceCandidate const> accepted,
                                                std::set<UidPair> const &conflicts);

struct Alliance
{
  AllianceCandidate                candidate;
  mwc::Weight                      value = 0;
  market::DataConsumer             consumer;  // synthetic
  std::map<ConsumerId, double>     payments;

  double budget() const;  // sum of payments
};

struct ModelSpec
{
  std::size_t              input_dim   = 0;
  std::vector<std::size_t> hidden      = {64, 32};
  std::size_t              num_classes = 0;

  std::vector<std::size_t> dims() const;
};

struct InstantiateOutcome
{
  std::vector<Alliance>    alliances;
  std::vector<std::string> skipped;
};

/// Creates one synthetic consumer per selected candidate. Its model covers the
/// union of participant tasks; its validation/test shards are the participants'
/// samples restricted to the shared labels. Each participant pays
/// `budget_share`; alliances with an under-funded participant are skipped.
/// `consumers` is indexed by consumer id.
InstantiateOutcome instantiate(std::span<AllianceCandidate const> selected,
                               std::span<market::DataConsumer const> consumers,
                               double budget_share, ModelSpec const &model,
                               ConsumerId first_synthetic_id, std::uint64_t seed);

/// b'(C_i) = b(C_i) + sum of the other participants' payments into the alliance.
double effective_budget(double own_budget, Alliance const &a, ConsumerId consumer);

struct CreationReport
{
  std::vector<AllianceCandidate> candidates;
  std::size_t                    suppressed_duplicates = 0;
  OfferOutcome                   offers;
  std::vector<AllianceCandidate> selected;
  InstantiateOutcome             created;
};

/// Full alliance-creation pass. Candidates duplicating an existing alliance
/// (same participants and labels) are dropped before being offered.
CreationReport create_alliances(std::span<market::DataConsumer const> consumers,
                                market::BiddingHistory const &history,
                                Thresholds const &thresholds, AcceptancePolicy &policy,
                                std::span<Alliance const> existing, UidSource &uids,
                                double budget_share, ModelSpec const &model,
                                ConsumerId first_synthetic_id, std::uint64_t seed);

}  // namespace fedcdc::alliance
