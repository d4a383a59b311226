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

#include "fedcdc/alliance.hpp"

#include <algorithm>
#include <bit>
#include <sstream>
#include <stdexcept>

#include "fedcdc/errors.hpp"

namespace fedcdc::alliance {

UidPair make_pair(Uid a, Uid b)
{
  return a < b ? UidPair{a, b} : UidPair{b, a};
}

mwc::Weight candidate_value(AllianceCandidate const &c)
{
  return static_cast<mwc::Weight>(c.participants.size()) *
         static_cast<mwc::Weight>(c.shared_labels.size()) *
         static_cast<mwc::Weight>(c.contested.size());
}

std::vector<AllianceCandidate> enumerate_candidates(std::span<LabelSet const> consumer_labels,
                                                    market::BidMatrix const &max_bids,
                                                    Thresholds const &thresholds, UidSource &uids)
{
  std::size_t const m = consumer_labels.size();
  if (m > kMaxEnumeratedConsumers)
  {
    throw ConfigError("alliance enumeration supports at most " +
                      std::to_string(kMaxEnumeratedConsumers) + " consumers, got " +
                      std::to_string(m));
  }
  if (max_bids.consumers() != m)
  {
    throw ShapeError("bid matrix rows do not match the consumer list");
  }

  std::vector<std::uint32_t> subsets;
  for (std::uint32_t mask = 1; mask < (1U << m); ++mask)
  {
    if (std::popcount(mask) >= 2)
    {
      subsets.push_back(mask);
    }
  }
  // Size first, then lexicographic on the member list.
  auto members = [m](std::uint32_t mask) {
    std::vector<ConsumerId> out;
    for (std::size_t i = 0; i < m; ++i)
    {
      if ((mask >> i) & 1U)
      {
        out.push_back(i);
      }
    }
    return out;
  };
  std::sort(subsets.begin(), subsets.end(), [&](std::uint32_t a, std::uint32_t b) {
    int const pa = std::popcount(a);
    int const pb = std::popcount(b);
    return pa != pb ? pa < pb : members(a) < members(b);
  });

  std::vector<AllianceCandidate> out;
  for (std::uint32_t mask : subsets)
  {
    auto     participants = members(mask);
    LabelSet shared       = consumer_labels[participants.front()];
    for (ConsumerId i : participants)
    {
      shared = set_intersection(shared, consumer_labels[i]);
    }
    if (shared.size() < thresholds.min_labels)
    {
      continue;
    }
    std::vector<OwnerId> contested;
    for (OwnerId o = 0; o < max_bids.owners(); ++o)
    {
      double product = 1.0;
      for (ConsumerId i : participants)
      {
        product *= max_bids(i, o);
      }
      if (product != 0.0)
      {
        contested.push_back(o);
      }
    }
    if (contested.size() < thresholds.min_owners)
    {
      continue;
    }
    out.push_back({uids.next(), std::move(participants), std::move(shared), std::move(contested)});
  }
  return out;
}

std::vector<AllianceCandidate> enumerate_candidates(std::span<LabelSet const> consumer_labels,
                                                    market::BiddingHistory const &history,
                                                    Thresholds const &thresholds, UidSource &uids)
{
  return enumerate_candidates(consumer_labels, history.max_bids(), thresholds, uids);
}

std::vector<AllianceCandidate> enumerate_candidates(std::span<market::DataConsumer const> consumers,
                                                    market::BiddingHistory const &history,
                                                    Thresholds const &thresholds, UidSource &uids)
{
  std::vector<LabelSet> labels;
  for (auto const &c : consumers)
  {
    if (c.is_synthetic)
    {
      throw std::invalid_argument("synthetic consumer " + std::to_string(c.id) +
                                  " cannot be an alliance candidate");
    }
    labels.push_back(c.labels);
  }
  return enumerate_candidates(labels, history, thresholds, uids);
}

bool near_duplicate(LabelSet const &a, LabelSet const &b)
{
  std::size_t const overlap = set_intersection(a, b).size();
  std::size_t const smaller = std::min(a.size(), b.size());
  return smaller > 0 && 2 * overlap >= smaller;
}

void DefaultAcceptancePolicy::add_membership(ConsumerId consumer, LabelSet labels)
{
  memberships_[consumer].push_back(std::move(labels));
}

DCResponse DefaultAcceptancePolicy::respond(ConsumerId consumer,
                                            std::span<AnonymizedOffer const> offers)
{
  DCResponse  response;
  auto const  it      = memberships_.find(consumer);
  auto const *current = it == memberships_.end() ? nullptr : &it->second;
  for (auto const &offer : offers)
  {
    bool duplicate = false;
    if (current != nullptr)
    {
      duplicate = std::any_of(current->begin(), current->end(),
                              [&](LabelSet const &l) { return near_duplicate(l, offer.labels); });
    }
    if (!duplicate)
    {
      response.accepted.insert(offer.uid);
    }
  }
  for (std::size_t i = 0; i < offers.size(); ++i)
  {
    for (std::size_t j = i + 1; j < offers.size(); ++j)
    {
      if (near_duplicate(offers[i].labels, offers[j].labels))
      {
        response.rejected_pairs.insert(make_pair(offers[i].uid, offers[j].uid));
      }
    }
  }
  return response;
}

OfferOutcome offer_and_collect(std::span<AllianceCandidate const> candidates,
                               std::size_t num_consumers, AcceptancePolicy &policy)
{
  std::set<Uid> alive;
  for (auto const &c : candidates)
  {
    alive.insert(c.uid);
  }

  OfferOutcome out;
  for (ConsumerId i = 0; i < num_consumers; ++i)
  {
    std::vector<AnonymizedOffer> offers;
    std::set<Uid>                offered;
    for (auto const &c : candidates)
    {
      if (std::binary_search(c.participants.begin(), c.participants.end(), i))
      {
        offers.push_back({c.uid, c.participants.size(), c.shared_labels, c.contested});
        offered.insert(c.uid);
      }
    }
    if (offers.empty())
    {
      continue;
    }

    DCResponse response = policy.respond(i, offers);
    bool       valid    = std::includes(offered.begin(), offered.end(),
                                        response.accepted.begin(), response.accepted.end());
    for (auto const &[a, b] : response.rejected_pairs)
    {
      valid = valid && offered.contains(a) && offered.contains(b);
    }
    if (!valid)
    {
      out.rejected_responses.push_back("consumer " + std::to_string(i) +
                                       " answered with an unknown alliance uid; response discarded");
      response = {};
    }

    for (Uid u : offered)
    {
      if (!response.accepted.contains(u))
      {
        alive.erase(u);
      }
    }
    for (auto const &[a, b] : response.rejected_pairs)
    {
      out.conflicts.insert(make_pair(a, b));
    }
  }

  for (auto const &c : candidates)
  {
    if (alive.contains(c.uid))
    {
      out.accepted.push_back(c);
    }
  }
  return out;
}

std::vector<AllianceCandidate> select_alliances(std::span<AllianceCandidate const> accepted,
                                                std::set<UidPair> const &conflicts)
{
  std::vector<mwc::Weight> weights;
  for (auto const &c : accepted)
  {
    weights.push_back(candidate_value(c));
  }
  mwc::WeightedGraph g(std::move(weights));
  for (std::size_t u = 0; u < accepted.size(); ++u)
  {
    for (std::size_t v = u + 1; v < accepted.size(); ++v)
    {
      if (!conflicts.contains(make_pair(accepted[u].uid, accepted[v].uid)))
      {
        g.add_edge(u, v);
      }
    }
  }
  auto const                     best = mwc::solve(g);
  std::vector<AllianceCandidate> out;
  for (std::size_t v : best.nodes)
  {
    out.push_back(accepted[v]);
  }
  return out;
}

double Alliance::budget() const
{
  double total = 0.0;
  for (auto const &[id, p] : payments)
  {
    total += p;
  }
  return total;
}

std::vector<std::size_t> ModelSpec::dims() const
{
  std::vector<std::size_t> d{input_dim};
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(num_classes);
  return d;
}

InstantiateOutcome instantiate(std::span<AllianceCandidate const> selected,
                               std::span<market::DataConsumer const> consumers,
                               double budget_share, ModelSpec const &model,
                               ConsumerId first_synthetic_id, std::uint64_t seed)
{
  InstantiateOutcome out;
  ConsumerId         next_id = first_synthetic_id;
  for (auto const &c : selected)
  {
    auto underfunded = std::find_if(c.participants.begin(), c.participants.end(),
                                    [&](ConsumerId i) { return consumers[i].budget < budget_share; });
    if (underfunded != c.participants.end())
    {
      std::ostringstream note;
      note << "alliance " << c.uid << " skipped: consumer " << *underfunded << " holds budget "
           << consumers[*underfunded].budget << " < share " << budget_share;
      out.skipped.push_back(note.str());
      continue;
    }

    Alliance a;
    a.candidate = c;
    a.value     = candidate_value(c);

    LabelSet                          task;
    std::vector<data::LabeledDataset> val_parts;
    std::vector<data::LabeledDataset> test_parts;
    for (ConsumerId i : c.participants)
    {
      auto const &p = consumers[i];
      if (p.is_synthetic)
      {
        throw std::invalid_argument("an alliance consumer cannot join another alliance");
      }
      task = set_union(task, p.labels);
      val_parts.push_back(p.validation.filter(c.shared_labels));
      test_parts.push_back(p.test.filter(c.shared_labels));
      a.payments[i] = budget_share;
    }

    auto &sc        = a.consumer;
    sc.id           = next_id++;
    sc.labels       = task;
    sc.is_synthetic = true;
    sc.budget       = a.budget();
    sc.model        = nn::Mlp(model.dims(), task, derive_seed(seed, {c.uid}));
    sc.expert       = sc.model;
    sc.validation   = data::LabeledDataset::concat(val_parts);
    sc.test         = data::LabeledDataset::concat(test_parts);
    out.alliances.push_back(std::move(a));
  }
  return out;
}

double effective_budget(double own_budget, Alliance const &a, ConsumerId consumer)
{
  double others = 0.0;
  for (auto const &[id, p] : a.payments)
  {
    if (id != consumer)
    {
      others += p;
    }
  }
  return own_budget + others;
}

CreationReport create_alliances(std::span<market::DataConsumer const> consumers,
                                market::BiddingHistory const &history,
                                Thresholds const &thresholds, AcceptancePolicy &policy,
                                std::span<Alliance const> existing, UidSource &uids,
                                double budget_share, ModelSpec const &model,
                                ConsumerId first_synthetic_id, std::uint64_t seed)
{
  CreationReport report;
  auto           all = enumerate_candidates(consumers, history, thresholds, uids);
  for (auto &c : all)
  {
    bool const dup = std::any_of(existing.begin(), existing.end(), [&](Alliance const &a) {
      return a.candidate.same_coalition(c);
    });
    if (dup)
    {
      ++report.suppressed_duplicates;
    }
    else
    {
      report.candidates.push_back(std::move(c));
    }
  }
  report.offers   = offer_and_collect(report.candidates, consumers.size(), policy);
  report.selected = select_alliances(report.offers.accepted, report.offers.conflicts);
  report.created  = instantiate(report.selected, consumers, budget_share, model,
                                first_synthetic_id, seed);
  return report;
}

}  // namespace fedcdc::alliance
