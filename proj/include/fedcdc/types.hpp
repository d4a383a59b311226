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

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <set>
#include <string>
#include <vector>

namespace fedcdc {

using ClassId    = int;
using ConsumerId = std::size_t;
using OwnerId    = std::size_t;
using LabelSet   = std::set<ClassId>;

// Dense boolean mask over the global K-way label universe.
using LabelMask = std::vector<bool>;

LabelMask make_mask(LabelSet const &labels, std::size_t num_classes);
LabelSet  mask_to_set(LabelMask const &mask);
LabelMask mask_and(LabelMask const &a, LabelMask const &b);
std::size_t mask_count(LabelMask const &mask);

LabelSet set_intersection(LabelSet const &a, LabelSet const &b);
LabelSet set_union(LabelSet const &a, LabelSet const &b);
bool     is_subset(LabelSet const &sub, LabelSet const &super);

std::string to_string(LabelSet const &labels);

// Derive an independent 64-bit seed from a base seed and a tuple of stream
// coordinates (splitmix64 chaining). Used so that per-consumer, per-round and
// per-owner random streams do not depend on execution order.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords);

}  // namespace fedcdc
