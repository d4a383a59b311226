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

#include "fedcdc/types.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>

#include "fedcdc/errors.hpp"

namespace fedcdc {

LabelMask make_mask(LabelSet const &labels, std::size_t num_classes)
{
  LabelMask mask(num_classes, false);
  for (ClassId c : labels)
  {
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes)
    {
      throw ShapeError("label " + std::to_string(c) + " outside universe of " +
                       std::to_string(num_classes) + " classes");
    }
    mask[static_cast<std::size_t>(c)] = true;
  }
  return mask;
}

LabelSet mask_to_set(LabelMask const &mask)
{
  LabelSet out;
  for (std::size_t i = 0; i < mask.size(); ++i)
  {
    if (mask[i])
    {
      out.insert(static_cast<ClassId>(i));
    }
  }
  return out;
}

LabelMask mask_and(LabelMask const &a, LabelMask const &b)
{
  if (a.size() != b.size())
  {
    throw ShapeError("label masks over different universes");
  }
  LabelMask out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    out[i] = a[i] && b[i];
  }
  return out;
}

std::size_t mask_count(LabelMask const &mask)
{
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

LabelSet set_intersection(LabelSet const &a, LabelSet const &b)
{
  LabelSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(out, out.end()));
  return out;
}

LabelSet set_union(LabelSet const &a, LabelSet const &b)
{
  LabelSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

bool is_subset(LabelSet const &sub, LabelSet const &super)
{
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

std::string to_string(LabelSet const &labels)
{
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (ClassId c : labels)
  {
    if (!first)
    {
      os << ',';
    }
    os << c;
    first = false;
  }
  os << '}';
  return os.str();
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords)
{
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t c : coords)
  {
    h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  }
  return h;
}

}  // namespace fedcdc
