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
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace fedcdc::mwc {

using Weight = std::uint64_t;

/// Undirected graph with positive integer node weights.
class WeightedGraph
{
public:
  WeightedGraph() = default;
  explicit WeightedGraph(std::vector<Weight> weights);

  std::size_t size() const noexcept
  {
    return weights_.size();
  }
  Weight weight(std::size_t v) const
  {
    return weights_.at(v);
  }
  std::vector<Weight> const &weights() const noexcept
  {
    return weights_;
  }
  bool adjacent(std::size_t u, std::size_t v) const
  {
    return adj_.at(u).at(v);
  }
  std::size_t edge_count() const;

  /// Adds the undirected edge {u, v}. Self-loops are rejected.
  void add_edge(std::size_t u, std::size_t v);

  /// Checks symmetry, absence of self-loops and weights >= 1.
  void validate() const;

private:
  std::vector<Weight>            weights_;
  std::vector<std::vector<bool>> adj_;
};

struct Clique
{
  std::vector<std::size_t> nodes;  // ascending
  Weight                   weight = 0;

  bool operator==(Clique const &) const = default;
};

/// True iff every pair of `nodes` is adjacent.
bool is_clique(WeightedGraph const &g, std::vector<std::size_t> const &nodes);

/// Exact maximum-weight clique by branch and bound with a greedy weighted
/// colouring bound. Among optimal cliques the lexicographically smallest
/// ascending node list is returned.
Clique solve(WeightedGraph const &g);

/// Exhaustive subset scan with the same tie rule. Throws for n > 25.
Clique brute_force(WeightedGraph const &g);

inline constexpr std::size_t kBruteForceLimit = 25;

/// DIMACS-like text: `c` comments, `p edge <n> <m>`, `n <id> <weight>`,
/// `e <u> <v>`, with 1-based node ids. Nodes without an `n` line weigh 1.
WeightedGraph read_dimacs(std::istream &in);
WeightedGraph read_dimacs(std::filesystem::path const &path);
void          write_dimacs(WeightedGraph const &g, std::ostream &out);

}  // namespace fedcdc::mwc
