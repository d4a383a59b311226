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

#include "fedcdc/maxclique.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fedcdc/errors.hpp"

namespace fedcdc::mwc {

WeightedGraph::WeightedGraph(std::vector<Weight> weights)
  : weights_(std::move(weights))
  , adj_(weights_.size(), std::vector<bool>(weights_.size(), false))
{
  validate();
}

void WeightedGraph::add_edge(std::size_t u, std::size_t v)
{
  if (u >= size() || v >= size())
  {
    throw std::out_of_range("edge endpoint outside graph");
  }
  if (u == v)
  {
    throw std::invalid_argument("self-loops are not allowed");
  }
  adj_[u][v] = true;
  adj_[v][u] = true;
}

std::size_t WeightedGraph::edge_count() const
{
  std::size_t m = 0;
  for (std::size_t u = 0; u < size(); ++u)
  {
    for (std::size_t v = u + 1; v < size(); ++v)
    {
      m += adj_[u][v] ? 1 : 0;
    }
  }
  return m;
}

void WeightedGraph::validate() const
{
  for (std::size_t u = 0; u < size(); ++u)
  {
    if (weights_[u] < 1)
    {
      throw std::invalid_argument("node " + std::to_string(u) + " has weight < 1");
    }
    if (adj_[u][u])
    {
      throw std::invalid_argument("node " + std::to_string(u) + " has a self-loop");
    }
    for (std::size_t v = u + 1; v < size(); ++v)
    {
      if (adj_[u][v] != adj_[v][u])
      {
        throw std::invalid_argument("adjacency is not symmetric");
      }
    }
  }
}

bool is_clique(WeightedGraph const &g, std::vector<std::size_t> const &nodes)
{
  for (std::size_t i = 0; i < nodes.size(); ++i)
  {
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
    {
      if (nodes[i] == nodes[j] || !g.adjacent(nodes[i], nodes[j]))
      {
        return false;
      }
    }
  }
  return true;
}

namespace {

// Heavier wins; equal weight resolves to the lexicographically smaller node list.
bool better(Weight w, std::vector<std::size_t> const &nodes, Clique const &best)
{
  if (w != best.weight)
  {
    return w > best.weight;
  }
  return std::lexicographical_compare(nodes.begin(), nodes.end(), best.nodes.begin(),
                                      best.nodes.end());
}

class Search
{
public:
  explicit Search(WeightedGraph const &g)
    : g_(g)
  {}

  Clique run()
  {
    std::vector<std::size_t> order(g_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return g_.weight(a) > g_.weight(b);
    });
    std::vector<std::size_t> current;
    expand(current, 0, order);
    return best_;
  }

private:
  // prefix_bound[i] bounds the heaviest clique inside cand[0..i]: greedy
  // colouring in candidate order, summing the heaviest vertex of each class.
  std::vector<Weight> prefix_bounds(std::vector<std::size_t> const &cand) const
  {
    std::vector<std::vector<std::size_t>> classes;
    std::vector<Weight>                   class_max;
    std::vector<Weight>                   bounds(cand.size());
    Weight                                total = 0;
    for (std::size_t i = 0; i < cand.size(); ++i)
    {
      std::size_t const v = cand[i];
      std::size_t       c = 0;
      for (; c < classes.size(); ++c)
      {
        bool clash = std::any_of(classes[c].begin(), classes[c].end(),
                                 [&](std::size_t u) { return g_.adjacent(u, v); });
        if (!clash)
        {
          break;
        }
      }
      if (c == classes.size())
      {
        classes.emplace_back();
        class_max.push_back(0);
      }
      classes[c].push_back(v);
      if (g_.weight(v) > class_max[c])
      {
        total += g_.weight(v) - class_max[c];
        class_max[c] = g_.weight(v);
      }
      bounds[i] = total;
    }
    return bounds;
  }

  void expand(std::vector<std::size_t> &current, Weight weight,
              std::vector<std::size_t> const &cand)
  {
    auto const bounds = prefix_bounds(cand);
    for (std::size_t i = cand.size(); i-- > 0;)
    {
      // Ties must stay explorable so the lexicographic tie rule sees every optimum.
      if (weight + bounds[i] < best_.weight)
      {
        return;
      }
      std::size_t const v = cand[i];
      current.push_back(v);
      Weight const w = weight + g_.weight(v);

      std::vector<std::size_t> sorted(current);
      std::sort(sorted.begin(), sorted.end());
      if (better(w, sorted, best_))
      {
        best_.weight = w;
        best_.nodes  = std::move(sorted);
      }

      std::vector<std::size_t> next;
      for (std::size_t j = 0; j < i; ++j)
      {
        if (g_.adjacent(v, cand[j]))
        {
          next.push_back(cand[j]);
        }
      }
      if (!next.empty())
      {
        expand(current, w, next);
      }
      current.pop_back();
    }
  }

  WeightedGraph const &g_;
  Clique               best_;
};

}  // namespace

Clique solve(WeightedGraph const &g)
{
  g.validate();
  return Search(g).run();
}

Clique brute_force(WeightedGraph const &g)
{
  std::size_t const n = g.size();
  if (n > kBruteForceLimit)
  {
    throw std::invalid_argument("brute_force is limited to " +
                                std::to_string(kBruteForceLimit) + " nodes");
  }
  g.validate();
  std::vector<std::uint32_t> adj(n, 0);
  for (std::size_t u = 0; u < n; ++u)
  {
    for (std::size_t v = 0; v < n; ++v)
    {
      if (g.adjacent(u, v))
      {
        adj[u] |= 1U << v;
      }
    }
  }

  Clique                   best;
  std::vector<std::size_t> nodes;
  std::uint32_t const      limit = n == 0 ? 1U : (1U << n);
  for (std::uint32_t mask = 1; mask < limit; ++mask)
  {
    bool   ok = true;
    Weight w  = 0;
    nodes.clear();
    for (std::size_t v = 0; v < n && ok; ++v)
    {
      if ((mask >> v) & 1U)
      {
        ok = (mask & ~(adj[v] | (1U << v))) == 0;
        w += g.weight(v);
        nodes.push_back(v);
      }
    }
    if (ok && better(w, nodes, best))
    {
      best.weight = w;
      best.nodes  = nodes;
    }
  }
  return best;
}

WeightedGraph read_dimacs(std::istream &in)
{
  std::string         line;
  std::size_t         offset = 0;
  bool                have_header = false;
  std::size_t         declared_edges = 0;
  std::vector<Weight> weights;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  auto node_index = [&](long long id, std::size_t at) {
    if (id < 1 || static_cast<std::size_t>(id) > weights.size())
    {
      throw ParseError("node id " + std::to_string(id) + " out of range", at);
    }
    return static_cast<std::size_t>(id - 1);
  };

  while (std::getline(in, line))
  {
    std::size_t const at = offset;
    offset += line.size() + 1;
    std::istringstream ls(line);
    std::string        tag;
    if (!(ls >> tag) || tag == "c")
    {
      continue;
    }
    if (tag == "p")
    {
      std::string kind;
      long long   n = 0;
      long long   m = 0;
      if (!(ls >> kind >> n >> m) || n < 0 || m < 0 || (kind != "edge" && kind != "col"))
      {
        throw ParseError("malformed problem line", at);
      }
      have_header    = true;
      declared_edges = static_cast<std::size_t>(m);
      weights.assign(static_cast<std::size_t>(n), 1);
    }
    else if (!have_header)
    {
      throw ParseError("data line before the `p edge` header", at);
    }
    else if (tag == "n")
    {
      long long id = 0;
      long long w  = 0;
      if (!(ls >> id >> w) || w < 1)
      {
        throw ParseError("malformed node weight line", at);
      }
      weights[node_index(id, at)] = static_cast<Weight>(w);
    }
    else if (tag == "e")
    {
      long long u = 0;
      long long v = 0;
      if (!(ls >> u >> v))
      {
        throw ParseError("malformed edge line", at);
      }
      std::size_t const a = node_index(u, at);
      std::size_t const b = node_index(v, at);
      if (a == b)
      {
        throw ParseError("self-loop in edge list", at);
      }
      edges.emplace_back(a, b);
    }
    else
    {
      throw ParseError("unknown line tag '" + tag + "'", at);
    }
  }
  if (!have_header)
  {
    throw ParseError("missing `p edge` header", offset);
  }
  WeightedGraph g(std::move(weights));
  for (auto const &[u, v] : edges)
  {
    g.add_edge(u, v);
  }
  if (g.edge_count() != declared_edges)
  {
    // Duplicate edges collapse; only an undercount against distinct edges is an error.
    if (edges.size() != declared_edges)
    {
      throw ParseError("header declares " + std::to_string(declared_edges) + " edges, found " +
                           std::to_string(edges.size()),
                       offset);
    }
  }
  return g;
}

WeightedGraph read_dimacs(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw std::runtime_error("cannot open " + path.string());
  }
  return read_dimacs(in);
}

void write_dimacs(WeightedGraph const &g, std::ostream &out)
{
  out << "p edge " << g.size() << ' ' << g.edge_count() << '\n';
  for (std::size_t v = 0; v < g.size(); ++v)
  {
    out << "n " << v + 1 << ' ' << g.weight(v) << '\n';
  }
  for (std::size_t u = 0; u < g.size(); ++u)
  {
    for (std::size_t v = u + 1; v < g.size(); ++v)
    {
      if (g.adjacent(u, v))
      {
        out << "e " << u + 1 << ' ' << v + 1 << '\n';
      }
    }
  }
}

}  // namespace fedcdc::mwc
