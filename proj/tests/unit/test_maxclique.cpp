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

#include <array>
#include <chrono>
#include <random>
#include <sstream>

#include "fedcdc/errors.hpp"
#include "fedcdc/maxclique.hpp"

using namespace fedcdc;
using namespace fedcdc::mwc;

namespace {

WeightedGraph random_graph(std::size_t n, double density, std::mt19937_64 &rng)
{
  std::uniform_int_distribution<Weight>  w(1, 100);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Weight>                    weights(n);
  for (auto &x : weights)
  {
    x = w(rng);
  }
  WeightedGraph g(weights);
  for (std::size_t a = 0; a < n; ++a)
  {
    for (std::size_t b = a + 1; b < n; ++b)
    {
      if (u(rng) < density)
      {
        g.add_edge(a, b);
      }
    }
  }
  return g;
}

// Independent checker: every pair adjacent and the weight adds up.
void expect_valid(WeightedGraph const &g, Clique const &c)
{
  Weight total = 0;
  for (std::size_t i = 0; i < c.nodes.size(); ++i)
  {
    total += g.weight(c.nodes[i]);
    for (std::size_t j = i + 1; j < c.nodes.size(); ++j)
    {
      EXPECT_TRUE(g.adjacent(c.nodes[i], c.nodes[j]));
    }
    if (i > 0)
    {
      EXPECT_LT(c.nodes[i - 1], c.nodes[i]);
    }
  }
  EXPECT_EQ(total, c.weight);
}

}  // namespace

TEST(Solve, EmptyGraph)
{
  auto const c = solve(WeightedGraph{});
  EXPECT_TRUE(c.nodes.empty());
  EXPECT_EQ(c.weight, 0u);
}

TEST(Solve, CompleteGraph)
{
  WeightedGraph g({3, 5, 2});
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(0, 2);
  auto const c = solve(g);
  EXPECT_EQ(c.nodes, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(c.weight, 10u);
}

TEST(Solve, PathGraphTieRule)
{
  WeightedGraph g({4, 1, 1, 1, 4});
  for (std::size_t v = 0; v + 1 < 5; ++v)
  {
    g.add_edge(v, v + 1);
  }
  auto const c = solve(g);
  EXPECT_EQ(c.weight, 5u);
  EXPECT_EQ(c.nodes, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(c, brute_force(g));
}

TEST(Solve, IsolatedHeavyNodeDominates)
{
  WeightedGraph g({5, 5, 5, 100});
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(0, 2);
  EXPECT_EQ(solve(g).nodes, (std::vector<std::size_t>{3}));
  EXPECT_EQ(brute_force(g).nodes, (std::vector<std::size_t>{3}));
}

TEST(BruteForce, SingleNode)
{
  auto const c = brute_force(WeightedGraph({7}));
  EXPECT_EQ(c.nodes, (std::vector<std::size_t>{0}));
  EXPECT_EQ(c.weight, 7u);
}

TEST(BruteForce, SizeGuard)
{
  EXPECT_THROW(brute_force(WeightedGraph(std::vector<Weight>(26, 1))), std::invalid_argument);
}

TEST(Solve, OracleEquivalenceN10)
{
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 200; ++trial)
  {
    auto const g = random_graph(10, 0.5, rng);
    auto const s = solve(g);
    auto const b = brute_force(g);
    EXPECT_EQ(s.weight, b.weight) << "trial " << trial;
    EXPECT_EQ(s.nodes, b.nodes) << "trial " << trial;
    expect_valid(g, s);
  }
}

TEST(Solve, OracleEquivalenceMixedDensities)
{
  std::mt19937_64 rng(14);
  auto const      start = std::chrono::steady_clock::now();
  int             mismatches = 0;
  for (int trial = 0; trial < 200; ++trial)
  {
    double const      density = std::array{0.2, 0.5, 0.8}[trial % 3];
    std::size_t const n       = 1 + static_cast<std::size_t>(trial % 14);
    auto const        g       = random_graph(n, density, rng);
    auto const        s       = solve(g);
    expect_valid(g, s);
    mismatches += s.weight != brute_force(g).weight;
  }
  auto const secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(mismatches, 0);
  EXPECT_LT(secs, 5.0);
}

TEST(Solve, AddingHeavyIsolatedNodeChangesAnswer)
{
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial)
  {
    auto const g    = random_graph(9, 0.6, rng);
    auto const best = solve(g).weight;
    auto       w    = g.weights();
    w.push_back(best + 1);
    WeightedGraph h(w);
    for (std::size_t a = 0; a < g.size(); ++a)
    {
      for (std::size_t b = a + 1; b < g.size(); ++b)
      {
        if (g.adjacent(a, b))
        {
          h.add_edge(a, b);
        }
      }
    }
    EXPECT_EQ(solve(h).nodes, (std::vector<std::size_t>{9}));
  }
}

TEST(Graph, RejectsSelfLoopsAndZeroWeights)
{
  WeightedGraph g({1, 2});
  EXPECT_THROW(g.add_edge(1, 1), std::invalid_argument);
  EXPECT_THROW(g.add_edge(0, 2), std::exception);
  EXPECT_THROW(WeightedGraph({0, 1}).validate(), std::invalid_argument);
  EXPECT_TRUE(is_clique(g, {0}));
  EXPECT_FALSE(is_clique(g, {0, 1}));
}

TEST(Dimacs, RoundTrip)
{
  std::mt19937_64 rng(2);
  auto const      g = random_graph(8, 0.5, rng);
  std::stringstream ss;
  write_dimacs(g, ss);
  auto const back = read_dimacs(ss);
  EXPECT_EQ(back.weights(), g.weights());
  EXPECT_EQ(back.edge_count(), g.edge_count());
  EXPECT_EQ(solve(back), solve(g));
}

TEST(Dimacs, DefaultsAndComments)
{
  std::istringstream in("c tiny\np edge 3 2\nn 2 9\ne 1 2\ne 2 3\n");
  auto const         g = read_dimacs(in);
  EXPECT_EQ(g.weights(), (std::vector<Weight>{1, 9, 1}));
  EXPECT_TRUE(g.adjacent(0, 1));
  EXPECT_FALSE(g.adjacent(0, 2));
}

TEST(Dimacs, ErrorsCarryOffsets)
{
  std::istringstream missing_header("e 1 2\n");
  EXPECT_THROW(read_dimacs(missing_header), ParseError);

  std::istringstream bad_node("p edge 2 1\ne 1 5\n");
  try
  {
    read_dimacs(bad_node);
    FAIL() << "expected ParseError";
  }
  catch (ParseError const &e)
  {
    EXPECT_EQ(e.offset(), 11u);
  }

  std::istringstream unknown("p edge 2 0\nx 1\n");
  EXPECT_THROW(read_dimacs(unknown), ParseError);
}
