#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "pullcons/coalescing.hpp"

namespace {

using namespace pullcons;

TEST(Graph, Complete) {
  const auto g = Graph::complete(5);
  EXPECT_TRUE(g.is_complete());
  EXPECT_EQ(g.size(), 5u);
  EXPECT_EQ(g.degree(0), 4u);
  EXPECT_TRUE(g.adjacent(0, 3));
  EXPECT_FALSE(g.adjacent(2, 2));
  RngStream r(1);
  std::set<NodeId> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = g.uniform_neighbor(2, r);
    EXPECT_NE(v, 2u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 4u);
  EXPECT_THROW(Graph::complete(1), Error);
}

TEST(Graph, Cycle) {
  const auto g = Graph::cycle(6);
  EXPECT_FALSE(g.is_complete());
  for (NodeId u = 0; u < 6; ++u) {
    EXPECT_EQ(g.degree(u), 2u);
    EXPECT_TRUE(g.adjacent(u, (u + 1) % 6));
    EXPECT_TRUE(g.adjacent(u, (u + 5) % 6));
  }
  EXPECT_THROW(Graph::cycle(2), Error);
}

TEST(Graph, RandomRegular) {
  RngStream r(2);
  const auto g = Graph::random_regular(20, 3, r);
  for (NodeId u = 0; u < 20; ++u) {
    EXPECT_EQ(g.degree(u), 3u);
    EXPECT_FALSE(g.adjacent(u, u));
    for (NodeId v = 0; v < 20; ++v) EXPECT_EQ(g.adjacent(u, v), g.adjacent(v, u));
  }
  RngStream r2(3);
  EXPECT_THROW(Graph::random_regular(5, 3, r2), Error);  // n d odd
}

TEST(Graph, EdgeListRoundTrip) {
  std::istringstream in("4 4\n0 1\n1 2\n2 3\n3 0\n");
  const auto g = Graph::read_edge_list(in);
  EXPECT_EQ(g.size(), 4u);
  EXPECT_TRUE(g.adjacent(3, 0));
  EXPECT_FALSE(g.adjacent(0, 2));
}

TEST(Graph, EdgeListErrors) {
  const char* bad[] = {"", "3\n", "3 2\n0 1\n", "3 2\n0 1\n1 1\n", "3 2\n0 1\n1 5\n",
                       "3 1\n0 1\n"};  // last: node 2 isolated
  for (const char* text : bad) {
    std::istringstream in(text);
    EXPECT_THROW(Graph::read_edge_list(in), Error) << text;
  }
  EXPECT_THROW(Graph::load_edge_list("/nonexistent/graph.txt"), Error);
}

TEST(Graph, AdjacencyValidation) {
  EXPECT_THROW(Graph::from_adjacency({{1}, {}}), Error);
  EXPECT_THROW(Graph::from_adjacency({{1}, {0}, {0}}), Error);
  EXPECT_NO_THROW(Graph::from_adjacency({{1}, {0}}));
}

TEST(RandomMapTable, FixedRowsValidated) {
  const auto g = Graph::cycle(4);
  EXPECT_THROW(RandomMapTable::from_rows(g, {{1, 2, 3, 0, 1}}), Error);
  EXPECT_THROW(RandomMapTable::from_rows(g, {{2, 2, 3, 0}}), Error);  // 0 -> 2 not an edge
  auto t = RandomMapTable::from_rows(g, {{1, 2, 3, 0}});
  EXPECT_TRUE(t.is_fixed());
  ASSERT_NE(t.row(0), nullptr);
  EXPECT_EQ(t.row(1), nullptr);
}

TEST(RandomMapTable, LazyRowsAreStable) {
  const auto g = Graph::complete(10);
  RandomMapTable t(g, RngStream(4));
  const auto r5 = *t.row(5);
  EXPECT_EQ(t.materialized_rounds(), 6u);
  EXPECT_EQ(*t.row(5), r5);
  for (NodeId u = 0; u < 10; ++u) EXPECT_NE(r5[u], u);
}

TEST(Coalescence, HandWorkedExample) {
  const auto g = Graph::complete(3);
  auto maps = RandomMapTable::from_rows(g, {{1, 0, 0}, {2, 2, 1}});
  const auto traj = run_coalescence(g, maps, 1, 10, true);
  EXPECT_EQ(traj.walk_counts, (std::vector<std::uint64_t>{3, 2, 1}));
  EXPECT_FALSE(traj.truncated);
  ASSERT_EQ(traj.positions.size(), 3u);
  EXPECT_EQ(traj.positions[1], (std::vector<NodeId>{1, 0, 0}));
  EXPECT_EQ(traj.positions[2], (std::vector<NodeId>{2, 2, 2}));
  EXPECT_EQ(run_voter_with_maps(g, maps, 1), 2u);
  EXPECT_EQ(run_voter_with_maps(g, maps, 2), 1u);
  EXPECT_THROW(run_voter_with_maps(g, maps, 3), Error);
}

TEST(Coalescence, TruncatedWhenTableRunsOut) {
  const auto g = Graph::cycle(4);
  auto maps = RandomMapTable::from_rows(g, {{1, 2, 3, 0}});
  const auto traj = run_coalescence(g, maps, 1, 100);
  EXPECT_TRUE(traj.truncated);
  EXPECT_EQ(traj.walk_counts, (std::vector<std::uint64_t>{4, 4}));
}

TEST(Duality, HoldsOnSeveralGraphs) {
  RngStream gr(5);
  const Graph graphs[] = {Graph::complete(16), Graph::cycle(12), Graph::random_regular(16, 4, gr),
                          Graph::complete(2)};
  for (const auto& g : graphs) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      EXPECT_TRUE(duality_check(g, 60, RngStream(10 + s))) << g.describe();
    }
  }
  EXPECT_THROW(duality_check(Graph::complete(4), 0, RngStream(1)), Error);
}

TEST(CoalescenceCountStep, TwoWalksMeetingProbability) {
  // Two walks on K_n meet in one step iff they pick the same common
  // neighbor: (n - 2) / (n - 1)^2.
  for (std::uint64_t n : {3u, 5u, 10u}) {
    RngStream r(20 + n);
    const int samples = 100000;
    int met = 0;
    for (int i = 0; i < samples; ++i) met += coalescence_count_step(n, 2, r) == 1 ? 1 : 0;
    const double p = static_cast<double>(n - 2) / static_cast<double>((n - 1) * (n - 1));
    EXPECT_NEAR(static_cast<double>(met) / samples, p, 4.0 * std::sqrt(p * (1 - p) / samples));
  }
}

TEST(CoalescenceCountStep, Bounds) {
  RngStream r(6);
  for (int i = 0; i < 200; ++i) {
    const auto x = coalescence_count_step(50, 30, r);
    EXPECT_GE(x, 1u);
    EXPECT_LE(x, 30u);
  }
  EXPECT_EQ(coalescence_count_step(50, 1, r), 1u);
  EXPECT_THROW(coalescence_count_step(5, 6, r), Error);
  EXPECT_THROW(coalescence_count_step(1, 1, r), Error);
}

// Occupancy oracle: node v is occupied next round iff some walk other than
// one sitting on v picks it.
double exact_next_count(double n, double x) {
  const double q = (n - 2.0) / (n - 1.0);
  return x * (1.0 - std::pow(q, x - 1.0)) + (n - x) * (1.0 - std::pow(q, x));
}

TEST(OneStepDrift, MatchesOccupancyOracle) {
  for (std::uint64_t x : {2u, 10u, 50u, 100u}) {
    const auto est = empirical_one_step_drift(100, x, 20000, RngStream(30 + x));
    EXPECT_NEAR(est.mean, exact_next_count(100, static_cast<double>(x)), 4.0 * est.stderr_mean + 1e-12)
        << "x=" << x;
    EXPECT_EQ(est.samples, 20000u);
  }
  EXPECT_THROW(empirical_one_step_drift(100, 1, 10, RngStream(1)), Error);
}

TEST(CoalescenceTimes, CompleteAndGeneralPathsAgree) {
  // Same law on K_n whether simulated on the occupied set or walk by walk via
  // an explicit adjacency list.
  const NodeId n = 24;
  std::vector<std::vector<NodeId>> adj(n);
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = 0; v < n; ++v)
      if (u != v) adj[u].push_back(v);
  const auto explicit_k = Graph::from_adjacency(adj);
  const auto a = coalescence_time_stats(Graph::complete(n), 1, 2000, RngStream(40));
  const auto b = coalescence_time_stats(explicit_k, 1, 2000, RngStream(41));
  EXPECT_EQ(a.censored, 0u);
  EXPECT_NEAR(a.mean, b.mean, 4.0 * std::hypot(a.stderr_mean, b.stderr_mean));
}

TEST(CoalescenceTimes, WorkersAndEdgeCases) {
  const auto g = Graph::cycle(10);
  const auto a = coalescence_time_stats(g, 2, 30, RngStream(50), 1'000'000, 1);
  const auto b = coalescence_time_stats(g, 2, 30, RngStream(50), 1'000'000, 4);
  EXPECT_EQ(a.times, b.times);
  const auto zero = coalescence_time_stats(g, 10, 5, RngStream(51));
  for (const auto& t : zero.times) EXPECT_EQ(t, std::optional<std::uint64_t>(0));
  EXPECT_THROW(coalescence_time_stats(g, 0, 5, RngStream(1)), Error);
  EXPECT_THROW(coalescence_time_stats(Graph::complete(2), 1, 5, RngStream(1)), Error);
  const auto censored = coalescence_time_stats(Graph::cycle(50), 1, 5, RngStream(52), 3);
  EXPECT_EQ(censored.censored, 5u);
}

TEST(SummarizeTimes, Statistics) {
  const auto s = summarize_times({2, 4, std::nullopt, 6});
  EXPECT_EQ(s.censored, 1u);
  EXPECT_DOUBLE_EQ(s.mean, 4.0);
  EXPECT_NEAR(s.stderr_mean, 2.0 / std::sqrt(3.0), 1e-12);
}

}  // namespace
