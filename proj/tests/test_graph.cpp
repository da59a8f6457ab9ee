#include <gtest/gtest.h>

#include <random>

#include "ndgd/graph.hpp"
#include "support.hpp"

using namespace ndgd;

TEST(Graph, CycleNeighbors) {
  const NetworkGraph g = cycle_graph(5);
  EXPECT_EQ(g.edges().size(), 5u);
  EXPECT_EQ(g.neighbors(0), (std::vector<AgentIndex>{1, 4}));
  EXPECT_TRUE(g.has_edge(3, 4));
  EXPECT_FALSE(g.has_edge(0, 2));
  EXPECT_FALSE(g.has_edge(2, 2));
  EXPECT_EQ(g.max_degree(), 2u);
  EXPECT_TRUE(is_connected(g));
}

TEST(Graph, SingleAgentHasNoNeighbors) {
  const NetworkGraph g(1, {});
  EXPECT_TRUE(g.neighbors(0).empty());
  EXPECT_TRUE(is_connected(g));
}

TEST(Graph, RejectsSelfLoopDuplicateAndRange) {
  EXPECT_THROW(NetworkGraph(3, {{1, 1}}), ValidationError);
  EXPECT_THROW(NetworkGraph(3, {{0, 1}, {1, 0}}), ValidationError);
  EXPECT_THROW(NetworkGraph(3, {{0, 3}}), ValidationError);
  EXPECT_THROW(NetworkGraph(0, {}), ValidationError);
}

TEST(Graph, NeighborsOutOfRangeThrows) {
  const NetworkGraph g = cycle_graph(4);
  EXPECT_THROW(g.neighbors(4), std::out_of_range);
}

TEST(Graph, DisconnectedDetected) {
  const NetworkGraph g(4, {{0, 1}, {2, 3}});
  EXPECT_FALSE(is_connected(g));
}

TEST(Graph, AdjacencyIsSymmetricOnRandomGraphs) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + trial % 8;
    const NetworkGraph g = testkit::random_connected_graph(m, rng);
    EXPECT_TRUE(is_connected(g));
    for (AgentIndex i = 0; i < m; ++i) {
      for (AgentIndex j : g.neighbors(i)) {
        EXPECT_NE(i, j);
        EXPECT_TRUE(g.has_edge(j, i));
      }
    }
  }
}

TEST(Graph, CompleteGraphDegrees) {
  const NetworkGraph g = complete_graph(6);
  for (AgentIndex i = 0; i < 6; ++i) EXPECT_EQ(g.degree(i), 5u);
  EXPECT_EQ(g.edges().size(), 15u);
}
