#pragma once

#include <algorithm>
#include <cstddef>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "ndgd/error.hpp"

namespace ndgd {

using AgentIndex = std::size_t;
using Edge = std::pair<AgentIndex, AgentIndex>;

// Undirected agent topology. Indices are 0-based; user-facing code converts.
// Immutable after construction.
class NetworkGraph {
 public:
  NetworkGraph() = default;

  NetworkGraph(std::size_t num_agents, const std::vector<Edge>& edges)
      : num_agents_(num_agents), adjacency_(num_agents) {
    if (num_agents == 0) throw ValidationError("graph: num_agents must be positive");
    for (auto [a, b] : edges) {
      if (a >= num_agents || b >= num_agents) {
        throw ValidationError("graph: edge (" + std::to_string(a + 1) + "," + std::to_string(b + 1) +
                              ") references an agent outside 1.." + std::to_string(num_agents));
      }
      if (a == b) throw ValidationError("graph: self-loop on agent " + std::to_string(a + 1));
      auto& na = adjacency_[a];
      if (std::find(na.begin(), na.end(), b) != na.end()) {
        throw ValidationError("graph: duplicate edge (" + std::to_string(a + 1) + "," +
                              std::to_string(b + 1) + ")");
      }
      na.push_back(b);
      adjacency_[b].push_back(a);
      edges_.emplace_back(std::min(a, b), std::max(a, b));
    }
    for (auto& list : adjacency_) std::sort(list.begin(), list.end());
    std::sort(edges_.begin(), edges_.end());
  }

  std::size_t num_agents() const noexcept { return num_agents_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  // Sorted neighbor list of agent i, excluding i.
  const std::vector<AgentIndex>& neighbors(AgentIndex i) const {
    if (i >= num_agents_) throw std::out_of_range("graph: agent index out of range");
    return adjacency_[i];
  }

  bool has_edge(AgentIndex i, AgentIndex j) const {
    if (i >= num_agents_ || j >= num_agents_ || i == j) return false;
    const auto& list = adjacency_[i];
    return std::binary_search(list.begin(), list.end(), j);
  }

  std::size_t degree(AgentIndex i) const { return neighbors(i).size(); }

  std::size_t max_degree() const {
    std::size_t d = 0;
    for (const auto& list : adjacency_) d = std::max(d, list.size());
    return d;
  }

 private:
  std::size_t num_agents_ = 0;
  std::vector<std::vector<AgentIndex>> adjacency_;
  std::vector<Edge> edges_;
};

// Breadth-first reachability from agent 0.
inline bool is_connected(const NetworkGraph& g) {
  const std::size_t m = g.num_agents();
  if (m == 0) return false;
  std::vector<bool> seen(m, false);
  std::queue<AgentIndex> frontier;
  seen[0] = true;
  frontier.push(0);
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const AgentIndex v = frontier.front();
    frontier.pop();
    for (AgentIndex w : g.neighbors(v)) {
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        frontier.push(w);
      }
    }
  }
  return reached == m;
}

inline NetworkGraph cycle_graph(std::size_t m) {
  std::vector<Edge> edges;
  if (m == 2) edges.emplace_back(0, 1);
  if (m > 2) {
    for (std::size_t i = 0; i < m; ++i) edges.emplace_back(i, (i + 1) % m);
  }
  return NetworkGraph(m, edges);
}

inline NetworkGraph complete_graph(std::size_t m) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) edges.emplace_back(i, j);
  return NetworkGraph(m, edges);
}

}  // namespace ndgd
