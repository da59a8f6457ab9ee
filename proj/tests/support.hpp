#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "ndgd/harness/generate.hpp"
#include "ndgd/ndgd.hpp"

namespace ndgd::testkit {

// Random connected graph: a random spanning tree plus a few extra edges.
inline NetworkGraph random_connected_graph(std::size_t m, std::mt19937_64& rng) {
  std::vector<std::pair<AgentIndex, AgentIndex>> edges;
  for (std::size_t i = 1; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    edges.emplace_back(pick(rng), i);
  }
  std::bernoulli_distribution extra(0.3);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      bool present = false;
      for (auto [a, b] : edges) present = present || (a == i && b == j) || (a == j && b == i);
      if (!present && extra(rng)) edges.emplace_back(i, j);
    }
  }
  return NetworkGraph(m, edges);
}

inline MixingMatrix random_mixing(std::size_t m, std::mt19937_64& rng) {
  const NetworkGraph g = random_connected_graph(m, rng);
  std::uniform_real_distribution<double> beta(0.05, 0.45);
  return validate_mixing(generate_lazy_metropolis(g, beta(rng)), g);
}

// Random polynomial of total degree <= 4 with a few terms.
inline Polynomial random_polynomial(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nterms(2, 6);
  std::uniform_int_distribution<int> expo(0, 2);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::vector<Monomial> terms;
  const int t = nterms(rng);
  for (int k = 0; k < t; ++k) {
    Monomial mono;
    mono.exponents.assign(n, 0);
    int budget = 4;
    for (std::size_t j = 0; j < n && budget > 0; ++j) {
      const int e = std::min(expo(rng), budget);
      mono.exponents[j] = e;
      budget -= e;
    }
    mono.coefficient = coef(rng);
    terms.push_back(std::move(mono));
  }
  return Polynomial(n, std::move(terms));
}

inline Problem random_problem(std::size_t m, std::size_t n, std::mt19937_64& rng) {
  std::vector<LocalObjective> objs;
  for (std::size_t i = 0; i < m; ++i) objs.push_back(LocalObjective::from_polynomial(random_polynomial(n, rng)));
  return Problem(std::move(objs), random_mixing(m, rng));
}

inline StackedState random_state(std::size_t m, std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  StackedState x(m, n);
  for (auto& v : x.flat()) v = u(rng);
  return x;
}

}  // namespace ndgd::testkit
