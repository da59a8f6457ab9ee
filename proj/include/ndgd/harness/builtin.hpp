#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ndgd/error.hpp"
#include "ndgd/graph.hpp"
#include "ndgd/mixing.hpp"
#include "ndgd/objective.hpp"

namespace ndgd::builtin {

// Two-dimensional five-agent saddle example:
//   f1 = 0.25 x1^4 - x1^2 - x2^2       f2 = 0.25 x1^4 + 0.5 x2^4 + 1.5 x2^2
//   f3 = -x1^2 + x2^2                  f4 = 0.5 x1^4 - 0.5 x2^2
//   f5 = x1^2 + 0.5 x2^4
// summing to f = x1^4 - x1^2 + x2^4 + x2^2 (saddle at 0, minima at (+-1/sqrt2, 0)).
inline constexpr const char* kPaperSec5 = "paper-sec5";

inline std::vector<Polynomial> paper_sec5_polynomials() {
  auto poly = [](std::vector<Monomial> t) { return Polynomial(2, std::move(t)); };
  return {
      poly({{{4, 0}, 0.25}, {{2, 0}, -1.0}, {{0, 2}, -1.0}}),
      poly({{{4, 0}, 0.25}, {{0, 4}, 0.5}, {{0, 2}, 1.5}}),
      poly({{{2, 0}, -1.0}, {{0, 2}, 1.0}}),
      poly({{{4, 0}, 0.5}, {{0, 2}, -0.5}}),
      poly({{{2, 0}, 1.0}, {{0, 4}, 0.5}}),
  };
}

// Quartics have no global Lipschitz gradient, so metadata stays unavailable.
inline std::vector<LocalObjective> paper_sec5_objectives() {
  std::vector<LocalObjective> out;
  for (auto& p : paper_sec5_polynomials()) out.push_back(LocalObjective::from_polynomial(std::move(p)));
  return out;
}

// 5-cycle 1-3-4-2-5-1 (0-based below).
inline NetworkGraph paper_sec5_graph() { return NetworkGraph(5, {{0, 2}, {0, 4}, {1, 3}, {1, 4}, {2, 3}}); }

inline Matrix paper_sec5_weights() {
  Matrix w(5, 5);
  w << 0.6, 0.0, 0.2, 0.0, 0.2,  //
      0.0, 0.6, 0.0, 0.2, 0.2,   //
      0.2, 0.0, 0.6, 0.2, 0.0,   //
      0.0, 0.2, 0.2, 0.6, 0.0,   //
      0.2, 0.2, 0.0, 0.0, 0.6;
  return w;
}

inline Problem paper_sec5_problem() {
  return Problem(paper_sec5_objectives(), validate_mixing(paper_sec5_weights(), paper_sec5_graph()));
}

inline std::vector<Vector> paper_sec5_minimizers() {
  const double h = std::sqrt(2.0) / 2.0;
  Vector a(2), b(2);
  a << h, 0.0;
  b << -h, 0.0;
  return {a, b};
}

inline Vector paper_sec5_init() {
  Vector x(2);
  x << 1e-6, 1e-6;
  return x;
}

inline std::optional<std::vector<Polynomial>> polynomials_for(const std::string& name) {
  if (name == kPaperSec5) return paper_sec5_polynomials();
  return std::nullopt;
}

inline std::vector<std::string> names() { return {kPaperSec5}; }

}  // namespace ndgd::builtin
