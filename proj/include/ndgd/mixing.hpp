#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ndgd/error.hpp"
#include "ndgd/graph.hpp"
#include "ndgd/state.hpp"

namespace ndgd {

enum class MixingErrorCode {
  DimensionMismatch,
  Asymmetric,
  NotStochastic,
  GraphInconsistent,
  NotDiagonallyDominant,
  Disconnected,
  Spectrum,
};

inline const char* to_string(MixingErrorCode c) {
  switch (c) {
    case MixingErrorCode::DimensionMismatch: return "dimension-mismatch";
    case MixingErrorCode::Asymmetric: return "asymmetric";
    case MixingErrorCode::NotStochastic: return "not-doubly-stochastic";
    case MixingErrorCode::GraphInconsistent: return "graph-inconsistent";
    case MixingErrorCode::NotDiagonallyDominant: return "not-strictly-diagonally-dominant";
    case MixingErrorCode::Disconnected: return "disconnected-graph";
    case MixingErrorCode::Spectrum: return "spectrum";
  }
  return "unknown";
}

class MixingError : public ValidationError {
 public:
  MixingError(MixingErrorCode code, const std::string& detail)
      : ValidationError(std::string("mixing matrix [") + to_string(code) + "]: " + detail), code_(code) {}

  MixingErrorCode code() const noexcept { return code_; }

 private:
  MixingErrorCode code_;
};

struct SpectralInfo {
  double lambda_max = 1.0;
  // Second-largest eigenvalue counting multiplicity; 0 when m = 1.
  double lambda_2 = 0.0;
  double lambda_min = 1.0;
  Vector eigenvalues;  // ascending
};

inline constexpr double kDefaultMixingTolerance = 1e-12;
inline constexpr double kSpectralTolerance = 1e-9;

class MixingMatrix {
 public:
  struct Entry {
    AgentIndex column;
    double weight;
  };

  std::size_t num_agents() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  const Matrix& weights() const noexcept { return weights_; }
  const SpectralInfo& spectral() const noexcept { return spectral_; }
  const NetworkGraph& graph() const noexcept { return graph_; }
  double tolerance() const noexcept { return tolerance_; }

  // Nonzero entries of row i (the diagonal plus the neighbors), sorted by column.
  const std::vector<Entry>& row(AgentIndex i) const { return rows_.at(i); }

  friend MixingMatrix validate_mixing(const Matrix& w, const NetworkGraph& g, double tolerance);

 private:
  Matrix weights_;
  NetworkGraph graph_;
  SpectralInfo spectral_;
  std::vector<std::vector<Entry>> rows_;
  double tolerance_ = kDefaultMixingTolerance;
};

namespace detail {

inline std::string idx(std::size_t i) { return std::to_string(i + 1); }

}  // namespace detail

// Checks symmetry, double stochasticity, graph consistency and strict diagonal
// dominance (in that order), then computes the spectrum with a dense solver.
inline MixingMatrix validate_mixing(const Matrix& w, const NetworkGraph& g,
                                    double tolerance = kDefaultMixingTolerance) {
  using detail::idx;
  const std::size_t m = g.num_agents();
  if (static_cast<std::size_t>(w.rows()) != m || static_cast<std::size_t>(w.cols()) != m) {
    throw MixingError(MixingErrorCode::DimensionMismatch,
                      "expected " + std::to_string(m) + "x" + std::to_string(m) + ", got " +
                          std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  }
  if (!w.allFinite()) throw MixingError(MixingErrorCode::DimensionMismatch, "non-finite entry");

  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (std::abs(w(i, j) - w(j, i)) > tolerance) {
        throw MixingError(MixingErrorCode::Asymmetric,
                          "W(" + idx(i) + "," + idx(j) + ") != W(" + idx(j) + "," + idx(i) + ")");
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double row_sum = w.row(i).sum();
    const double col_sum = w.col(i).sum();
    if (std::abs(row_sum - 1.0) > tolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "row sums must equal 1; row " << idx(i) << " sums to " << row_sum;
      throw MixingError(MixingErrorCode::NotStochastic, os.str());
    }
    if (std::abs(col_sum - 1.0) > tolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "column sums must equal 1; column " << idx(i) << " sums to " << col_sum;
      throw MixingError(MixingErrorCode::NotStochastic, os.str());
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(w(i, i) > 0.0)) {
      throw MixingError(MixingErrorCode::GraphInconsistent, "W(" + idx(i) + "," + idx(i) + ") must be positive");
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const bool edge = g.has_edge(i, j);
      if (edge && !(w(i, j) > 0.0)) {
        throw MixingError(MixingErrorCode::GraphInconsistent,
                          "edge (" + idx(i) + "," + idx(j) + ") has nonpositive weight");
      }
      if (!edge && w(i, j) != 0.0) {
        throw MixingError(MixingErrorCode::GraphInconsistent,
                          "W(" + idx(i) + "," + idx(j) + ") is nonzero but agents are not adjacent");
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double off = w.row(i).sum() - w(i, i);
    if (!(w(i, i) > off)) {
      throw MixingError(MixingErrorCode::NotDiagonallyDominant,
                        "row " + idx(i) + ": diagonal does not exceed off-diagonal sum");
    }
  }
  if (!is_connected(g)) throw MixingError(MixingErrorCode::Disconnected, "communication graph is not connected");

  MixingMatrix out;
  out.weights_ = w;
  out.graph_ = g;
  out.tolerance_ = tolerance;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(w, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw MixingError(MixingErrorCode::Spectrum, "eigensolver failed");
  const Vector& ev = solver.eigenvalues();
  out.spectral_.eigenvalues = ev;
  out.spectral_.lambda_min = ev(0);
  out.spectral_.lambda_max = ev(static_cast<Eigen::Index>(m) - 1);
  out.spectral_.lambda_2 = m >= 2 ? ev(static_cast<Eigen::Index>(m) - 2) : 0.0;
  if (std::abs(out.spectral_.lambda_max - 1.0) > kSpectralTolerance) {
    throw MixingError(MixingErrorCode::Spectrum, "largest eigenvalue is not 1");
  }
  if (m >= 2 && out.spectral_.lambda_2 >= 1.0 - kSpectralTolerance) {
    throw MixingError(MixingErrorCode::Spectrum, "eigenvalue 1 is not simple");
  }
  if (!(out.spectral_.lambda_min > 0.0)) {
    throw MixingError(MixingErrorCode::Spectrum, "W is not positive definite");
  }

  out.rows_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (w(i, j) != 0.0) out.rows_[i].push_back({j, w(i, j)});
    }
  }
  return out;
}

// (W (x) I_n) x, evaluated blockwise from the sparse rows.
inline StackedState apply_lifted(const MixingMatrix& w, const StackedState& x) {
  if (x.num_agents() != w.num_agents()) {
    throw ValidationError("apply_lifted: state has " + std::to_string(x.num_agents()) + " blocks, W is " +
                          std::to_string(w.num_agents()) + "x" + std::to_string(w.num_agents()));
  }
  StackedState out(x.num_agents(), x.dim());
  for (std::size_t i = 0; i < x.num_agents(); ++i) {
    auto dst = out.block(i);
    for (const auto& e : w.row(i)) dst += e.weight * x.block(e.column);
  }
  return out;
}

}  // namespace ndgd
