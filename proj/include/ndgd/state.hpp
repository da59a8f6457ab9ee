#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "ndgd/error.hpp"

namespace ndgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// m local copies of an n-vector, stored block-major in one flat vector.
class StackedState {
 public:
  StackedState() = default;

  StackedState(std::size_t num_agents, std::size_t dim)
      : m_(num_agents), n_(dim), data_(Vector::Zero(static_cast<Eigen::Index>(num_agents * dim))) {}

  StackedState(std::size_t num_agents, std::size_t dim, Vector flat)
      : m_(num_agents), n_(dim), data_(std::move(flat)) {
    if (static_cast<std::size_t>(data_.size()) != m_ * n_) {
      throw ValidationError("stacked state: expected " + std::to_string(m_ * n_) +
                            " entries, got " + std::to_string(data_.size()));
    }
  }

  // 1_m (x) x
  static StackedState broadcast(std::size_t num_agents, const Vector& x) {
    StackedState s(num_agents, static_cast<std::size_t>(x.size()));
    for (std::size_t i = 0; i < num_agents; ++i) s.block(i) = x;
    return s;
  }

  std::size_t num_agents() const noexcept { return m_; }
  std::size_t dim() const noexcept { return n_; }
  std::size_t size() const noexcept { return m_ * n_; }

  Eigen::VectorBlock<Vector> block(std::size_t i) {
    return data_.segment(static_cast<Eigen::Index>(i * n_), static_cast<Eigen::Index>(n_));
  }
  Eigen::VectorBlock<const Vector> block(std::size_t i) const {
    return data_.segment(static_cast<Eigen::Index>(i * n_), static_cast<Eigen::Index>(n_));
  }

  Vector& flat() noexcept { return data_; }
  const Vector& flat() const noexcept { return data_; }

  bool same_shape(const StackedState& other) const noexcept { return m_ == other.m_ && n_ == other.n_; }

  bool all_finite() const { return data_.allFinite(); }

  double norm() const { return data_.norm(); }

 private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  Vector data_;
};

inline void require_same_shape(const StackedState& a, const StackedState& b, const char* where) {
  if (!a.same_shape(b)) {
    throw ValidationError(std::string(where) + ": dimension mismatch (" + std::to_string(a.num_agents()) +
                          "x" + std::to_string(a.dim()) + " vs " + std::to_string(b.num_agents()) + "x" +
                          std::to_string(b.dim()) + ")");
  }
}

// Arithmetic mean of the m blocks.
inline Vector consensus_average(const StackedState& x) {
  Vector mean = Vector::Zero(static_cast<Eigen::Index>(x.dim()));
  for (std::size_t i = 0; i < x.num_agents(); ++i) mean += x.block(i);
  return mean / static_cast<double>(x.num_agents());
}

// max_i ||x_i - mean||
inline double consensus_error(const StackedState& x) {
  const Vector mean = consensus_average(x);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.num_agents(); ++i) worst = std::max(worst, (x.block(i) - mean).norm());
  return worst;
}

}  // namespace ndgd
