#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ndgd/distance.hpp"
#include "ndgd/error.hpp"
#include "ndgd/noise.hpp"
#include "ndgd/objective.hpp"
#include "ndgd/state.hpp"

namespace ndgd {

enum class Variant { DGD, NDGD, GDOnQ };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::DGD: return "DGD";
    case Variant::NDGD: return "NDGD";
    case Variant::GDOnQ: return "GD_on_Q";
  }
  return "unknown";
}

inline std::optional<Variant> parse_variant(const std::string& s) {
  if (s == "DGD") return Variant::DGD;
  if (s == "NDGD") return Variant::NDGD;
  if (s == "GD_on_Q") return Variant::GDOnQ;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Synchronous round engine

// Read/write accounting for one or more rounds.
struct AuditReport {
  bool enabled = false;
  std::uint64_t reads = 0;
  std::uint64_t out_of_neighborhood_reads = 0;
  std::size_t equivalence_checks = 0;
  double max_equivalence_error = 0.0;

  void merge(const AuditReport& other) {
    reads += other.reads;
    out_of_neighborhood_reads += other.out_of_neighborhood_reads;
    equivalence_checks += other.equivalence_checks;
    max_equivalence_error = std::max(max_equivalence_error, other.max_equivalence_error);
  }
};

// What agent i is allowed to see of the round-k state: its own block and its
// neighbors' blocks. In audit mode every read is checked and counted.
class NeighborhoodView {
 public:
  NeighborhoodView(const StackedState& round_state, const NetworkGraph& graph, AgentIndex self, AuditReport* audit)
      : state_(round_state), graph_(graph), self_(self), audit_(audit) {}

  AgentIndex self() const noexcept { return self_; }

  auto read(AgentIndex j) const {
    if (audit_ != nullptr) {
      ++audit_->reads;
      if (j != self_ && !graph_.has_edge(self_, j)) ++audit_->out_of_neighborhood_reads;
    }
    return state_.block(j);
  }

 private:
  const StackedState& state_;
  const NetworkGraph& graph_;
  AgentIndex self_;
  AuditReport* audit_;
};

// Double-buffered round: every agent reads round k, then round k+1 is
// published at once. `update(view, out_block)` computes one agent's block.
template <class AgentUpdate>
StackedState run_round(const Problem& p, const StackedState& current, AgentUpdate&& update,
                       AuditReport* audit = nullptr) {
  p.require_state(current, "round");
  StackedState next(current.num_agents(), current.dim());
  for (AgentIndex i = 0; i < current.num_agents(); ++i) {
    NeighborhoodView view(current, p.graph(), i, audit);
    Vector out = Vector::Zero(static_cast<Eigen::Index>(current.dim()));
    update(view, out);
    next.block(i) = out;
  }
  return next;
}

namespace detail {

inline void mix_neighbors(const Problem& p, const NeighborhoodView& view, Vector& out) {
  for (const auto& e : p.mixing().row(view.self())) out += e.weight * view.read(e.column);
}

}  // namespace detail

// x_i <- sum_j W_ij x_j - a grad f_i(x_i)
inline StackedState dgd_step(const Problem& p, double alpha, const StackedState& x, AuditReport* audit = nullptr) {
  require_step(alpha, "dgd_step");
  return run_round(
      p, x,
      [&](const NeighborhoodView& view, Vector& out) {
        detail::mix_neighbors(p, view, out);
        out -= alpha * p.objective(view.self()).gradient(view.read(view.self()));
      },
      audit);
}

// x_i <- sum_j W_ij x_j - a (grad f_i(x_i) + xi_i^k), xi drawn from agent i's stream.
inline StackedState ndgd_step(const Problem& p, double alpha, const StackedState& x, const NoiseSpec& noise,
                              std::uint64_t master_seed, std::uint64_t iteration, AuditReport* audit = nullptr) {
  require_step(alpha, "ndgd_step");
  return run_round(
      p, x,
      [&](const NeighborhoodView& view, Vector& out) {
        const AgentIndex i = view.self();
        detail::mix_neighbors(p, view, out);
        Vector direction = p.objective(i).gradient(view.read(i));
        if (noise.kind != NoiseKind::None) direction += sample(noise, RandomStream(master_seed, i), iteration, x.dim());
        out -= alpha * direction;
      },
      audit);
}

// Centralized gradient descent on Q_a.
inline StackedState gd_on_q_step(const Problem& p, double alpha, const StackedState& x) {
  StackedState next = x;
  next.flat() -= alpha * q_grad(p, alpha, x).flat();
  return next;
}

// ||dgd_step(x) - (x - a grad Q_a(x))|| / ||dgd_step(x)||
inline double dgd_q_equivalence_error(const Problem& p, double alpha, const StackedState& x) {
  const StackedState a = dgd_step(p, alpha, x);
  const StackedState b = gd_on_q_step(p, alpha, x);
  const double scale = std::max(a.norm(), b.norm());
  const double diff = (a.flat() - b.flat()).norm();
  return scale > 0.0 ? diff / scale : diff;
}

// ---------------------------------------------------------------------------
// Runs

struct StopRule {
  std::optional<double> grad_norm_below;
  // (consensus error threshold, ||grad f(mean)|| threshold)
  std::optional<std::pair<double, double>> consensus_and_f_grad;
};

enum class StopReason { MaxIterations, GradNormBelow, ConsensusAndFGrad, Diverged };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::GradNormBelow: return "grad_norm_below";
    case StopReason::ConsensusAndFGrad: return "consensus_and_f_grad";
    case StopReason::Diverged: return "diverged";
  }
  return "unknown";
}

struct RunConfig {
  double alpha = 0.0;
  std::size_t max_iterations = 0;
  StackedState init;
  NoiseSpec noise;
  std::uint64_t master_seed = 0;
  // 0 selects the default: 1 for K <= 10^4, else 10.
  std::size_t record_every = 0;
  std::optional<StopRule> stop;
  bool record_blocks = false;
  std::vector<Vector> references;
  bool audit = false;

  std::size_t effective_record_every() const {
    if (record_every > 0) return record_every;
    return max_iterations <= 10'000 ? 1 : 10;
  }
};

struct TrajectoryRecord {
  std::size_t iteration = 0;
  double q_value = 0.0;
  double q_grad_norm = 0.0;
  double consensus_err = 0.0;
  double f_of_mean = 0.0;
  Vector mean;
  std::optional<ReferenceDistance> mean_to_ref;
  std::vector<double> agent_dist_to_ref;  // empty without references
  std::optional<StackedState> blocks;
};

struct Trajectory {
  Variant variant = Variant::DGD;
  std::vector<TrajectoryRecord> records;
  StackedState final_state;
  std::size_t iterations_run = 0;
  StopReason stop_reason = StopReason::MaxIterations;
  AuditReport audit;
};

inline void validate_run_config(const Problem& p, const RunConfig& cfg, Variant variant) {
  require_step(cfg.alpha, "run");
  if (cfg.max_iterations < 1) throw ValidationError("run: max_iterations must be at least 1");
  p.require_state(cfg.init, "run: init");
  if (cfg.stop && !cfg.stop->grad_norm_below && !cfg.stop->consensus_and_f_grad) {
    throw ValidationError("run: stop rule present but no criterion set");
  }
  for (const auto& r : cfg.references) p.require_point(r, "run: reference point");
  if (variant == Variant::NDGD) {
    validate_noise(cfg.noise, p.num_agents(), p.dim(), p.mixing().spectral().lambda_min);
  }
}

namespace detail {

inline TrajectoryRecord make_record(const Problem& p, const RunConfig& cfg, std::size_t k, const StackedState& x,
                                    double q_grad_norm) {
  TrajectoryRecord r;
  r.iteration = k;
  r.q_value = q_value(p, cfg.alpha, x);
  r.q_grad_norm = q_grad_norm;
  r.mean = consensus_average(x);
  r.consensus_err = consensus_error(x);
  r.f_of_mean = f_value(p, r.mean);
  if (!cfg.references.empty()) {
    r.mean_to_ref = dist_to_reference(r.mean, cfg.references);
    for (std::size_t i = 0; i < x.num_agents(); ++i) {
      r.agent_dist_to_ref.push_back(dist_to_reference(Vector(x.block(i)), cfg.references).distance);
    }
  }
  if (cfg.record_blocks) r.blocks = x;
  return r;
}

}  // namespace detail

// Iterates the chosen update up to K steps or until the stop rule fires.
// Records iteration 0, every record_every-th iterate and the final iterate.
inline Trajectory run(const Problem& p, const RunConfig& cfg, Variant variant) {
  validate_run_config(p, cfg, variant);
  Trajectory traj;
  traj.variant = variant;
  traj.audit.enabled = cfg.audit;
  AuditReport* audit = cfg.audit ? &traj.audit : nullptr;
  const std::size_t every = cfg.effective_record_every();

  StackedState x = cfg.init;
  traj.records.push_back(detail::make_record(p, cfg, 0, x, q_grad(p, cfg.alpha, x).norm()));

  for (std::size_t k = 0; k < cfg.max_iterations; ++k) {
    if (audit != nullptr && variant != Variant::GDOnQ && k % every == 0) {
      audit->max_equivalence_error = std::max(audit->max_equivalence_error, dgd_q_equivalence_error(p, cfg.alpha, x));
      ++audit->equivalence_checks;
    }
    StackedState next;
    switch (variant) {
      case Variant::DGD: next = dgd_step(p, cfg.alpha, x, audit); break;
      case Variant::NDGD: next = ndgd_step(p, cfg.alpha, x, cfg.noise, cfg.master_seed, k, audit); break;
      case Variant::GDOnQ: next = gd_on_q_step(p, cfg.alpha, x); break;
    }
    if (!next.all_finite()) {
      traj.stop_reason = StopReason::Diverged;
      break;
    }
    x = std::move(next);
    traj.iterations_run = k + 1;

    double q_grad_norm = -1.0;
    const bool last = traj.iterations_run == cfg.max_iterations;
    std::optional<StopReason> stop;
    if (cfg.stop) {
      q_grad_norm = q_grad(p, cfg.alpha, x).norm();
      if (cfg.stop->grad_norm_below && q_grad_norm < *cfg.stop->grad_norm_below) {
        stop = StopReason::GradNormBelow;
      } else if (cfg.stop->consensus_and_f_grad) {
        const Vector mean = consensus_average(x);
        if (consensus_error(x) <= cfg.stop->consensus_and_f_grad->first &&
            f_grad(p, mean).norm() <= cfg.stop->consensus_and_f_grad->second) {
          stop = StopReason::ConsensusAndFGrad;
        }
      }
    }
    if (traj.iterations_run % every == 0 || last || stop) {
      if (q_grad_norm < 0.0) q_grad_norm = q_grad(p, cfg.alpha, x).norm();
      traj.records.push_back(detail::make_record(p, cfg, traj.iterations_run, x, q_grad_norm));
    }
    if (stop) {
      traj.stop_reason = *stop;
      break;
    }
  }
  if (traj.stop_reason == StopReason::Diverged && traj.records.back().iteration != traj.iterations_run) {
    traj.records.push_back(detail::make_record(p, cfg, traj.iterations_run, x, q_grad(p, cfg.alpha, x).norm()));
  }
  traj.final_state = std::move(x);
  return traj;
}

}  // namespace ndgd
