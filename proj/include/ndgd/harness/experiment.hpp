#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ndgd/diagnostics.hpp"
#include "ndgd/dynamics.hpp"
#include "ndgd/error.hpp"
#include "ndgd/harness/config.hpp"
#include "ndgd/harness/csv.hpp"

namespace ndgd {

struct RunSummary {
  Variant variant = Variant::DGD;
  std::uint64_t seed = 0;
  std::optional<std::size_t> escape_iter;
  std::vector<double> final_dist_to_ref;  // per agent
  double final_consensus_err = 0.0;
  std::size_t iterations_run = 0;
  StopReason stop_reason = StopReason::MaxIterations;
  AuditReport audit;
  StackedState final_state;
  std::string trajectory_path;
};

struct VariantEscapeStats {
  Variant variant = Variant::DGD;
  std::size_t runs = 0;
  std::size_t escaped = 0;
  std::optional<double> median_escape;  // over runs that escaped
};

struct ExperimentSummary {
  std::vector<RunSummary> runs;
  std::vector<VariantEscapeStats> escape_stats;
  AuditReport audit;
  std::vector<BoundReport> bounds;
  std::string report;
};

struct ExperimentOptions {
  bool audit = false;
  bool write_files = true;
};

// ---------------------------------------------------------------------------
// State files: one agent per line, n numbers separated by commas or blanks;
// '#' starts a comment.

inline void write_state_file(const std::string& path, const StackedState& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write state file '" + path + "'");
  out << "# ndgd-state " << x.num_agents() << " agents x " << x.dim() << "\n";
  for (std::size_t i = 0; i < x.num_agents(); ++i) {
    for (std::size_t j = 0; j < x.dim(); ++j) {
      if (j > 0) out << ',';
      out << format_double(x.block(i)(static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing state file '" + path + "'");
}

inline StackedState read_state_file(const std::string& path, std::size_t m, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open state file '" + path + "'");
  std::vector<double> values;
  std::string line;
  std::size_t rows = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::size_t count = 0;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ValidationError("state file '" + path + "' line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
      ++count;
    }
    if (count == 0) continue;
    if (count != n) {
      throw ValidationError("state file '" + path + "' line " + std::to_string(lineno) + ": expected " +
                            std::to_string(n) + " values, got " + std::to_string(count));
    }
    ++rows;
  }
  if (rows != m) {
    throw ValidationError("state file '" + path + "': expected " + std::to_string(m) + " agent rows, got " +
                          std::to_string(rows));
  }
  return StackedState(m, n, Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
}

// ---------------------------------------------------------------------------
// Reports

inline std::string bound_table(const std::vector<BoundReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(46) << "quantity" << std::right << std::setw(15) << "measured" << std::setw(15)
     << "bound" << std::setw(15) << "slack" << "  ok\n";
  os << std::scientific << std::setprecision(6);
  for (const auto& r : reports) {
    os << std::left << std::setw(46) << r.quantity << std::right << std::setw(15) << r.measured;
    if (r.available) {
      os << std::setw(15) << r.bound << std::setw(15) << r.slack << "  " << (r.satisfied ? "yes" : "NO");
    } else {
      os << std::setw(15) << "n/a" << std::setw(15) << "n/a" << "  unavailable";
    }
    if (!r.note.empty()) os << "  [" << r.note << "]";
    os << '\n';
  }
  if (!reports.empty()) os << "residual ||grad Q_alpha|| at evaluation point: " << reports.front().residual_grad_norm << '\n';
  return os.str();
}

inline void write_bound_csv(std::ostream& out, const std::vector<BoundReport>& reports) {
  out << "quantity,measured,bound,slack,satisfied\n";
  for (const auto& r : reports) {
    out << r.quantity << ',' << format_double(r.measured) << ',' << format_double(r.bound) << ','
        << format_double(r.slack) << ',' << (r.available ? (r.satisfied ? "true" : "false") : "unavailable") << '\n';
  }
}

inline std::vector<BoundReport> lemma_bound_suite(const Problem& p, double alpha, const StackedState& x) {
  std::vector<BoundReport> all = lemma1_check(p, alpha, x);
  all.push_back(lemma2_check(p, alpha, x));
  all.push_back(lemma3_check(p, alpha, x));
  return all;
}

inline std::string noise_header(const ExperimentConfig& cfg) {
  const Problem& p = *cfg.problem;
  const NoiseSpec& nz = cfg.run.noise;
  std::ostringstream os;
  os << std::setprecision(10);
  os << "noise: " << to_string(nz.kind);
  if (nz.kind == NoiseKind::Sphere) os << " radius=" << nz.scale;
  if (nz.kind == NoiseKind::Gaussian) os << " std=" << nz.scale;
  os << " coordinate_variance=" << nz.coordinate_variance(p.dim());
  if (nz.epsilon) {
    const double budget = sigma_max_sq(*nz.epsilon, p.num_agents(), p.dim(), p.mixing().spectral().lambda_min);
    os << " epsilon=" << *nz.epsilon << " sigma_max_sq=" << budget << " safety_factor=" << nz.safety_factor
       << " active_budget=" << nz.safety_factor * budget;
  }
  return os.str();
}

inline std::vector<VariantEscapeStats> escape_statistics(const ExperimentConfig& cfg,
                                                         const std::vector<RunSummary>& runs) {
  std::vector<VariantEscapeStats> stats;
  for (Variant v : cfg.variants) {
    if (std::any_of(stats.begin(), stats.end(), [v](const auto& s) { return s.variant == v; })) continue;
    VariantEscapeStats s;
    s.variant = v;
    std::vector<double> escapes;
    for (const auto& r : runs) {
      if (r.variant != v) continue;
      ++s.runs;
      if (r.escape_iter) escapes.push_back(static_cast<double>(*r.escape_iter));
    }
    s.escaped = escapes.size();
    if (!escapes.empty()) s.median_escape = median(escapes);
    stats.push_back(s);
  }
  return stats;
}

inline std::string render_report(const ExperimentConfig& cfg, const ExperimentSummary& summary) {
  const Problem& p = *cfg.problem;
  const auto& sp = p.mixing().spectral();
  std::ostringstream os;
  os << std::setprecision(10);
  os << "experiment: " << cfg.name << "  (source " << cfg.source << ")\n";
  os << "agents=" << p.num_agents() << " dim=" << p.dim() << " alpha=" << cfg.run.alpha
     << " max_iterations=" << cfg.run.max_iterations << " record_every=" << cfg.run.effective_record_every() << '\n';
  os << "mixing: lambda_max=" << sp.lambda_max << " lambda_2=" << sp.lambda_2 << " lambda_min=" << sp.lambda_min << '\n';
  os << noise_header(cfg) << '\n';
  os << "trajectory schema: " << kTrajectorySchema << "\n\n";

  if (cfg.escape) {
    os << "escape from ball: center=(";
    for (Eigen::Index j = 0; j < cfg.escape->center.size(); ++j) os << (j ? ", " : "") << cfg.escape->center(j);
    os << ") radius=" << cfg.escape->radius << '\n';
    for (const auto& s : summary.escape_stats) {
      os << "  " << std::left << std::setw(8) << to_string(s.variant) << std::right << " runs=" << s.runs
         << " escaped=" << s.escaped << " median_escape=";
      if (s.median_escape) os << *s.median_escape; else os << "none";
      os << '\n';
    }
    const auto find = [&](Variant v) -> const VariantEscapeStats* {
      for (const auto& s : summary.escape_stats)
        if (s.variant == v) return &s;
      return nullptr;
    };
    const auto* dgd = find(Variant::DGD);
    const auto* ndgd = find(Variant::NDGD);
    if (dgd && ndgd && dgd->median_escape) {
      std::size_t earlier = 0;
      for (const auto& r : summary.runs) {
        if (r.variant == Variant::NDGD && r.escape_iter && static_cast<double>(*r.escape_iter) < *dgd->median_escape) ++earlier;
      }
      os << "  NDGD runs escaping before DGD: " << earlier << " of " << ndgd->runs << '\n';
      if (ndgd->median_escape) {
        os << "  median NDGD escape " << (*ndgd->median_escape < *dgd->median_escape ? "<" : ">=")
           << " DGD escape\n";
      }
    }
    os << '\n';
  }

  os << "runs:\n";
  for (const auto& r : summary.runs) {
    os << "  " << std::left << std::setw(8) << to_string(r.variant) << std::right << " seed=" << r.seed
       << " iterations=" << r.iterations_run << " stop=" << to_string(r.stop_reason)
       << " consensus_err=" << r.final_consensus_err;
    if (r.escape_iter) os << " escape=" << *r.escape_iter;
    os << '\n';
  }
  if (summary.audit.enabled) {
    os << "\naudit: reads=" << summary.audit.reads
       << " out_of_neighborhood_reads=" << summary.audit.out_of_neighborhood_reads
       << " equivalence_checks=" << summary.audit.equivalence_checks
       << " max_equivalence_error=" << summary.audit.max_equivalence_error << '\n';
  }
  if (!summary.bounds.empty()) {
    os << "\nconsensus / first-order / second-order bounds at the final DGD iterate:\n" << bound_table(summary.bounds);
  }
  if (cfg.diagnostics.zeta) {
    try {
      const auto caps = computable_alpha_caps(p, *cfg.diagnostics.zeta);
      os << "\nstep-size caps (zeta=" << *cfg.diagnostics.zeta << "): (sqrt2-1)/L_F^g=" << caps.cap_sqrt2
         << " lambda_min/(L_F^g max(1,log(1/zeta)))=" << caps.cap_spectral
         << "  (the remaining cap term has no closed form)\n";
    } catch (const ValidationError& e) {
      os << "\nstep-size caps: " << e.what() << '\n';
    }
  }
  os << "\nnote: the one-step descent bound -(lambda_min(W)/2) alpha m n sigma^2 is compared as displayed;"
        " its derivation closes only for sigma^2 <= lambda_min(W) eps^2 / (2 m n).\n";
  return os.str();
}

inline void write_summary_csv(std::ostream& out, const ExperimentConfig& cfg, const std::vector<RunSummary>& runs) {
  const std::size_t m = cfg.problem->num_agents();
  out << "# " << kSummarySchema << '\n';
  out << "variant,seed,escape_iter";
  for (std::size_t i = 0; i < m; ++i) out << ",final_dist_agent_" << (i + 1);
  out << ",final_consensus_err,iterations_run,stop_reason\n";
  for (const auto& r : runs) {
    out << to_string(r.variant) << ',' << r.seed << ',';
    if (r.escape_iter) out << *r.escape_iter;
    for (std::size_t i = 0; i < m; ++i) {
      out << ',' << (i < r.final_dist_to_ref.size() ? format_double(r.final_dist_to_ref[i]) : std::string("nan"));
    }
    out << ',' << format_double(r.final_consensus_err) << ',' << r.iterations_run << ',' << to_string(r.stop_reason)
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Orchestration

inline std::string run_file_stem(Variant v, std::uint64_t seed) {
  return std::string(to_string(v)) + "_seed" + std::to_string(seed);
}

inline RunSummary execute_run(const ExperimentConfig& cfg, Variant variant, std::uint64_t seed, bool audit,
                              bool write_files) {
  const Problem& p = *cfg.problem;
  RunConfig rc = cfg.run;
  rc.master_seed = seed;
  rc.audit = audit;
  rc.record_blocks = cfg.wide_columns;
  const Trajectory traj = run(p, rc, variant);

  RunSummary s;
  s.variant = variant;
  s.seed = seed;
  s.iterations_run = traj.iterations_run;
  s.stop_reason = traj.stop_reason;
  s.audit = traj.audit;
  s.final_state = traj.final_state;
  s.final_consensus_err = consensus_error(traj.final_state);
  if (cfg.escape) s.escape_iter = escape_iteration(traj, cfg.escape->center, cfg.escape->radius);
  if (!rc.references.empty()) {
    for (std::size_t i = 0; i < p.num_agents(); ++i) {
      s.final_dist_to_ref.push_back(dist_to_reference(Vector(traj.final_state.block(i)), rc.references).distance);
    }
  }
  if (write_files) {
    const std::filesystem::path dir(cfg.output_dir);
    const std::string stem = run_file_stem(variant, seed);
    s.trajectory_path = (dir / ("trajectory_" + stem + ".csv")).string();
    std::ofstream out(s.trajectory_path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + s.trajectory_path + "'");
    write_trajectory_csv(out, traj, p.num_agents(), p.dim(), cfg.wide_columns);
    if (!out) throw IoError("failed writing '" + s.trajectory_path + "'");
    write_state_file((dir / ("final_" + stem + ".state")).string(), traj.final_state);
  }
  return s;
}

// Runs every (variant, seed) pair, up to cfg.workers at a time. Results are
// independent of scheduling: each run owns its noise streams and output files,
// and the shared summary is written after all runs have finished.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& opts = {}) {
  if (!cfg.problem) throw ValidationError("run_experiment: configuration has no problem");
  if (cfg.variants.empty()) throw ValidationError("run_experiment: no variants");
  if (cfg.seeds.empty()) throw ValidationError("run_experiment: no seeds");

  if (opts.write_files) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg.output_dir + "': " + ec.message());
  }

  struct Job {
    Variant variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Variant v : cfg.variants)
    for (std::uint64_t s : cfg.seeds) jobs.push_back({v, s});

  std::vector<std::optional<RunSummary>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        results[k] = execute_run(cfg, jobs[k].variant, jobs[k].seed, opts.audit, opts.write_files);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t nthreads = std::max<std::size_t>(1, std::min(cfg.workers, jobs.size()));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentSummary summary;
  summary.audit.enabled = opts.audit;
  for (auto& r : results) {
    summary.audit.merge(r->audit);
    summary.runs.push_back(std::move(*r));
  }
  summary.escape_stats = escape_statistics(cfg, summary.runs);

  if (cfg.diagnostics.lemma_bounds) {
    const auto it = std::find_if(summary.runs.begin(), summary.runs.end(),
                                 [](const RunSummary& r) { return r.variant == Variant::DGD; });
    const RunSummary& basis = it != summary.runs.end() ? *it : summary.runs.front();
    summary.bounds = lemma_bound_suite(*cfg.problem, cfg.run.alpha, basis.final_state);
  }
  summary.report = render_report(cfg, summary);

  if (opts.write_files) {
    const std::filesystem::path dir(cfg.output_dir);
    {
      std::ofstream out(dir / "summary.csv", std::ios::binary);
      if (!out) throw IoError("cannot write '" + (dir / "summary.csv").string() + "'");
      write_summary_csv(out, cfg, summary.runs);
    }
    {
      std::ofstream out(dir / "report.txt", std::ios::binary);
      if (!out) throw IoError("cannot write '" + (dir / "report.txt").string() + "'");
      out << summary.report;
    }
    if (!summary.bounds.empty()) {
      std::ofstream out(dir / "bounds.csv", std::ios::binary);
      if (!out) throw IoError("cannot write '" + (dir / "bounds.csv").string() + "'");
      write_bound_csv(out, summary.bounds);
    }
  }
  return summary;
}

}  // namespace ndgd
