// Command-line front end for the distributed / noisy distributed gradient
// descent simulator.
//
//   ndgd run <config>                 run every (variant, seed) pair
//   ndgd validate <config>            check the configuration and report
//   ndgd spectra <config>             mixing-matrix spectrum and derived constants
//   ndgd diagnose <config> --at FILE  bound checks at a stored state
//   ndgd escape-compare <config>      DGD vs NDGD saddle-escape comparison
//
// <config> is a YAML file or builtin:<name> (e.g. builtin:paper-sec5).

#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ndgd/harness/config.hpp"
#include "ndgd/harness/experiment.hpp"
#include "ndgd/ndgd.hpp"

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  bool audit = false;
};

ndgd::ExperimentConfig load(const std::string& path, const GlobalOptions& g) {
  ndgd::ExperimentConfig cfg = ndgd::load_config(path);
  if (g.seed) cfg.seeds = {*g.seed};
  if (!g.output_dir.empty()) cfg.output_dir = g.output_dir;
  return cfg;
}

int cmd_run(const std::string& path, const GlobalOptions& g) {
  const auto cfg = load(path, g);
  ndgd::ExperimentOptions opts;
  opts.audit = g.audit;
  const auto summary = ndgd::run_experiment(cfg, opts);
  std::cout << summary.report;
  std::cout << "wrote " << summary.runs.size() << " trajectories, summary.csv and report.txt to " << cfg.output_dir
            << '\n';
  if (g.audit && summary.audit.out_of_neighborhood_reads > 0) {
    std::cerr << "audit: " << summary.audit.out_of_neighborhood_reads << " out-of-neighborhood reads\n";
    return ndgd::exit_code_for(ndgd::ErrorCategory::Runtime);
  }
  return 0;
}

int cmd_validate(const std::string& path, const GlobalOptions& g) {
  const auto cfg = load(path, g);
  const auto& p = *cfg.problem;
  const auto& sp = p.mixing().spectral();
  std::cerr << std::setprecision(10);
  std::cerr << "graph: " << p.num_agents() << " agents, " << p.graph().edges().size() << " edges, connected\n";
  std::cerr << "mixing: symmetric, doubly stochastic, graph-consistent, strictly diagonally dominant (tol "
            << p.mixing().tolerance() << ")\n";
  std::cerr << "spectrum: lambda_max=" << sp.lambda_max << " lambda_2=" << sp.lambda_2 << " lambda_min=" << sp.lambda_min
            << '\n';
  for (std::size_t i = 0; i < p.num_agents(); ++i) {
    const auto& o = p.objective(i);
    const auto probe = ndgd::coercivity_probe(o, 10.0);
    std::cerr << "agent " << (i + 1) << ": gradient probe rel. error "
              << o.max_gradient_error(ndgd::LocalObjective::probe_points(o.dim()))
              << ", coercivity probe (radius 10) " << (probe.grows() ? "grows" : "does NOT grow")
              << " [reported only]";
    if (o.lipschitz_grad()) std::cerr << ", L_g=" << *o.lipschitz_grad();
    if (o.lipschitz_hess()) std::cerr << ", L_H=" << *o.lipschitz_hess();
    std::cerr << '\n';
  }
  std::cerr << ndgd::noise_header(cfg) << '\n';
  std::cerr << "variants:";
  for (auto v : cfg.variants) std::cerr << ' ' << ndgd::to_string(v);
  std::cerr << "; seeds: " << cfg.seeds.size() << "; output: " << cfg.output_dir << '\n';
  std::cout << "ok\n";
  return 0;
}

int cmd_spectra(const std::string& path, const GlobalOptions& g) {
  const auto cfg = load(path, g);
  const auto& p = *cfg.problem;
  const auto& sp = p.mixing().spectral();
  std::cout << std::setprecision(12);
  std::cout << "eigenvalues of W (ascending):";
  for (Eigen::Index k = 0; k < sp.eigenvalues.size(); ++k) std::cout << ' ' << sp.eigenvalues(k);
  std::cout << "\nlambda_max " << sp.lambda_max << "\nlambda_2 " << sp.lambda_2 << "\nlambda_min " << sp.lambda_min
            << "\nspectral_gap " << 1.0 - sp.lambda_2 << '\n';
  const auto lip = ndgd::lipschitz_aggregate(p, cfg.run.alpha);
  auto show = [](const char* name, const std::optional<double>& v) {
    std::cout << name << ' ';
    if (v) std::cout << *v; else std::cout << "unavailable";
    std::cout << '\n';
  };
  show("L_F_g", lip.F_grad);
  show("L_F_H", lip.F_hess);
  show("L_Q_g", lip.Q_grad);
  show("L_Q_H", lip.Q_hess);
  const auto init_class = ndgd::classify_q_point(p, cfg.run.alpha, cfg.run.init);
  std::cout << "Q_alpha at init: grad_norm " << init_class.grad_norm << " min_hess_eig " << init_class.min_hess_eig
            << " (" << ndgd::to_string(init_class.kind) << ")\n";
  return 0;
}

int cmd_diagnose(const std::string& path, const std::string& state_file, std::size_t descent_samples,
                 const GlobalOptions& g) {
  const auto cfg = load(path, g);
  const auto& p = *cfg.problem;
  const double alpha = cfg.run.alpha;
  const ndgd::StackedState x = ndgd::read_state_file(state_file, p.num_agents(), p.dim());
  std::cout << std::setprecision(10);

  const auto cls = ndgd::classify_q_point(p, alpha, x);
  std::cout << "Q_alpha: value " << ndgd::q_value(p, alpha, x) << " grad_norm " << cls.grad_norm << " min_hess_eig "
            << cls.min_hess_eig << " (" << ndgd::to_string(cls.kind) << ")\n";
  const ndgd::Vector mean = ndgd::consensus_average(x);
  const auto fcls = ndgd::classify_point(p, mean);
  std::cout << "f at consensus average: grad_norm " << fcls.grad_norm << " min_hess_eig " << fcls.min_hess_eig << " ("
            << ndgd::to_string(fcls.kind) << ")\n";
  if (!cfg.run.references.empty()) {
    const auto d = ndgd::dist_to_reference(mean, cfg.run.references);
    std::cout << "distance of average to nearest reference #" << (d.index + 1) << ": " << d.distance << '\n';
  }
  std::cout << '\n' << ndgd::bound_table(ndgd::lemma_bound_suite(p, alpha, x));

  if (cfg.diagnostics.zeta) {
    try {
      const auto caps = ndgd::computable_alpha_caps(p, *cfg.diagnostics.zeta);
      std::cout << "\nstep-size caps: " << caps.cap_sqrt2 << ", " << caps.cap_spectral << " (alpha=" << alpha << ")\n";
    } catch (const ndgd::ValidationError& e) {
      std::cout << "\nstep-size caps: " << e.what() << '\n';
    }
  }
  if (cfg.diagnostics.regularity) {
    const auto r = ndgd::region_membership(p, *cfg.diagnostics.regularity, x);
    std::cout << "\nregions: I1=" << r.in_I1 << " I2=" << r.in_I2 << " I3(partial)=" << r.in_I3_partial
              << " (||grad Q||=" << r.grad_norm << ", Lambda=" << r.min_hess_eig << ")\n";
  }
  if (descent_samples > 0 && cfg.run.noise.epsilon) {
    try {
      const auto est = ndgd::lemma5_descent_mc(p, alpha, x, cfg.run.noise, *cfg.run.noise.epsilon, descent_samples,
                                               cfg.seeds.front());
      std::cout << "\none-step descent: mean dQ " << est.mean_delta_q << " +- " << est.std_err << " (bound "
                << est.bound << ", noiseless dQ " << est.deterministic_delta_q << ")\n";
    } catch (const ndgd::ValidationError& e) {
      std::cout << "\none-step descent: " << e.what() << '\n';
    }
  }
  return 0;
}

int cmd_escape_compare(const std::string& path, const GlobalOptions& g) {
  auto cfg = load(path, g);
  if (!cfg.escape) throw ndgd::ValidationError("config: escape-compare needs an 'escape' section");
  cfg.variants = {ndgd::Variant::DGD, ndgd::Variant::NDGD};
  if (cfg.run.noise.kind == ndgd::NoiseKind::None) {
    throw ndgd::ValidationError("config: escape-compare needs a noise specification");
  }
  ndgd::ExperimentOptions opts;
  opts.audit = g.audit;
  const auto summary = ndgd::run_experiment(cfg, opts);
  std::cout << summary.report;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed gradient descent and noisy DGD simulator"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Run only this seed");
  app.add_option("--output-dir", g.output_dir, "Override output directory");
  app.add_flag("--audit", g.audit, "Log per-agent read sets and check update equivalence");

  std::string config;
  std::string state_file;
  std::size_t descent_samples = 0;

  auto* run = app.add_subcommand("run", "Run every (variant, seed) pair");
  run->add_option("config", config, "Config file or builtin:<name>")->required();
  auto* validate = app.add_subcommand("validate", "Validate a configuration");
  validate->add_option("config", config)->required();
  auto* spectra = app.add_subcommand("spectra", "Print the mixing spectrum");
  spectra->add_option("config", config)->required();
  auto* diagnose = app.add_subcommand("diagnose", "Evaluate bounds at a stored state");
  diagnose->add_option("config", config)->required();
  diagnose->add_option("--at", state_file, "State file (one agent per line)")->required();
  diagnose->add_option("--descent-samples", descent_samples, "Monte-Carlo samples for the one-step descent check");
  auto* escape = app.add_subcommand("escape-compare", "Compare DGD and NDGD escape iterations");
  escape->add_option("config", config)->required();
  for (auto* sub : {run, validate, spectra, diagnose, escape}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ndgd::exit_code_for(ndgd::ErrorCategory::Validation);
  }

  try {
    if (*run) return cmd_run(config, g);
    if (*validate) return cmd_validate(config, g);
    if (*spectra) return cmd_spectra(config, g);
    if (*diagnose) return cmd_diagnose(config, state_file, descent_samples, g);
    if (*escape) return cmd_escape_compare(config, g);
  } catch (const ndgd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ndgd::exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
