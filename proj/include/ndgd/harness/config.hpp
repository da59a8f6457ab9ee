#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "ndgd/diagnostics.hpp"
#include "ndgd/dynamics.hpp"
#include "ndgd/error.hpp"
#include "ndgd/harness/builtin.hpp"
#include "ndgd/harness/generate.hpp"
#include "ndgd/mixing.hpp"
#include "ndgd/noise.hpp"
#include "ndgd/objective.hpp"

namespace ndgd {

struct EscapeSpec {
  Vector center;
  double radius = 0.1;
};

struct DiagnosticsSpec {
  bool lemma_bounds = false;
  std::optional<double> lipschitz_box;
  std::optional<double> zeta;
  std::optional<RegularityParams> regularity;
};

struct ExperimentConfig {
  std::string name;
  std::string source;  // file path or builtin name
  std::shared_ptr<const Problem> problem;
  RunConfig run;  // master_seed is set per run
  std::vector<Variant> variants;
  std::vector<std::uint64_t> seeds;
  std::optional<EscapeSpec> escape;
  std::string output_dir = "out";
  bool wide_columns = false;
  DiagnosticsSpec diagnostics;
  std::size_t workers = 1;
};

inline constexpr const char* kOutputDirEnv = "NDGD_OUTPUT_DIR";
inline constexpr const char* kBuiltinPrefix = "builtin:";

namespace detail {

inline std::string where(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  if (mark.is_null()) return "";
  return " (line " + std::to_string(mark.line + 1) + ", column " + std::to_string(mark.column + 1) + ")";
}

[[noreturn]] inline void field_error(const std::string& field, const std::string& msg, const YAML::Node& node) {
  throw ValidationError("config: " + field + ": " + msg + where(node));
}

template <class T>
T scalar(const YAML::Node& node, const std::string& field) {
  if (!node || !node.IsScalar()) field_error(field, "expected a scalar", node);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    field_error(field, "could not convert '" + node.Scalar() + "'", node);
  }
}

inline Vector vector_of(const YAML::Node& node, const std::string& field) {
  if (!node || !node.IsSequence()) field_error(field, "expected a list of numbers", node);
  Vector v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = scalar<double>(node[i], field + "[" + std::to_string(i + 1) + "]");
  }
  return v;
}

inline std::optional<double> optional_double(const YAML::Node& parent, const char* key, const std::string& field) {
  const YAML::Node n = parent[key];
  if (!n) return std::nullopt;
  return scalar<double>(n, field);
}

inline Polynomial parse_polynomial(const YAML::Node& node, std::size_t dim, const std::string& field) {
  const YAML::Node terms = node["terms"];
  if (!terms || !terms.IsSequence()) field_error(field + ".terms", "expected a list of monomials", node);
  std::vector<Monomial> out;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const std::string tf = field + ".terms[" + std::to_string(t + 1) + "]";
    const YAML::Node term = terms[t];
    Monomial mono;
    const YAML::Node exps = term["exponents"];
    if (!exps || !exps.IsSequence()) field_error(tf + ".exponents", "expected a list of integers", term);
    for (std::size_t k = 0; k < exps.size(); ++k) mono.exponents.push_back(scalar<int>(exps[k], tf + ".exponents"));
    if (mono.exponents.size() != dim) {
      field_error(tf + ".exponents", "expected " + std::to_string(dim) + " exponents", exps);
    }
    mono.coefficient = scalar<double>(term["coefficient"], tf + ".coefficient");
    out.push_back(std::move(mono));
  }
  try {
    return Polynomial(dim, std::move(out));
  } catch (const ValidationError& e) {
    field_error(field, e.what(), node);
  }
}

inline std::vector<std::vector<double>> rows_of(const YAML::Node& node, const std::string& field) {
  if (!node || !node.IsSequence()) field_error(field, "expected a list of rows", node);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const Vector r = vector_of(node[i], field + " row " + std::to_string(i + 1));
    rows.emplace_back(r.data(), r.data() + r.size());
  }
  return rows;
}

inline NetworkGraph parse_graph(const YAML::Node& node) {
  const auto m = scalar<std::size_t>(node["agents"], "graph.agents");
  std::vector<Edge> edges;
  const YAML::Node e = node["edges"];
  if (e) {
    if (!e.IsSequence()) field_error("graph.edges", "expected a list of [i, j] pairs", e);
    for (std::size_t k = 0; k < e.size(); ++k) {
      const std::string f = "graph.edges[" + std::to_string(k + 1) + "]";
      if (!e[k].IsSequence() || e[k].size() != 2) field_error(f, "expected an [i, j] pair", e[k]);
      const auto a = scalar<long long>(e[k][0], f);
      const auto b = scalar<long long>(e[k][1], f);
      if (a < 1 || b < 1) field_error(f, "agent indices are 1-based", e[k]);
      edges.emplace_back(static_cast<AgentIndex>(a - 1), static_cast<AgentIndex>(b - 1));
    }
  }
  try {
    return NetworkGraph(m, edges);
  } catch (const ValidationError& err) {
    field_error("graph", err.what(), node);
  }
}

inline NoiseSpec parse_noise(const YAML::Node& node, std::size_t m, std::size_t n, double lambda_min) {
  NoiseSpec spec;
  const auto kind = scalar<std::string>(node["kind"], "noise.kind");
  if (kind == "none") {
    spec.kind = NoiseKind::None;
  } else if (kind == "sphere") {
    spec.kind = NoiseKind::Sphere;
  } else if (kind == "gaussian") {
    spec.kind = NoiseKind::Gaussian;
  } else {
    field_error("noise.kind", "expected none, sphere or gaussian", node["kind"]);
  }
  spec.epsilon = optional_double(node, "epsilon", "noise.epsilon");
  if (auto s = optional_double(node, "safety_factor", "noise.safety_factor")) spec.safety_factor = *s;
  if (!(spec.safety_factor > 0.0 && spec.safety_factor <= 1.0)) {
    field_error("noise.safety_factor", "must lie in (0, 1]", node["safety_factor"]);
  }
  if (spec.epsilon && !(*spec.epsilon > 0.0)) field_error("noise.epsilon", "must be positive", node["epsilon"]);
  const char* scale_key = spec.kind == NoiseKind::Gaussian ? "std" : "radius";
  if (auto s = optional_double(node, scale_key, std::string("noise.") + scale_key)) {
    spec.scale = *s;
  } else if (spec.kind != NoiseKind::None) {
    if (!spec.epsilon) field_error(std::string("noise.") + scale_key, "required when epsilon is not given", node);
    // at the (scaled) budget
    const double r = sphere_radius_for(*spec.epsilon, m, n, lambda_min, spec.safety_factor);
    spec.scale = spec.kind == NoiseKind::Sphere ? r : r / std::sqrt(static_cast<double>(n));
  }
  try {
    validate_noise(spec, m, n, lambda_min);
  } catch (const ValidationError& e) {
    field_error("noise", e.what(), node);
  }
  return spec;
}

inline std::vector<std::uint64_t> parse_seeds(const YAML::Node& node) {
  std::vector<std::uint64_t> seeds;
  if (!node) return {1};
  if (node.IsSequence()) {
    for (std::size_t i = 0; i < node.size(); ++i) seeds.push_back(scalar<std::uint64_t>(node[i], "seeds"));
  } else if (node.IsMap()) {
    const auto count = scalar<std::size_t>(node["count"], "seeds.count");
    const auto first = node["first"] ? scalar<std::uint64_t>(node["first"], "seeds.first") : 1;
    for (std::size_t i = 0; i < count; ++i) seeds.push_back(first + i);
  } else {
    seeds.push_back(scalar<std::uint64_t>(node, "seeds"));
  }
  if (seeds.empty()) field_error("seeds", "at least one seed is required", node);
  return seeds;
}

}  // namespace detail

// Parses and validates an experiment description. Every cross-reference is
// resolved here; errors name the offending field and source position.
inline ExperimentConfig parse_config(const YAML::Node& root, const std::string& source) {
  using namespace detail;
  if (!root || !root.IsMap()) throw ValidationError("config: top level must be a mapping");
  ExperimentConfig cfg;
  cfg.source = source;
  cfg.name = root["name"] ? scalar<std::string>(root["name"], "name") : std::string("experiment");

  // problem
  const YAML::Node pn = root["problem"];
  if (!pn || !pn.IsMap()) field_error("problem", "required mapping", root);
  std::vector<Polynomial> polys;
  std::vector<std::optional<double>> lg, lh;
  std::string builtin_name;
  if (pn["builtin"]) {
    builtin_name = scalar<std::string>(pn["builtin"], "problem.builtin");
    auto found = builtin::polynomials_for(builtin_name);
    if (!found) field_error("problem.builtin", "unknown builtin '" + builtin_name + "'", pn["builtin"]);
    polys = std::move(*found);
    lg.assign(polys.size(), std::nullopt);
    lh.assign(polys.size(), std::nullopt);
  } else {
    const auto dim = scalar<std::size_t>(pn["dim"], "problem.dim");
    if (dim == 0) field_error("problem.dim", "must be positive", pn["dim"]);
    const YAML::Node objs = pn["objectives"];
    if (!objs || !objs.IsSequence() || objs.size() == 0) field_error("problem.objectives", "expected a nonempty list", pn);
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const std::string f = "problem.objectives[" + std::to_string(i + 1) + "]";
      polys.push_back(parse_polynomial(objs[i], dim, f));
      lg.push_back(optional_double(objs[i], "lipschitz_grad", f + ".lipschitz_grad"));
      lh.push_back(optional_double(objs[i], "lipschitz_hess", f + ".lipschitz_hess"));
    }
  }
  const std::size_t m = polys.size();
  const std::size_t n = polys.front().dim();

  // graph and mixing
  NetworkGraph graph;
  if (root["graph"]) {
    graph = parse_graph(root["graph"]);
  } else if (!builtin_name.empty()) {
    graph = builtin::paper_sec5_graph();
  } else {
    field_error("graph", "required unless the problem is builtin", root);
  }
  if (graph.num_agents() != m) {
    field_error("graph.agents", std::to_string(graph.num_agents()) + " agents but " + std::to_string(m) + " objectives",
                root["graph"]);
  }
  Matrix weights;
  double tol = kDefaultMixingTolerance;
  const YAML::Node mn = root["mixing"];
  if (mn) {
    if (mn["tolerance"]) tol = scalar<double>(mn["tolerance"], "mixing.tolerance");
    if (mn["matrix"]) {
      const auto rows = rows_of(mn["matrix"], "mixing.matrix");
      weights.resize(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) field_error("mixing.matrix", "ragged rows", mn["matrix"]);
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
          weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
      }
    } else if (mn["lazy_metropolis"]) {
      try {
        weights = generate_lazy_metropolis(graph, scalar<double>(mn["lazy_metropolis"], "mixing.lazy_metropolis"));
      } catch (const ValidationError& e) {
        field_error("mixing.lazy_metropolis", e.what(), mn["lazy_metropolis"]);
      }
    } else {
      field_error("mixing", "expected 'matrix' or 'lazy_metropolis'", mn);
    }
  } else if (!builtin_name.empty()) {
    weights = builtin::paper_sec5_weights();
  } else {
    field_error("mixing", "required unless the problem is builtin", root);
  }
  MixingMatrix mixing = [&] {
    try {
      return validate_mixing(weights, graph, tol);
    } catch (const MixingError& e) {
      field_error("mixing", e.what(), mn ? mn : root);
    }
  }();

  std::vector<LocalObjective> objectives;
  for (std::size_t i = 0; i < m; ++i) objectives.push_back(LocalObjective::from_polynomial(polys[i], lg[i], lh[i]));
  auto problem = std::make_shared<Problem>(std::move(objectives), std::move(mixing));

  // diagnostics (before the problem is frozen: may assign box constants)
  const YAML::Node dn = root["diagnostics"];
  if (dn) {
    if (dn["lemma_bounds"]) cfg.diagnostics.lemma_bounds = scalar<bool>(dn["lemma_bounds"], "diagnostics.lemma_bounds");
    cfg.diagnostics.lipschitz_box = optional_double(dn, "lipschitz_box", "diagnostics.lipschitz_box");
    cfg.diagnostics.zeta = optional_double(dn, "zeta", "diagnostics.zeta");
    if (cfg.diagnostics.zeta && !(*cfg.diagnostics.zeta > 0.0 && *cfg.diagnostics.zeta < 1.0)) {
      field_error("diagnostics.zeta", "must lie in (0, 1)", dn["zeta"]);
    }
  }
  if (pn["lipschitz_box"]) cfg.diagnostics.lipschitz_box = scalar<double>(pn["lipschitz_box"], "problem.lipschitz_box");
  if (cfg.diagnostics.lipschitz_box) {
    if (!(*cfg.diagnostics.lipschitz_box > 0.0)) field_error("lipschitz_box", "must be positive", pn);
    assign_box_lipschitz(*problem, *cfg.diagnostics.lipschitz_box);
  }
  cfg.problem = problem;

  // run
  const YAML::Node rn = root["run"];
  if (!rn || !rn.IsMap()) field_error("run", "required mapping", root);
  cfg.run.alpha = scalar<double>(rn["alpha"], "run.alpha");
  if (!(cfg.run.alpha > 0.0)) field_error("run.alpha", "must be positive", rn["alpha"]);
  const auto k = scalar<long long>(rn["max_iterations"], "run.max_iterations");
  if (k < 1) field_error("run.max_iterations", "must be at least 1", rn["max_iterations"]);
  cfg.run.max_iterations = static_cast<std::size_t>(k);
  if (rn["record_every"]) {
    const auto re = scalar<long long>(rn["record_every"], "run.record_every");
    if (re < 1) field_error("run.record_every", "must be at least 1", rn["record_every"]);
    cfg.run.record_every = static_cast<std::size_t>(re);
  }
  const YAML::Node init = rn["init"];
  if (!init || !init.IsSequence() || init.size() == 0) field_error("run.init", "expected a point or a list of points", rn);
  if (init[0].IsSequence()) {
    if (init.size() != m) field_error("run.init", "expected one point per agent", init);
    StackedState s(m, n);
    for (std::size_t i = 0; i < m; ++i) {
      const Vector v = vector_of(init[i], "run.init[" + std::to_string(i + 1) + "]");
      if (static_cast<std::size_t>(v.size()) != n) field_error("run.init", "point has wrong dimension", init[i]);
      s.block(i) = v;
    }
    cfg.run.init = s;
  } else {
    const Vector v = vector_of(init, "run.init");
    if (static_cast<std::size_t>(v.size()) != n) field_error("run.init", "point has wrong dimension", init);
    cfg.run.init = StackedState::broadcast(m, v);
  }
  if (const YAML::Node sn = rn["stop"]) {
    StopRule rule;
    rule.grad_norm_below = optional_double(sn, "grad_norm_below", "run.stop.grad_norm_below");
    const auto ce = optional_double(sn, "consensus_below", "run.stop.consensus_below");
    const auto fg = optional_double(sn, "f_grad_below", "run.stop.f_grad_below");
    if (ce.has_value() != fg.has_value()) {
      field_error("run.stop", "consensus_below and f_grad_below must be given together", sn);
    }
    if (ce) rule.consensus_and_f_grad = std::pair{*ce, *fg};
    if (!rule.grad_norm_below && !rule.consensus_and_f_grad) field_error("run.stop", "no criterion set", sn);
    cfg.run.stop = rule;
  }

  // variants, noise, seeds
  const YAML::Node vn = root["variants"];
  if (!vn || !vn.IsSequence() || vn.size() == 0) field_error("variants", "expected a nonempty list", root);
  for (std::size_t i = 0; i < vn.size(); ++i) {
    const auto name = scalar<std::string>(vn[i], "variants");
    const auto v = parse_variant(name);
    if (!v) field_error("variants", "unknown variant '" + name + "' (DGD, NDGD, GD_on_Q)", vn[i]);
    cfg.variants.push_back(*v);
  }
  const double lambda_min = problem->mixing().spectral().lambda_min;
  if (root["noise"]) {
    cfg.run.noise = parse_noise(root["noise"], m, n, lambda_min);
  } else if (std::find(cfg.variants.begin(), cfg.variants.end(), Variant::NDGD) != cfg.variants.end()) {
    field_error("noise", "the NDGD variant requires a noise specification", root);
  }
  cfg.seeds = parse_seeds(root["seeds"]);

  if (const YAML::Node refs = root["references"]) {
    if (!refs.IsSequence()) field_error("references", "expected a list of points", refs);
    for (std::size_t i = 0; i < refs.size(); ++i) {
      const Vector v = vector_of(refs[i], "references[" + std::to_string(i + 1) + "]");
      if (static_cast<std::size_t>(v.size()) != n) field_error("references", "point has wrong dimension", refs[i]);
      cfg.run.references.push_back(v);
    }
  }
  if (const YAML::Node en = root["escape"]) {
    EscapeSpec esc;
    esc.center = en["center"] ? vector_of(en["center"], "escape.center") : consensus_average(cfg.run.init);
    if (static_cast<std::size_t>(esc.center.size()) != n) field_error("escape.center", "wrong dimension", en);
    if (en["radius"]) esc.radius = scalar<double>(en["radius"], "escape.radius");
    if (!(esc.radius > 0.0)) field_error("escape.radius", "must be positive", en);
    cfg.escape = esc;
  }
  if (const YAML::Node on = root["output"]) {
    if (on["dir"]) cfg.output_dir = scalar<std::string>(on["dir"], "output.dir");
    if (on["wide_columns"]) cfg.wide_columns = scalar<bool>(on["wide_columns"], "output.wide_columns");
  }
  if (root["workers"]) {
    cfg.workers = scalar<std::size_t>(root["workers"], "workers");
    if (cfg.workers == 0) field_error("workers", "must be at least 1", root["workers"]);
  }
  if (dn && dn["regularity"]) {
    const YAML::Node r = dn["regularity"];
    RegularityParams params;
    params.epsilon = scalar<double>(r["epsilon"], "diagnostics.regularity.epsilon");
    params.gamma = scalar<double>(r["gamma"], "diagnostics.regularity.gamma");
    params.mu = scalar<double>(r["mu"], "diagnostics.regularity.mu");
    params.delta = scalar<double>(r["delta"], "diagnostics.regularity.delta");
    params.alpha = cfg.run.alpha;
    try {
      validate_regularity(*problem, params);
    } catch (const ValidationError& e) {
      field_error("diagnostics.regularity", e.what(), r);
    }
    cfg.diagnostics.regularity = params;
  }

  cfg.run.record_blocks = cfg.wide_columns;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') cfg.output_dir = env;
  try {
    validate_run_config(*problem, cfg.run, Variant::DGD);
  } catch (const ValidationError& e) {
    field_error("run", e.what(), rn);
  }
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<string>") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError("config: parse error in " + source + " at line " + std::to_string(e.mark.line + 1) +
                          ", column " + std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  return parse_config(root, source);
}

// Full experiment description of the five-agent saddle example.
inline std::string builtin_config_text(const std::string& name) {
  if (name != builtin::kPaperSec5) throw ValidationError("config: unknown builtin '" + name + "'");
  return R"(name: paper-sec5
problem:
  builtin: paper-sec5
run:
  alpha: 0.005
  max_iterations: 20000
  init: [1.0e-6, 1.0e-6]
noise:
  kind: sphere
  epsilon: 1.0
  safety_factor: 0.5
variants: [DGD, NDGD]
seeds: {count: 20, first: 1}
references:
  - [0.70710678118654757, 0.0]
  - [-0.70710678118654757, 0.0]
escape:
  center: [0.0, 0.0]
  radius: 0.1
output:
  dir: out/paper-sec5
  wide_columns: false
)";
}

// Accepts a file path or "builtin:<name>".
inline ExperimentConfig load_config(const std::string& path) {
  if (path.rfind(kBuiltinPrefix, 0) == 0) {
    const std::string name = path.substr(std::string(kBuiltinPrefix).size());
    return parse_config_text(builtin_config_text(name), path);
  }
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace ndgd
