#include "hinfsearch/experiment.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "hinfsearch/errors.hpp"

namespace hinfsearch {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Dispatch table for one JSON object; unknown keys are errors.
using Setters = std::map<std::string, std::function<void(const json&)>>;

void apply(const json& j, const std::string& where, const Setters& setters) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw ParseError(where + ": unknown key '" + key + "'");
    }
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ParseError(where + "." + key + ": " + e.what());
    }
  }
}

template <class T>
std::function<void(const json&)> set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

Setters goldstein_setters(GoldsteinConfig& c) {
  return {{"mode",
           [&c](const json& v) {
             const auto s = v.get<std::string>();
             if (s == "constant") {
               c.mode = StepMode::constant;
             } else if (s == "diminishing") {
               c.mode = StepMode::diminishing;
             } else {
               throw ParseError("goldstein.mode: expected constant or diminishing");
             }
           }},
          {"c", set(c.c)},
          {"delta", set(c.delta)},
          {"delta0_hat", set(c.delta0_hat)},
          {"m", set(c.m)},
          {"max_iters", set(c.max_iters)},
          {"tol_F", set(c.tol_F)},
          {"max_guard_halvings", set(c.max_guard_halvings)},
          {"max_infeasible", set(c.max_infeasible)}};
}

Setters gs_setters(GsConfig& c) {
  return {{"delta0", set(c.delta0)},           {"eps0", set(c.eps0)},
          {"mu_delta", set(c.mu_delta)},       {"mu_eps", set(c.mu_eps)},
          {"m", set(c.m)},                     {"beta", set(c.beta)},
          {"theta", set(c.theta)},             {"max_iters", set(c.max_iters)},
          {"delta_opt", set(c.delta_opt)},     {"eps_opt", set(c.eps_opt)},
          {"max_line_search", set(c.max_line_search)},
          {"max_perturb", set(c.max_perturb)},
          {"max_infeasible", set(c.max_infeasible)},
          {"min_delta", set(c.min_delta)}};
}

Setters ns_setters(NsConfig& c) {
  return {{"delta0", set(c.delta0)},       {"eps0", set(c.eps0)},
          {"mu_delta", set(c.mu_delta)},   {"mu_eps", set(c.mu_eps)},
          {"m", set(c.m)},                 {"beta", set(c.beta)},
          {"t_floor", set(c.t_floor)},     {"kappa", set(c.kappa)},
          {"alpha0", set(c.alpha0)},       {"max_iters", set(c.max_iters)},
          {"delta_opt", set(c.delta_opt)}, {"eps_opt", set(c.eps_opt)},
          {"max_infeasible", set(c.max_infeasible)},
          {"min_delta", set(c.min_delta)}};
}

Setters ingd_setters(IngdConfig& c) {
  return {{"delta", set(c.delta)},
          {"eps", set(c.eps)},
          {"lipschitz", set(c.lipschitz)},
          {"max_iters", set(c.max_iters)},
          {"max_inner", set(c.max_inner)},
          {"anneal", set(c.anneal)},
          {"anneal_factor", set(c.anneal_factor)},
          {"min_delta", set(c.min_delta)}};
}

Setters estimator_setters(EstimatorConfig& c) {
  return {{"horizon", set(c.horizon)},
          {"power_iters", set(c.power_iters)},
          {"init_seed", set(c.init_seed)},
          {"rel_tol", set(c.rel_tol)}};
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double rho_of(const Plant& plant, const MatrixXd& K) {
  check_policy_shape(plant, K);
  return spectral_radius(plant.A() - plant.B() * K);
}

void require_stabilizing(const Plant& plant, const MatrixXd& K) {
  const double rho = rho_of(plant, K);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "policy not stabilizing: rho=" << rho;
    throw InstabilityError(os.str(), rho);
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::goldstein: return "goldstein";
    case Algorithm::gs: return "gs";
    case Algorithm::ns: return "ns";
    case Algorithm::ingd: return "ingd";
    case Algorithm::ns_modelfree: return "ns-modelfree";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "goldstein") return Algorithm::goldstein;
  if (name == "gs") return Algorithm::gs;
  if (name == "ns") return Algorithm::ns;
  if (name == "ingd") return Algorithm::ingd;
  if (name == "ns-modelfree" || name == "ns_modelfree") {
    return Algorithm::ns_modelfree;
  }
  throw ParseError("unknown algorithm '" + name +
                   "' (expected goldstein, gs, ns, ingd, ns-modelfree)");
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  Setters top = {
      {"problem", [&c](const json& v) { c.problem_path = v.get<std::string>(); }},
      {"generate",
       [&c](const json& v) {
         GeneratorSpec g;
         apply(v, "generate",
               {{"nx", set(g.nx)}, {"nu", set(g.nu)}, {"seed", set(g.seed)}});
         c.generator = g;
       }},
      {"algo",
       [&c](const json& v) { c.algo = algorithm_from_string(v.get<std::string>()); }},
      {"seed", set(c.seed)},
      {"out", set(c.out_dir)},
      {"J_star", [&c](const json& v) { c.J_star = v.get<double>(); }},
      {"target_rel_err",
       [&c](const json& v) { c.target_rel_err = v.get<double>(); }},
      {"gradient",
       [&c](const json& v) {
         const auto s = v.get<std::string>();
         if (s == "analytic") {
           c.gradient = GradientKind::analytic;
         } else if (s == "finite_difference") {
           c.gradient = GradientKind::finite_difference;
         } else {
           throw ParseError("gradient: expected analytic or finite_difference");
         }
       }},
      {"zero_time", set(c.zero_time)},
      {"parallel", set(c.parallel)},
      {"auto_sample_size", set(c.auto_sample_size)},
      {"goldstein",
       [&c](const json& v) { apply(v, "goldstein", goldstein_setters(c.goldstein)); }},
      {"gs", [&c](const json& v) { apply(v, "gs", gs_setters(c.gs)); }},
      {"ns", [&c](const json& v) { apply(v, "ns", ns_setters(c.ns)); }},
      {"ingd", [&c](const json& v) { apply(v, "ingd", ingd_setters(c.ingd)); }},
      {"estimator",
       [&c](const json& v) { apply(v, "estimator", estimator_setters(c.estimator)); }},
  };
  apply(j, "config", top);
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  if (c.problem_path) j["problem"] = *c.problem_path;
  if (c.generator) {
    j["generate"] = {{"nx", c.generator->nx},
                     {"nu", c.generator->nu},
                     {"seed", c.generator->seed}};
  }
  j["algo"] = to_string(c.algo);
  j["seed"] = c.seed;
  j["out"] = c.out_dir;
  if (c.J_star) j["J_star"] = *c.J_star;
  if (c.target_rel_err) j["target_rel_err"] = *c.target_rel_err;
  j["gradient"] = c.gradient == GradientKind::analytic ? "analytic"
                                                        : "finite_difference";
  j["zero_time"] = c.zero_time;
  j["parallel"] = c.parallel;
  j["auto_sample_size"] = c.auto_sample_size;
  const auto& g = c.goldstein;
  j["goldstein"] = {
      {"mode", g.mode == StepMode::constant ? "constant" : "diminishing"},
      {"c", g.c},
      {"delta", g.delta},
      {"delta0_hat", g.delta0_hat},
      {"m", g.m},
      {"max_iters", g.max_iters},
      {"tol_F", g.tol_F},
      {"max_guard_halvings", g.max_guard_halvings},
      {"max_infeasible", g.max_infeasible}};
  const auto& s = c.gs;
  j["gs"] = {{"delta0", s.delta0},       {"eps0", s.eps0},
             {"mu_delta", s.mu_delta},   {"mu_eps", s.mu_eps},
             {"m", s.m},                 {"beta", s.beta},
             {"theta", s.theta},         {"max_iters", s.max_iters},
             {"delta_opt", s.delta_opt}, {"eps_opt", s.eps_opt},
             {"max_line_search", s.max_line_search},
             {"max_perturb", s.max_perturb},
             {"max_infeasible", s.max_infeasible},
             {"min_delta", s.min_delta}};
  const auto& n = c.ns;
  j["ns"] = {{"delta0", n.delta0},       {"eps0", n.eps0},
             {"mu_delta", n.mu_delta},   {"mu_eps", n.mu_eps},
             {"m", n.m},                 {"beta", n.beta},
             {"t_floor", n.t_floor},     {"kappa", n.kappa},
             {"alpha0", n.alpha0},       {"max_iters", n.max_iters},
             {"delta_opt", n.delta_opt}, {"eps_opt", n.eps_opt},
             {"max_infeasible", n.max_infeasible},
             {"min_delta", n.min_delta}};
  const auto& i = c.ingd;
  j["ingd"] = {{"delta", i.delta},
               {"eps", i.eps},
               {"lipschitz", i.lipschitz},
               {"max_iters", i.max_iters},
               {"max_inner", i.max_inner},
               {"anneal", i.anneal},
               {"anneal_factor", i.anneal_factor},
               {"min_delta", i.min_delta}};
  const auto& e = c.estimator;
  j["estimator"] = {{"horizon", e.horizon},
                    {"power_iters", e.power_iters},
                    {"init_seed", e.init_seed},
                    {"rel_tol", e.rel_tol}};
  return j;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

ResolvedProblem resolve_problem(const ExperimentConfig& cfg) {
  if (cfg.problem_path.has_value() == cfg.generator.has_value()) {
    throw std::invalid_argument(
        "experiment needs exactly one problem source (file or generator)");
  }
  if (cfg.problem_path) {
    Problem p = load_problem(*cfg.problem_path);
    if (!p.K0) throw ParseError(*cfg.problem_path + ": field 'K0' is missing");
    return {p.plant, Policy{*p.K0}, cfg.J_star ? cfg.J_star : p.J_star};
  }
  const auto& g = *cfg.generator;
  GeneratedProblem gp = gen_random_problem(g.nx, g.nu, g.seed);
  return {gp.plant, gp.K0, cfg.J_star};
}

ExperimentOutcome run_solver(const ExperimentConfig& cfg) {
  ResolvedProblem prob = resolve_problem(cfg);
  ExperimentConfig rc = cfg;
  rc.J_star = prob.J_star;
  const int need = static_cast<int>(prob.K0.K.size()) + 1;
  if (rc.auto_sample_size) {
    rc.goldstein.m = std::max(rc.goldstein.m, need);
    rc.gs.m = std::max(rc.gs.m, need);
    rc.ns.m = std::max(rc.ns.m, need);
  }

  RunOptions run;
  run.seed = rc.seed;
  run.parallel = rc.parallel;
  if (rc.J_star && rc.target_rel_err) {
    run.j_target = *rc.J_star * (1.0 + *rc.target_rel_err);
  }

  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res = [&] {
    switch (rc.algo) {
      case Algorithm::goldstein:
        return solve_goldstein(prob.plant, prob.K0, rc.goldstein,
                               exact_oracles(prob.plant, rc.gradient), run);
      case Algorithm::gs:
        return solve_gs(prob.plant, prob.K0, rc.gs,
                        exact_oracles(prob.plant, rc.gradient), run);
      case Algorithm::ns:
        return solve_ns(prob.plant, prob.K0, rc.ns,
                        exact_oracles(prob.plant, rc.gradient).cost, run);
      case Algorithm::ingd:
        return solve_ingd(prob.plant, prob.K0, rc.ingd,
                          exact_oracles(prob.plant, rc.gradient), run);
      case Algorithm::ns_modelfree:
        return solve_ns_modelfree(prob.plant, prob.K0, rc.ns, rc.estimator,
                                  run);
    }
    throw std::logic_error("unhandled algorithm");
  }();
  const auto t1 = std::chrono::steady_clock::now();

  ExperimentOutcome out;
  out.resolved = rc;
  out.result = std::move(res);
  const auto& recs = out.result.trace.records;
  out.J_star = rc.J_star;
  out.final_J = recs.empty() ? NAN : recs.back().J;
  if (out.J_star) out.rel_err = (out.final_J - *out.J_star) / *out.J_star;
  out.iterations = recs.empty() ? 0 : static_cast<int>(recs.size()) - 1;
  out.oracle_calls = recs.empty() ? 0 : recs.back().oracle_calls;
  out.wall_s = std::chrono::duration<double>(t1 - t0).count();
  const auto st = out.result.trace.status;
  out.exit_code = st == TraceStatus::converged ||
                          st == TraceStatus::stationary_target
                      ? 0
                      : 1;
  return out;
}

json summary_to_json(const ExperimentOutcome& out) {
  json j;
  j["algo"] = to_string(out.resolved.algo);
  j["seed"] = out.resolved.seed;
  j["status"] = to_string(out.result.trace.status);
  j["final_J"] = out.final_J;
  if (out.J_star) j["J_star"] = *out.J_star;
  if (out.rel_err) j["rel_err"] = *out.rel_err;
  j["iterations"] = out.iterations;
  j["accepted_steps"] = out.result.trace.accepted_steps();
  j["oracle_calls"] = out.oracle_calls;
  j["wall_time_s"] = out.resolved.zero_time ? 0.0 : out.wall_s;
  j["K_final"] = matrix_to_json(out.result.policy.K);
  return j;
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  if (cfg.out_dir.empty()) throw std::invalid_argument("no output directory");
  ExperimentOutcome out = run_solver(cfg);
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);

  std::ostringstream trace;
  out.result.trace.write_csv(trace, cfg.zero_time);
  write_file(dir / "trace.csv", trace.str());
  write_file(dir / "summary.json", summary_to_json(out).dump(2) + "\n");
  write_file(dir / "config.json", config_to_json(out.resolved).dump(2) + "\n");
  if (out.J_star) {
    std::ostringstream rel;
    rel << "n,J,rel_err\n";
    for (const auto& r : out.result.trace.records) {
      rel << r.n << ',' << fmt(r.J) << ',' << fmt((r.J - *out.J_star) / *out.J_star)
          << '\n';
    }
    write_file(dir / "rel_err.csv", rel.str());
  }
  return out;
}

std::vector<BatchEntry> run_batch(const ExperimentConfig& base,
                                  std::uint64_t first_seed, int count,
                                  int threads) {
  if (count < 0) throw std::invalid_argument("run_batch: count must be >= 0");
  std::vector<BatchEntry> entries(static_cast<std::size_t>(count));
  if (threads <= 0) threads = omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int i = 0; i < count; ++i) {
    ExperimentConfig cfg = base;
    cfg.seed = first_seed + static_cast<std::uint64_t>(i);
    if (cfg.generator) cfg.generator->seed = cfg.seed;
    cfg.parallel = false;
    cfg.out_dir = (fs::path(base.out_dir) /
                   ("seed_" + std::to_string(cfg.seed)))
                      .string();
    entries[i].seed = cfg.seed;
    try {
      entries[i].outcome = run_experiment(cfg);
    } catch (const std::exception& e) {
      entries[i].error = e.what();
    }
  }
  return entries;
}

void trace_to_gnuplot(std::istream& csv, std::ostream& out,
                      std::optional<double> J_star) {
  std::string line;
  bool header = true;
  out << "# n J rel_err\n";
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      out << line << '\n';
      continue;
    }
    if (header) {
      if (line.rfind("n,J,", 0) != 0) {
        throw ParseError("trace: unexpected header '" + line + "'");
      }
      header = false;
      continue;
    }
    std::istringstream row(line);
    std::string n, J;
    std::getline(row, n, ',');
    std::getline(row, J, ',');
    const double j = std::stod(J);
    out << n << ' ' << fmt(j) << ' '
        << (J_star ? fmt((j - *J_star) / *J_star) : std::string("nan")) << '\n';
  }
  if (header) throw ParseError("trace: missing header");
}

EvalReport cmd_eval(const Plant& plant, const MatrixXd& K, double tol) {
  require_stabilizing(plant, K);
  EvalReport r;
  r.rho = rho_of(plant, K);
  r.grid = hinf_norm_grid(assemble_closed_loop(plant, K));
  r.bisection = hinf_norm_bisect(plant, Policy{K}, tol);
  r.difference = std::abs(r.grid.value - r.bisection.value);
  return r;
}

CertifyReport cmd_certify(const Plant& plant, const MatrixXd& K, double tol) {
  require_stabilizing(plant, K);
  CertifyReport r;
  r.bisection = hinf_norm_bisect(plant, Policy{K}, tol);
  r.certificate = hinf_feasible(plant, Policy{K}, r.bisection.value + tol);
  if (r.certificate.P) {
    r.lmi_residual = verify_bounded_real(assemble_closed_loop(plant, K),
                                         r.certificate.gamma,
                                         *r.certificate.P);
  } else {
    r.lmi_residual = NAN;
  }
  r.grid = hinf_norm_grid(assemble_closed_loop(plant, K));
  r.difference = std::abs(r.grid.value - r.bisection.value);
  return r;
}

EstimateReport cmd_estimate(const Plant& plant, const MatrixXd& K,
                            int horizon) {
  require_stabilizing(plant, K);
  EstimatorConfig e;
  e.horizon = horizon;
  EstimateReport r;
  r.horizon = horizon;
  r.estimate = noisy_cost_oracle(plant, K, e);
  r.grid = hinf_cost(plant, K);
  r.difference = std::abs(r.estimate - r.grid);
  return r;
}

void print(std::ostream& os, const EvalReport& r) {
  os << "rho " << fmt(r.rho) << '\n'
     << "grid " << fmt(r.grid.value) << '\n'
     << "peak_frequency " << fmt(r.grid.peak_frequency) << '\n'
     << "grid_points " << r.grid.grid_size << '\n'
     << "refine_tol " << fmt(r.grid.tolerance) << '\n'
     << "bisection " << fmt(r.bisection.value) << '\n'
     << "bisection_tol " << fmt(r.bisection.tolerance) << '\n'
     << "abs_difference " << fmt(r.difference) << '\n';
}

void print(std::ostream& os, const CertifyReport& r) {
  os << "bisection " << fmt(r.bisection.value) << '\n'
     << "bisection_tol " << fmt(r.bisection.tolerance) << '\n'
     << "certified_gamma " << fmt(r.certificate.gamma) << '\n'
     << "certificate_feasible " << (r.certificate.feasible ? "true" : "false")
     << '\n'
     << "riccati_residual " << fmt(r.certificate.residual) << '\n'
     << "lmi_max_eig " << fmt(r.lmi_residual) << '\n'
     << "grid " << fmt(r.grid.value) << '\n'
     << "abs_difference " << fmt(r.difference) << '\n';
}

void print(std::ostream& os, const EstimateReport& r) {
  os << "horizon " << r.horizon << '\n'
     << "estimate " << fmt(r.estimate) << '\n'
     << "grid " << fmt(r.grid) << '\n'
     << "abs_difference " << fmt(r.difference) << '\n';
}

}  // namespace hinfsearch
