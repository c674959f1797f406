#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "hinfsearch/modelfree.hpp"
#include "hinfsearch/problem_io.hpp"
#include "hinfsearch/solvers.hpp"

namespace hinfsearch {

enum class Algorithm { goldstein, gs, ns, ingd, ns_modelfree };

std::string to_string(Algorithm a);
/// Accepts goldstein, gs, ns, ingd, ns-modelfree (or ns_modelfree).
Algorithm algorithm_from_string(const std::string& name);

struct GeneratorSpec {
  int nx = 3;
  int nu = 1;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  // Exactly one problem source.
  std::optional<std::string> problem_path;
  std::optional<GeneratorSpec> generator;

  Algorithm algo = Algorithm::gs;
  GoldsteinConfig goldstein;
  GsConfig gs;
  NsConfig ns;
  IngdConfig ingd;
  EstimatorConfig estimator;
  GradientKind gradient = GradientKind::analytic;

  std::uint64_t seed = 0;
  std::string out_dir;
  std::optional<double> J_star;          // overrides the problem file value
  std::optional<double> target_rel_err;  // stop once (J - J*)/J* <= this
  bool zero_time = false;                // write 0 for elapsed_s
  bool parallel = true;
  bool auto_sample_size = true;  // raise m to nx*nu + 1 when smaller
};

/// Fills fields present in `j` on top of `base`. Unknown keys raise
/// ParseError so typos do not pass silently.
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  ExperimentConfig base = {});
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path,
                             ExperimentConfig base = {});

struct ResolvedProblem {
  Plant plant;
  Policy K0;
  std::optional<double> J_star;
};

/// Loads or generates the problem named by cfg. A problem file without K0
/// is rejected.
ResolvedProblem resolve_problem(const ExperimentConfig& cfg);

struct ExperimentOutcome {
  ExperimentConfig resolved;  // after J* lookup and sample-size adjustment
  SolveResult result;
  std::optional<double> J_star;
  double final_J = 0.0;
  std::optional<double> rel_err;
  int iterations = 0;
  long oracle_calls = 0;
  double wall_s = 0.0;
  int exit_code = 0;  // 0 on converged or stationary_target
};

/// Runs the configured solver without touching the file system.
ExperimentOutcome run_solver(const ExperimentConfig& cfg);

/// run_solver, then writes trace.csv, summary.json and config.json into
/// cfg.out_dir (created if missing). With a known J*, rel_err.csv holds
/// n,J,rel_err for every trace row.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

nlohmann::json summary_to_json(const ExperimentOutcome& out);

struct BatchEntry {
  std::uint64_t seed = 0;
  std::optional<ExperimentOutcome> outcome;
  std::string error;  // set when the run threw
};

/// Runs seeds first_seed .. first_seed + count - 1 as independent workers,
/// each writing into <out_dir>/seed_<s>. With a generator source the
/// instance seed follows the run seed. threads <= 0 uses the OpenMP default.
std::vector<BatchEntry> run_batch(const ExperimentConfig& base,
                                  std::uint64_t first_seed, int count,
                                  int threads);

/// Gnuplot-friendly columns "n J rel_err" from a trace CSV.
void trace_to_gnuplot(std::istream& csv, std::ostream& out,
                      std::optional<double> J_star);

struct EvalReport {
  double rho = 0.0;
  NormResult grid;
  NormResult bisection;
  double difference = 0.0;
};

struct CertifyReport {
  NormResult bisection;
  FeasibilityCertificate certificate;  // at gamma = bisection value + tol
  double lmi_residual = 0.0;  // largest eigenvalue of the bounded-real block
  NormResult grid;
  double difference = 0.0;
};

struct EstimateReport {
  int horizon = 0;
  double estimate = 0.0;
  double grid = 0.0;
  double difference = 0.0;
};

/// Each throws InstabilityError("policy not stabilizing: rho=...") when K
/// does not stabilize the plant.
EvalReport cmd_eval(const Plant& plant, const MatrixXd& K, double tol = 1e-8);
CertifyReport cmd_certify(const Plant& plant, const MatrixXd& K, double tol);
EstimateReport cmd_estimate(const Plant& plant, const MatrixXd& K, int horizon);

void print(std::ostream& os, const EvalReport& r);
void print(std::ostream& os, const CertifyReport& r);
void print(std::ostream& os, const EstimateReport& r);

}  // namespace hinfsearch
