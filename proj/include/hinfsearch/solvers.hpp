#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hinfsearch/hinf_oracle.hpp"
#include "hinfsearch/subgrad_bundle.hpp"

namespace hinfsearch {

enum class TraceStatus { converged, stationary_target, iteration_cap, infeasible_abort };

std::string to_string(TraceStatus s);

struct IterationRecord {
  int n = 0;
  double J = 0.0;
  double Fnorm = 0.0;
  double delta = 0.0;
  double eps = 0.0;
  double t = 0.0;
  long oracle_calls = 0;
  double elapsed_s = 0.0;
  std::optional<MatrixXd> K;  // iterate at which the row was computed
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  TraceStatus status = TraceStatus::iteration_cap;
  std::vector<std::pair<std::string, std::string>> metadata;

  /// Number of iterations that moved the policy.
  int accepted_steps() const;

  /// CSV with header n,J,Fnorm,delta,eps,t,oracle_calls,elapsed_s, one row
  /// per record, then "# key=value" metadata lines and "# status=<enum>".
  /// zero_time writes 0 in the elapsed column so reruns compare byte-equal.
  void write_csv(std::ostream& os, bool zero_time = false) const;
};

struct SolveResult {
  Policy policy;
  IterationTrace trace;
};

/// Oracles a solver may call. cost must throw InstabilityError outside the
/// stabilizing set; gradient may additionally throw NondifferentiableError.
struct Oracles {
  CostOracle cost;
  GradientOracle gradient;
};

/// Exact-model oracles (grid cost, analytic or finite-difference gradient).
Oracles exact_oracles(const Plant& plant,
                      GradientKind kind = GradientKind::analytic,
                      const GradientOptions& opts = {});

/// Options shared by every solver.
struct RunOptions {
  std::uint64_t seed = 0;
  bool record_policies = false;
  bool parallel = true;
  std::optional<double> j_target;  // stop with status converged once J <= target
};

enum class StepMode { diminishing, constant };

struct GoldsteinConfig {
  StepMode mode = StepMode::constant;
  double c = 0.5;
  double delta = 0.01;
  double delta0_hat = 0.02;
  int m = 4;
  int max_iters = 2000;
  double tol_F = 1e-6;
  int max_guard_halvings = 20;
  int max_infeasible = 20;
};

struct GsConfig {
  double delta0 = 0.01;
  double eps0 = 100.0;
  double mu_delta = 0.5;
  double mu_eps = 0.5;
  int m = 4;
  double beta = 0.5;
  double theta = 0.9;
  int max_iters = 2000;
  double delta_opt = 0.0;
  double eps_opt = 0.0;
  int max_line_search = 200;
  int max_perturb = 100;
  int max_infeasible = 20;
  double min_delta = 1e-10;  // radius below oracle resolution counts as stationary
};

struct NsConfig {
  double delta0 = 0.01;
  double eps0 = 100.0;
  double mu_delta = 0.5;
  double mu_eps = 0.5;
  int m = 4;
  double beta = 0.5;
  double t_floor = 1e-3;
  double kappa = 0.9;
  double alpha0 = 0.1;
  int max_iters = 2000;
  double delta_opt = 0.0;
  double eps_opt = 0.0;
  int max_infeasible = 20;
  double min_delta = 1e-10;
};

struct IngdConfig {
  double delta = 0.01;
  double eps = 1e-5;
  double lipschitz = 0.0;  // <= 0: estimate from gradients around K0
  int max_iters = 2000;
  int max_inner = 1000;
  bool anneal = false;
  double anneal_factor = 0.7;
  double min_delta = 1e-10;
};

void validate(const GoldsteinConfig& cfg, Eigen::Index dim);
void validate(const GsConfig& cfg, Eigen::Index dim);
void validate(const NsConfig& cfg, Eigen::Index dim);
void validate(const IngdConfig& cfg);

SolveResult solve_goldstein(const Plant& plant, const Policy& K0,
                            const GoldsteinConfig& cfg, const Oracles& oracles,
                            const RunOptions& run = {});

SolveResult solve_gs(const Plant& plant, const Policy& K0, const GsConfig& cfg,
                     const Oracles& oracles, const RunOptions& run = {});

SolveResult solve_ns(const Plant& plant, const Policy& K0, const NsConfig& cfg,
                     const CostOracle& cost, const RunOptions& run = {});

struct IngdDirection {
  MatrixXd F;
  int inner_iters = 0;
  bool capped = false;         // inner loop hit max_inner
  double J_center = 0.0;       // J(K)
  double J_trial = 0.0;        // J(K - delta F/||F||), +inf if unstable
  long oracle_calls = 0;
};

/// Direction search of interpolated normalized gradient descent: starting
/// from a gradient sampled in the delta-ball, repeatedly projects the origin
/// onto the segment between the current F and a gradient sampled on the
/// segment [K, K - delta*Y/||Y||], Y drawn near F, until ||F|| <= eps or
/// J(K) - J(K - delta F/||F||) > (delta/4)||F||.
IngdDirection ingd_min_norm(const Plant& plant, const MatrixXd& K,
                            double delta, double eps, double lipschitz,
                            int max_inner, const Oracles& oracles, Rng& rng);

/// argmin over the segment [F, g] of the Frobenius norm.
MatrixXd segment_min_norm(const MatrixXd& F, const MatrixXd& g);

/// 1.5 x the largest gradient norm over `samples` points of the delta-ball.
double estimate_lipschitz(const MatrixXd& K0, double delta,
                          const GradientOracle& grad, Rng& rng,
                          int samples = 50);

SolveResult solve_ingd(const Plant& plant, const Policy& K0,
                       const IngdConfig& cfg, const Oracles& oracles,
                       const RunOptions& run = {});

}  // namespace hinfsearch
