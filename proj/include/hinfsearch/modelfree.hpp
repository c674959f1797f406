#pragma once

#include <cstdint>
#include <vector>

#include "hinfsearch/hinf_oracle.hpp"
#include "hinfsearch/lti.hpp"
#include "hinfsearch/solvers.hpp"

namespace hinfsearch {

struct EstimatorConfig {
  int horizon = 100;  // N, length of the simulated window
  int power_iters = 50;
  std::uint64_t init_seed = 0;
  double rel_tol = 1e-6;
};

void validate(const EstimatorConfig& cfg);

/// Signals over the window are stored stacked: entry t of the vector holds
/// the nx-dimensional sample at time t.
using Signal = std::vector<VectorXd>;

/// Finite-horizon input/output map w -> z of the closed loop (zero initial
/// state), computed by simulation.
Signal toeplitz_forward(const ClosedLoop& cl, const Signal& w);

/// Adjoint of toeplitz_forward: the transposed system (A', C', I) driven by
/// the time-reversed signal, with the output reversed again.
Signal toeplitz_adjoint(const ClosedLoop& cl, const Signal& z);

double inner(const Signal& a, const Signal& b);
double norm(const Signal& a);

/// Largest singular value of the N-step convolution operator by power
/// iteration on T'T. Never forms T. Throws InstabilityError if rho >= 1.
double power_iteration_norm(const ClosedLoop& cl, const EstimatorConfig& cfg);

/// J(K) estimated from simulated rollouts; deterministic in (K, cfg).
double noisy_cost_oracle(const Plant& plant, const MatrixXd& K,
                         const EstimatorConfig& cfg);

CostOracle make_noisy_cost_oracle(const Plant& plant,
                                  const EstimatorConfig& cfg);

/// NS driven by the rollout-based oracle. The trace carries the horizon in
/// its metadata.
SolveResult solve_ns_modelfree(const Plant& plant, const Policy& K0,
                               const NsConfig& ns_cfg,
                               const EstimatorConfig& est_cfg,
                               const RunOptions& run = {});

}  // namespace hinfsearch
