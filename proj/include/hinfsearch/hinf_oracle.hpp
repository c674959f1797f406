#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hinfsearch/lti.hpp"

namespace hinfsearch {

enum class NormMethod { grid_refine, bisection };

std::string to_string(NormMethod m);

struct NormResult {
  double value = 0.0;
  double peak_frequency = 0.0;  // radians, in [0, 2*pi]
  NormMethod method = NormMethod::grid_refine;
  double tolerance = 0.0;
  int grid_size = 0;  // 0 for bisection
};

struct GridOptions {
  int coarse_points = 1024;  // uniform samples of [0, pi]
  double refine_tol = 1e-10;
  bool parallel = true;  // OpenMP sweep of the coarse grid
  bool pole_points = true;  // also sample around each closed-loop pole angle
};

/// Coarser grid used inside the solvers, where the oracle runs thousands of
/// times; the pole-anchored points keep sharp peaks resolved.
GridOptions solver_grid();

struct FrequencyPeak {
  double omega;
  double value;
};

/// sigma_max(C_cl (e^{j omega} I - A_cl)^{-1}).
double frequency_gain(const ClosedLoop& cl, double omega);

/// Golden-section-refined local maxima of the frequency gain on [0, pi],
/// sorted by decreasing value. Requires rho(A_cl) < 1.
std::vector<FrequencyPeak> frequency_peaks(const ClosedLoop& cl,
                                           const GridOptions& opts = {});

/// H-infinity norm by coarse grid + golden-section refinement.
/// Throws InstabilityError if rho(A_cl) >= 1.
NormResult hinf_norm_grid(const ClosedLoop& cl, const GridOptions& opts = {});
NormResult hinf_norm_grid(const ClosedLoop& cl, int coarse_points,
                          double refine_tol);

/// J(K) through the grid oracle. Throws InstabilityError outside the
/// stabilizing set.
double hinf_cost(const Plant& plant, const MatrixXd& K,
                 const GridOptions& opts = {});

struct RiccatiOptions {
  int max_doublings = 64;  // step k reaches fixed-point iterate 2^k
  double conv_tol = 1e-11;
  double eps_pd = 1e-9;
  double divergence = 1e12;
};

struct FeasibilityCertificate {
  double gamma = 0.0;
  bool feasible = false;
  std::optional<MatrixXd> P;
  int iterations = 0;
  double residual = 0.0;  // Frobenius norm of the Riccati residual
};

/// Decides J(K) <= gamma through the minimal solution of
///   P = A_cl'(P + P(gamma^2 I - P)^{-1} P)A_cl + Q + K'RK,
/// the limit of the fixed-point iteration from P = 0, evaluated by doubling.
FeasibilityCertificate hinf_feasible(const Plant& plant, const Policy& policy,
                                     double gamma,
                                     const RiccatiOptions& opts = {});

/// Bisection on gamma over hinf_feasible.
NormResult hinf_norm_bisect(const Plant& plant, const Policy& policy,
                            double tol, const RiccatiOptions& opts = {});

/// Largest eigenvalue of the bounded-real block matrix
///   [A'PA - P + C'C, A'P; PA, P - gamma^2 I].
/// A value <= 1e-8 certifies ||G||_inf <= gamma.
double verify_bounded_real(const ClosedLoop& cl, double gamma,
                           const MatrixXd& P);

using CostOracle = std::function<double(const MatrixXd&)>;
using GradientOracle = std::function<MatrixXd(const MatrixXd&)>;

/// Central differences, entry (i,j) = (J(K + hE_ij) - J(K - hE_ij)) / 2h.
MatrixXd grad_fd(const CostOracle& cost, const MatrixXd& K, double h = 1e-4);

struct GradientOptions {
  GridOptions grid = solver_grid();
  double gap_tol = 1e-10;  // relative peak-uniqueness and singular-gap test
};

/// Closed-form gradient of J at a differentiable point. Throws
/// NondifferentiableError if the peak frequency is not unique or the top
/// singular value is not simple (relative gap below gap_tol).
MatrixXd grad_analytic(const Plant& plant, const MatrixXd& K,
                       const GradientOptions& opts = {});

/// Gupal estimate of the gradient of the Steklov-averaged cost; z has
/// entries in [-1/2, 1/2]. Uses exactly 2 * K.size() cost evaluations.
MatrixXd gupal_chi(const CostOracle& cost, const MatrixXd& K, double alpha,
                   const MatrixXd& z);

/// Exact-model oracles bound to a plant.
CostOracle make_cost_oracle(const Plant& plant, const GridOptions& opts = {});

enum class GradientKind { analytic, finite_difference };

GradientOracle make_gradient_oracle(const Plant& plant,
                                    GradientKind kind = GradientKind::analytic,
                                    const GradientOptions& opts = {},
                                    double fd_step = 1e-4);

namespace kernels {

/// Frequency gain at each omega; serial reference implementation.
void frequency_sweep_serial(const ClosedLoop& cl,
                            std::span<const double> omegas,
                            std::span<double> gains);

/// OpenMP version of frequency_sweep_serial.
void frequency_sweep_omp(const ClosedLoop& cl, std::span<const double> omegas,
                         std::span<double> gains);

}  // namespace kernels

}  // namespace hinfsearch
