#pragma once

#include <random>
#include <span>
#include <vector>

#include "hinfsearch/hinf_oracle.hpp"
#include "hinfsearch/lti.hpp"

namespace hinfsearch {

using Rng = std::mt19937_64;

struct MinNormResult {
  MatrixXd F;
  VectorXd weights;  // simplex weights, one per input
  int iterations = 0;
};

/// Minimum-norm element of conv{vectors} by Wolfe's algorithm.
/// All inputs must share one shape; throws std::invalid_argument if empty.
MinNormResult min_norm_point(std::span<const MatrixXd> vectors);

/// Uniform sample from the Frobenius ball of radius delta around center.
MatrixXd sample_ball(const MatrixXd& center, double delta, Rng& rng);

/// Uniform sample from [-1/2, 1/2]^{rows x cols}.
MatrixXd sample_cube(Eigen::Index rows, Eigen::Index cols, Rng& rng);

struct BundleOptions {
  int max_redraws = 100;
  bool parallel = true;
};

/// Sampled approximation of the Goldstein subdifferential at radius delta.
struct Bundle {
  MatrixXd center;
  double delta = 0.0;
  std::vector<MatrixXd> points;
  std::vector<MatrixXd> gradients;
  VectorXd weights;
  MatrixXd F;
  int redraws = 0;
  int gradient_calls = 0;
};

/// Draws m points from the delta-ball, evaluates the gradient oracle at each
/// (redrawing where it reports a nondifferentiable point) and solves the
/// min-norm problem over the gradients. A sampled point that is not
/// stabilizing raises InfeasibleBallError; more than max_redraws redraws
/// raise OracleError.
Bundle sample_bundle(const GradientOracle& grad, const MatrixXd& center,
                     double delta, int m, Rng& rng,
                     const BundleOptions& opts = {});

namespace kernels {

enum class EvalStatus { ok, nondifferentiable, unstable };

struct GradientBatch {
  std::vector<MatrixXd> gradients;
  std::vector<EvalStatus> status;
};

/// Gradient oracle at every point, serial reference implementation.
GradientBatch evaluate_gradients_serial(const GradientOracle& grad,
                                        std::span<const MatrixXd> points);

/// OpenMP version; the oracle must be reentrant.
GradientBatch evaluate_gradients_omp(const GradientOracle& grad,
                                     std::span<const MatrixXd> points);

}  // namespace kernels

}  // namespace hinfsearch
