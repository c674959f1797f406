#include <cmath>
#include <exception>
#include <sstream>

#include "hinfsearch/errors.hpp"
#include "hinfsearch/subgrad_bundle.hpp"

namespace hinfsearch {

MatrixXd sample_ball(const MatrixXd& center, double delta, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MatrixXd dir(center.rows(), center.cols());
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = normal(rng);
    norm = dir.norm();
  } while (norm == 0.0);
  const double radius =
      delta * std::pow(unif(rng), 1.0 / static_cast<double>(center.size()));
  return center + (radius / norm) * dir;
}

MatrixXd sample_cube(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  MatrixXd z(rows, cols);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = unif(rng);
  return z;
}

namespace kernels {
namespace {

EvalStatus eval_one(const GradientOracle& grad, const MatrixXd& K,
                    MatrixXd& out) {
  try {
    out = grad(K);
    return EvalStatus::ok;
  } catch (const NondifferentiableError&) {
    return EvalStatus::nondifferentiable;
  } catch (const InstabilityError&) {
    return EvalStatus::unstable;
  }
}

}  // namespace

GradientBatch evaluate_gradients_serial(const GradientOracle& grad,
                                        std::span<const MatrixXd> points) {
  GradientBatch b;
  b.gradients.resize(points.size());
  b.status.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    b.status[i] = eval_one(grad, points[i], b.gradients[i]);
  }
  return b;
}

GradientBatch evaluate_gradients_omp(const GradientOracle& grad,
                                     std::span<const MatrixXd> points) {
  GradientBatch b;
  b.gradients.resize(points.size());
  b.status.resize(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  const auto n = static_cast<long>(points.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      b.status[i] = eval_one(grad, points[i], b.gradients[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return b;
}

}  // namespace kernels

Bundle sample_bundle(const GradientOracle& grad, const MatrixXd& center,
                     double delta, int m, Rng& rng, const BundleOptions& opts) {
  if (!(delta > 0.0)) throw std::invalid_argument("sample_bundle: delta <= 0");
  if (m < center.size() + 1) {
    std::ostringstream os;
    os << "sample_bundle: m=" << m << " below nx*nu+1=" << center.size() + 1;
    throw std::invalid_argument(os.str());
  }
  Bundle b;
  b.center = center;
  b.delta = delta;
  b.points.reserve(m);
  for (int i = 0; i < m; ++i) b.points.push_back(sample_ball(center, delta, rng));

  auto batch = opts.parallel
                   ? kernels::evaluate_gradients_omp(grad, b.points)
                   : kernels::evaluate_gradients_serial(grad, b.points);
  b.gradient_calls = m;
  b.gradients = std::move(batch.gradients);
  // Redraws happen serially in index order so the stream of random numbers
  // does not depend on the thread count.
  std::string reason;
  for (int i = 0; i < m; ++i) {
    auto status = batch.status[i];
    while (status != kernels::EvalStatus::ok) {
      if (status == kernels::EvalStatus::unstable) {
        throw InfeasibleBallError("sample_bundle: sampled policy not stabilizing");
      }
      if (++b.redraws > opts.max_redraws) {
        throw OracleError("sample_bundle: too many nondifferentiable redraws (" +
                          reason + ")");
      }
      b.points[i] = sample_ball(center, delta, rng);
      ++b.gradient_calls;
      try {
        b.gradients[i] = grad(b.points[i]);
        status = kernels::EvalStatus::ok;
      } catch (const NondifferentiableError& e) {
        status = kernels::EvalStatus::nondifferentiable;
        reason = e.what();
      } catch (const InstabilityError&) {
        status = kernels::EvalStatus::unstable;
      }
    }
  }
  const auto mn = min_norm_point(b.gradients);
  b.weights = mn.weights;
  b.F = mn.F;
  return b;
}

}  // namespace hinfsearch
