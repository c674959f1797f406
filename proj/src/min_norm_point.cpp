#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "hinfsearch/errors.hpp"
#include "hinfsearch/subgrad_bundle.hpp"

namespace hinfsearch {
namespace {

// Minimizer of ||P_S mu|| over the affine hull {sum mu = 1}.
VectorXd affine_minimizer(const MatrixXd& PS) {
  const Eigen::Index k = PS.cols();
  const VectorXd e = VectorXd::Ones(k);
  MatrixXd G = PS.transpose() * PS;
  G += e * e.transpose();
  const VectorXd nu = G.ldlt().solve(e);
  return nu / nu.sum();
}

}  // namespace

MinNormResult min_norm_point(std::span<const MatrixXd> vectors) {
  if (vectors.empty()) {
    throw std::invalid_argument("min_norm_point: empty input");
  }
  const Eigen::Index rows = vectors[0].rows(), cols = vectors[0].cols();
  const Eigen::Index d = rows * cols;
  const auto m = static_cast<Eigen::Index>(vectors.size());
  MatrixXd P(d, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (vectors[i].rows() != rows || vectors[i].cols() != cols) {
      throw DimensionError("min_norm_point: inconsistent shapes");
    }
    P.col(i) = Eigen::Map<const VectorXd>(vectors[i].data(), d);
  }

  Eigen::Index j0;
  P.colwise().squaredNorm().minCoeff(&j0);
  std::vector<Eigen::Index> S{j0};
  std::vector<double> lambda{1.0};
  VectorXd x = P.col(j0);

  auto gather = [&]() {
    MatrixXd PS(d, static_cast<Eigen::Index>(S.size()));
    for (std::size_t i = 0; i < S.size(); ++i) PS.col(i) = P.col(S[i]);
    return PS;
  };

  int iter = 0;
  const int max_major = 100 + 10 * static_cast<int>(m);
  for (; iter < max_major; ++iter) {
    const double xx = x.squaredNorm();
    Eigen::Index j;
    const double best = (P.transpose() * x).minCoeff(&j);
    if (best >= xx - 1e-12 * (1.0 + xx)) break;
    if (std::find(S.begin(), S.end(), j) != S.end()) break;
    S.push_back(j);
    lambda.push_back(0.0);

    for (int minor = 0; minor < 10 * m + 10; ++minor) {
      const VectorXd mu = affine_minimizer(gather());
      if (mu.minCoeff() > 1e-14) {
        lambda.assign(mu.data(), mu.data() + mu.size());
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < S.size(); ++i) {
        if (mu(i) <= 1e-14) {
          const double denom = lambda[i] - mu(i);
          if (denom > 0.0) theta = std::min(theta, lambda[i] / denom);
        }
      }
      std::size_t drop = S.size();
      double smallest = INFINITY;
      for (std::size_t i = 0; i < S.size(); ++i) {
        lambda[i] = (1.0 - theta) * lambda[i] + theta * mu(i);
        if (lambda[i] < smallest) {
          smallest = lambda[i];
          drop = i;
        }
      }
      // Remove every vanished weight, and at least the smallest one.
      std::vector<Eigen::Index> S2;
      std::vector<double> l2;
      for (std::size_t i = 0; i < S.size(); ++i) {
        if (i == drop || lambda[i] <= 1e-15) continue;
        S2.push_back(S[i]);
        l2.push_back(lambda[i]);
      }
      S.swap(S2);
      lambda.swap(l2);
      const double sum = [&] {
        double s = 0.0;
        for (double l : lambda) s += l;
        return s;
      }();
      for (double& l : lambda) l /= sum;
      if (S.size() == 1) break;
    }
    x = gather() * Eigen::Map<const VectorXd>(lambda.data(),
                                              static_cast<Eigen::Index>(lambda.size()));
  }

  MinNormResult out;
  out.weights = VectorXd::Zero(m);
  for (std::size_t i = 0; i < S.size(); ++i) out.weights(S[i]) = lambda[i];
  const VectorXd F = P * out.weights;
  out.F = Eigen::Map<const MatrixXd>(F.data(), rows, cols);
  out.iterations = iter;
  return out;
}

}  // namespace hinfsearch
