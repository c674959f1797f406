#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hinfsearch/errors.hpp"
#include "hinfsearch/hinf_oracle.hpp"

namespace hinfsearch {

using cd = std::complex<double>;

MatrixXd grad_fd(const CostOracle& cost, const MatrixXd& K, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_fd: h must be > 0");
  MatrixXd G(K.rows(), K.cols());
  MatrixXd Kp = K;
  for (Eigen::Index j = 0; j < K.cols(); ++j) {
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      Kp(i, j) = K(i, j) + h;
      const double fp = cost(Kp);
      Kp(i, j) = K(i, j) - h;
      const double fm = cost(Kp);
      Kp(i, j) = K(i, j);
      G(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return G;
}

MatrixXd grad_analytic(const Plant& plant, const MatrixXd& K,
                       const GradientOptions& opts) {
  const ClosedLoop cl = assemble_closed_loop(plant, K);
  const auto peaks = frequency_peaks(cl, opts.grid);
  const double top = peaks.front().value;
  if (peaks.size() > 1 && top - peaks[1].value < opts.gap_tol * top) {
    std::ostringstream os;
    os << "cost not differentiable: competing peaks at omega="
       << peaks.front().omega << " and " << peaks[1].omega;
    throw NondifferentiableError(os.str());
  }
  const double w0 = peaks.front().omega;
  const int n = cl.nx();

  Eigen::MatrixXcd M = -cl.A_cl.cast<cd>();
  M.diagonal().array() += std::polar(1.0, w0);
  const Eigen::MatrixXcd H2 = M.partialPivLu().inverse();
  const Eigen::MatrixXcd H = cl.C_cl.cast<cd>() * H2;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(H,
                                         Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (n > 1 && sv(0) - sv(1) < opts.gap_tol * sv(0)) {
    throw NondifferentiableError(
        "cost not differentiable: repeated top singular value");
  }
  const Eigen::VectorXcd u1 = svd.matrixU().col(0);
  const Eigen::VectorXcd v1 = svd.matrixV().col(0);
  const Eigen::MatrixXcd X = H2 * v1 * u1.adjoint();

  // Gamma = int_0^inf e^{-t H1} X e^{-t H1} dt solves H1 G + G H1 = X; with
  // H1 = V diag(l) V' this is elementwise division in the eigenbasis.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cl.C_cl);
  const Eigen::MatrixXcd V = es.eigenvectors().cast<cd>();
  const VectorXd& lam = es.eigenvalues();
  Eigen::MatrixXcd Y = V.transpose() * X * V;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) Y(i, j) /= (lam(i) + lam(j));
  }
  const Eigen::MatrixXcd Gam = V * Y * V.transpose();

  const Eigen::MatrixXcd RK = (plant.R() * K).cast<cd>();
  const Eigen::MatrixXcd Bc = plant.B().cast<cd>();
  const Eigen::MatrixXcd grad =
      RK * (Gam + Gam.transpose()) - (X * H * Bc).transpose();
  return grad.real();
}

MatrixXd gupal_chi(const CostOracle& cost, const MatrixXd& K, double alpha,
                   const MatrixXd& z) {
  if (!(alpha > 0.0)) throw std::invalid_argument("gupal_chi: alpha <= 0");
  if (z.rows() != K.rows() || z.cols() != K.cols()) {
    throw DimensionError("gupal_chi: z has wrong shape");
  }
  const MatrixXd base = K + alpha * z;
  MatrixXd chi(K.rows(), K.cols());
  MatrixXd probe = base;
  for (Eigen::Index j = 0; j < K.cols(); ++j) {
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      probe(i, j) = K(i, j) + 0.5 * alpha;
      const double fp = cost(probe);
      probe(i, j) = K(i, j) - 0.5 * alpha;
      const double fm = cost(probe);
      probe(i, j) = base(i, j);
      chi(i, j) = (fp - fm) / alpha;
    }
  }
  return chi;
}

GradientOracle make_gradient_oracle(const Plant& plant, GradientKind kind,
                                    const GradientOptions& opts,
                                    double fd_step) {
  if (kind == GradientKind::analytic) {
    return [plant, opts](const MatrixXd& K) {
      return grad_analytic(plant, K, opts);
    };
  }
  CostOracle cost = make_cost_oracle(plant, opts.grid);
  return [cost, fd_step](const MatrixXd& K) { return grad_fd(cost, K, fd_step); };
}

}  // namespace hinfsearch
