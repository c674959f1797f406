#include "hinfsearch/lti.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "hinfsearch/errors.hpp"

namespace hinfsearch {
namespace {

void require_finite(const MatrixXd& M, const char* name) {
  if (!M.allFinite()) {
    throw DimensionError(std::string(name) + " has non-finite entries");
  }
}

void require_spd(const MatrixXd& M, const char* name) {
  if ((M - M.transpose()).norm() > 1e-10 * (1.0 + M.norm())) {
    throw DimensionError(std::string(name) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()),
                                             Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 1e-10 * M.rows()) {
    throw DimensionError(std::string(name) + " is not positive definite");
  }
}

}  // namespace

Plant::Plant(MatrixXd A, MatrixXd B, MatrixXd Q, MatrixXd R)
    : A_(std::move(A)), B_(std::move(B)), Q_(std::move(Q)), R_(std::move(R)) {
  if (A_.rows() == 0 || A_.rows() != A_.cols()) {
    throw DimensionError("A must be square and nonempty");
  }
  if (B_.rows() != A_.rows() || B_.cols() == 0) {
    throw DimensionError("B must have nx rows and at least one column");
  }
  if (Q_.rows() != A_.rows() || Q_.cols() != A_.rows()) {
    throw DimensionError("Q must be nx x nx");
  }
  if (R_.rows() != B_.cols() || R_.cols() != B_.cols()) {
    throw DimensionError("R must be nu x nu");
  }
  require_finite(A_, "A");
  require_finite(B_, "B");
  require_finite(Q_, "Q");
  require_finite(R_, "R");
  require_spd(Q_, "Q");
  require_spd(R_, "R");
}

double spectral_radius(const MatrixXd& M) {
  if (M.rows() != M.cols()) {
    throw DimensionError("spectral_radius: matrix is not square");
  }
  if (!M.allFinite()) {
    throw DimensionError("spectral_radius: non-finite entries");
  }
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(M, false);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("spectral_radius: eigensolver failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXd sqrt_psd(const MatrixXd& M) {
  if (M.rows() != M.cols()) throw DimensionError("sqrt_psd: not square");
  const MatrixXd S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  VectorXd lam = es.eigenvalues();
  const double scale = S.norm();
  if (lam.size() > 0 && lam.minCoeff() < -1e-8 * scale) {
    throw std::domain_error("sqrt_psd: matrix is not positive semidefinite");
  }
  lam = lam.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

void check_policy_shape(const Plant& plant, const MatrixXd& K) {
  if (K.rows() != plant.nu() || K.cols() != plant.nx()) {
    std::ostringstream os;
    os << "policy has shape " << K.rows() << "x" << K.cols() << ", expected "
       << plant.nu() << "x" << plant.nx();
    throw DimensionError(os.str());
  }
  if (!K.allFinite()) throw DimensionError("policy has non-finite entries");
}

ClosedLoop assemble_closed_loop(const Plant& plant, const MatrixXd& K) {
  check_policy_shape(plant, K);
  ClosedLoop cl;
  cl.A_cl = plant.A() - plant.B() * K;
  cl.C_cl = sqrt_psd(plant.Q() + K.transpose() * plant.R() * K);
  return cl;
}

ClosedLoop assemble_closed_loop(const Plant& plant, const Policy& policy) {
  return assemble_closed_loop(plant, policy.K);
}

bool is_stabilizing(const Plant& plant, const MatrixXd& K, double margin) {
  check_policy_shape(plant, K);
  return spectral_radius(plant.A() - plant.B() * K) < 1.0 - margin;
}

bool is_stabilizing(const Plant& plant, const Policy& policy, double margin) {
  return is_stabilizing(plant, policy.K, margin);
}

Trajectory simulate(const ClosedLoop& cl, const std::vector<VectorXd>& w,
                    const VectorXd& x0) {
  if (w.empty()) throw std::invalid_argument("simulate: horizon must be >= 1");
  const int n = cl.nx();
  if (x0.size() != n) throw DimensionError("simulate: x0 has wrong size");
  Trajectory out;
  out.x.reserve(w.size());
  out.z.reserve(w.size());
  VectorXd x = x0;
  for (const auto& wt : w) {
    if (wt.size() != n) throw DimensionError("simulate: w_t has wrong size");
    out.x.push_back(x);
    out.z.push_back(cl.C_cl * x);
    x = cl.A_cl * x + wt;
  }
  return out;
}

Trajectory simulate(const ClosedLoop& cl, const std::vector<VectorXd>& w) {
  return simulate(cl, w, VectorXd::Zero(cl.nx()));
}

}  // namespace hinfsearch
