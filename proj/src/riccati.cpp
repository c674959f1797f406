#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "hinfsearch/errors.hpp"
#include "hinfsearch/hinf_oracle.hpp"

namespace hinfsearch {
namespace {

double min_eig(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Right-hand side of the game Riccati map.
MatrixXd riccati_map(const MatrixXd& A, const MatrixXd& CtC, const MatrixXd& P,
                     const MatrixXd& S) {
  const MatrixXd inner = P + P * S.ldlt().solve(P);
  MatrixXd out = A.transpose() * inner * A + CtC;
  return 0.5 * (out + out.transpose());
}

}  // namespace

FeasibilityCertificate hinf_feasible(const Plant& plant, const Policy& policy,
                                     double gamma,
                                     const RiccatiOptions& opts) {
  check_policy_shape(plant, policy.K);
  const MatrixXd A = plant.A() - plant.B() * policy.K;
  const double rho = spectral_radius(A);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "policy not stabilizing: rho=" << rho;
    throw InstabilityError(os.str(), rho);
  }
  const int n = plant.nx();
  const MatrixXd CtC = plant.Q() + policy.K.transpose() * plant.R() * policy.K;
  const MatrixXd G2 = gamma * gamma * MatrixXd::Identity(n, n);

  FeasibilityCertificate cert;
  cert.gamma = gamma;
  if (!(gamma > 0.0)) return cert;

  // Doubling: after k steps P holds the 2^k-th fixed-point iterate from
  // P = 0, so the monotone sequence and its stopping tests are unchanged
  // while near-critical gamma needs O(log) rather than O(1/(1-rate)) work.
  const MatrixXd I = MatrixXd::Identity(n, n);
  MatrixXd Ak = A;
  MatrixXd Gk = -I / (gamma * gamma);
  MatrixXd P = CtC;
  for (int k = 1; k <= opts.max_doublings; ++k) {
    cert.iterations = k;
    if (min_eig(G2 - P) <= opts.eps_pd) return cert;
    const Eigen::PartialPivLU<MatrixXd> W(I + Gk * P);
    const MatrixXd WA = W.solve(Ak);
    const MatrixXd WG = W.solve(Gk);
    MatrixXd Pn = P + Ak.transpose() * P * WA;
    Pn = 0.5 * (Pn + Pn.transpose());
    MatrixXd Gn = Gk + Ak * WG * Ak.transpose();
    Gk = 0.5 * (Gn + Gn.transpose());
    Ak = Ak * WA;
    const double diff = (Pn - P).norm();
    P = Pn;
    if (!P.allFinite() || P.norm() > opts.divergence) return cert;
    if (diff < opts.conv_tol * (1.0 + P.norm())) {
      if (min_eig(G2 - P) <= opts.eps_pd) return cert;
      cert.feasible = true;
      break;
    }
  }
  if (!cert.feasible) return cert;
  const MatrixXd S = G2 - P;
  cert.residual = (riccati_map(A, CtC, P, S) - P).norm();
  cert.P = P;
  return cert;
}

NormResult hinf_norm_bisect(const Plant& plant, const Policy& policy,
                            double tol, const RiccatiOptions& opts) {
  if (!(tol > 0.0)) throw std::invalid_argument("hinf_norm_bisect: tol <= 0");
  const ClosedLoop cl = assemble_closed_loop(plant, policy);
  GridOptions coarse;
  coarse.coarse_points = 128;
  coarse.refine_tol = 1e-3;
  const auto peaks = frequency_peaks(cl, coarse);  // throws if unstable

  double lo = 0.0;
  double hi = 2.0 * peaks.front().value;
  for (int grow = 0; grow < 60 && !hinf_feasible(plant, policy, hi, opts).feasible;
       ++grow) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo >= tol) {
    const double mid = 0.5 * (lo + hi);
    if (hinf_feasible(plant, policy, mid, opts).feasible) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  NormResult r;
  r.value = 0.5 * (lo + hi);
  r.peak_frequency = peaks.front().omega;
  r.method = NormMethod::bisection;
  r.tolerance = tol;
  r.grid_size = 0;
  return r;
}

double verify_bounded_real(const ClosedLoop& cl, double gamma,
                           const MatrixXd& P) {
  const int n = cl.nx();
  if (P.rows() != n || P.cols() != n) {
    throw DimensionError("verify_bounded_real: P has wrong shape");
  }
  const MatrixXd& A = cl.A_cl;
  MatrixXd M(2 * n, 2 * n);
  M.topLeftCorner(n, n) =
      A.transpose() * P * A - P + cl.C_cl.transpose() * cl.C_cl;
  M.topRightCorner(n, n) = A.transpose() * P;
  M.bottomLeftCorner(n, n) = P * A;
  M.bottomRightCorner(n, n) = P - gamma * gamma * MatrixXd::Identity(n, n);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace hinfsearch
