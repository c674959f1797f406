#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace hinfsearch {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Synthesis instance x_{t+1} = A x_t + B u_t + w_t with stage cost
/// x'Qx + u'Ru. The disturbance enters through the identity.
class Plant {
 public:
  /// Throws DimensionError on shape mismatch, non-finite entries, or when
  /// Q or R is not symmetric positive definite.
  Plant(MatrixXd A, MatrixXd B, MatrixXd Q, MatrixXd R);

  const MatrixXd& A() const { return A_; }
  const MatrixXd& B() const { return B_; }
  const MatrixXd& Q() const { return Q_; }
  const MatrixXd& R() const { return R_; }
  int nx() const { return static_cast<int>(A_.rows()); }
  int nu() const { return static_cast<int>(B_.cols()); }

 private:
  MatrixXd A_, B_, Q_, R_;
};

/// State-feedback gain, u_t = -K x_t. K is nu x nx.
struct Policy {
  MatrixXd K;
};

/// Closed loop x_{t+1} = A_cl x_t + w_t, z_t = C_cl x_t.
struct ClosedLoop {
  MatrixXd A_cl;
  MatrixXd C_cl;
  int nx() const { return static_cast<int>(A_cl.rows()); }
};

/// max |lambda_i(M)|.
double spectral_radius(const MatrixXd& M);

/// Symmetric PSD square root. Eigenvalues of the symmetrized input below 0
/// are clamped to 0; anything below -1e-8 * ||M|| throws std::domain_error.
MatrixXd sqrt_psd(const MatrixXd& M);

void check_policy_shape(const Plant& plant, const MatrixXd& K);

ClosedLoop assemble_closed_loop(const Plant& plant, const Policy& policy);
ClosedLoop assemble_closed_loop(const Plant& plant, const MatrixXd& K);

/// rho(A - BK) < 1 - margin.
bool is_stabilizing(const Plant& plant, const MatrixXd& K, double margin = 0.0);
bool is_stabilizing(const Plant& plant, const Policy& policy,
                    double margin = 0.0);

struct Trajectory {
  std::vector<VectorXd> x;  // x_0 .. x_{T-1}
  std::vector<VectorXd> z;  // z_0 .. z_{T-1}
};

/// Zero-initial-state response to the disturbance sequence w (length T).
Trajectory simulate(const ClosedLoop& cl, const std::vector<VectorXd>& w);

/// Same as above but starting from x0 instead of the origin.
Trajectory simulate(const ClosedLoop& cl, const std::vector<VectorXd>& w,
                    const VectorXd& x0);

}  // namespace hinfsearch
