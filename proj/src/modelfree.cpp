#include "hinfsearch/modelfree.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hinfsearch/errors.hpp"

namespace hinfsearch {

void validate(const EstimatorConfig& cfg) {
  if (cfg.horizon < 2) throw std::invalid_argument("estimator: horizon < 2");
  if (cfg.power_iters < 1) {
    throw std::invalid_argument("estimator: power_iters < 1");
  }
  if (cfg.rel_tol < 0.0) throw std::invalid_argument("estimator: rel_tol < 0");
}

Signal toeplitz_forward(const ClosedLoop& cl, const Signal& w) {
  return simulate(cl, w).z;
}

Signal toeplitz_adjoint(const ClosedLoop& cl, const Signal& z) {
  const MatrixXd At = cl.A_cl.transpose();
  const auto N = z.size();
  const MatrixXd Ct = cl.C_cl.transpose();
  Signal out(N);
  VectorXd state = VectorXd::Zero(cl.nx());
  // Reversed time tau = N-1-s; the state of the transposed system at tau is
  // the adjoint output at s.
  for (std::size_t tau = 0; tau < N; ++tau) {
    out[N - 1 - tau] = state;
    state = At * state + Ct * z[N - 1 - tau];
  }
  return out;
}

double inner(const Signal& a, const Signal& b) {
  if (a.size() != b.size()) throw DimensionError("inner: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].dot(b[i]);
  return s;
}

double norm(const Signal& a) { return std::sqrt(inner(a, a)); }

double power_iteration_norm(const ClosedLoop& cl, const EstimatorConfig& cfg) {
  validate(cfg);
  const double rho = spectral_radius(cl.A_cl);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "policy not stabilizing: rho=" << rho;
    throw InstabilityError(os.str(), rho);
  }
  const int n = cl.nx();
  std::mt19937_64 rng(cfg.init_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Signal w(static_cast<std::size_t>(cfg.horizon), VectorXd(n));
  for (auto& wt : w) {
    for (int i = 0; i < n; ++i) wt(i) = normal(rng);
  }
  double wn = norm(w);
  for (auto& wt : w) wt /= wn;

  double estimate = norm(toeplitz_forward(cl, w));
  for (int k = 0; k < cfg.power_iters; ++k) {
    Signal next = toeplitz_adjoint(cl, toeplitz_forward(cl, w));
    wn = norm(next);
    if (wn == 0.0) return 0.0;
    for (auto& wt : next) wt /= wn;
    w = std::move(next);
    const double prev = estimate;
    estimate = norm(toeplitz_forward(cl, w));
    if (std::abs(estimate - prev) < cfg.rel_tol * estimate) break;
  }
  return estimate;
}

double noisy_cost_oracle(const Plant& plant, const MatrixXd& K,
                         const EstimatorConfig& cfg) {
  return power_iteration_norm(assemble_closed_loop(plant, K), cfg);
}

CostOracle make_noisy_cost_oracle(const Plant& plant,
                                  const EstimatorConfig& cfg) {
  validate(cfg);
  return [plant, cfg](const MatrixXd& K) {
    return noisy_cost_oracle(plant, K, cfg);
  };
}

SolveResult solve_ns_modelfree(const Plant& plant, const Policy& K0,
                               const NsConfig& ns_cfg,
                               const EstimatorConfig& est_cfg,
                               const RunOptions& run) {
  auto result =
      solve_ns(plant, K0, ns_cfg, make_noisy_cost_oracle(plant, est_cfg), run);
  result.trace.metadata.emplace_back("horizon", std::to_string(est_cfg.horizon));
  return result;
}

}  // namespace hinfsearch
