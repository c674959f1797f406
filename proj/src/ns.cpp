#include <cmath>
#include <vector>

#include "hinfsearch/errors.hpp"
#include "hinfsearch/solvers.hpp"
#include "solver_common.hpp"

namespace hinfsearch {

SolveResult solve_ns(const Plant& plant, const Policy& K0, const NsConfig& cfg,
                     const CostOracle& cost, const RunOptions& run) {
  check_policy_shape(plant, K0.K);
  validate(cfg, K0.K.size());
  if (!is_stabilizing(plant, K0)) {
    throw std::invalid_argument("solve_ns: K0 is not stabilizing");
  }
  detail::CountedOracles o(Oracles{cost, {}});
  detail::TraceRecorder rec(run, o);
  Rng rng(run.seed);

  MatrixXd K = K0.K;
  double J = o.cost(K);
  double delta = cfg.delta0, eps = cfg.eps0;
  const auto rows = K.rows(), cols = K.cols();
  rec.trace.status = TraceStatus::iteration_cap;

  for (int n = 0; n < cfg.max_iters; ++n) {
    if (rec.reached_target(J)) {
      rec.trace.status = TraceStatus::converged;
      break;
    }
    if ((delta <= cfg.delta_opt && eps <= cfg.eps_opt) ||
        delta < cfg.min_delta) {
      rec.trace.status = TraceStatus::stationary_target;
      break;
    }
    const double alpha = cfg.alpha0 / (n + 1);

    // Bundle of Gupal estimates; an unstable probe shrinks the sampling
    // radius for this iteration only.
    std::vector<MatrixXd> chis(static_cast<std::size_t>(cfg.m));
    double local = delta;
    bool built = false;
    for (int attempt = 0; attempt <= cfg.max_infeasible && !built; ++attempt) {
      std::vector<MatrixXd> pts, zs;
      for (int i = 0; i < cfg.m; ++i) pts.push_back(sample_ball(K, local, rng));
      for (int i = 0; i < cfg.m; ++i) zs.push_back(sample_cube(rows, cols, rng));
      try {
        detail::parallel_for(cfg.m, run.parallel, [&](long i) {
          chis[i] = gupal_chi(o.cost, pts[i], alpha, zs[i]);
        });
        built = true;
      } catch (const InstabilityError&) {
        local *= 0.5;
      }
    }
    if (!built) {
      rec.trace.status = TraceStatus::infeasible_abort;
      break;
    }
    const MatrixXd F = min_norm_point(chis).F;
    const double Fnorm = F.norm();

    if (Fnorm <= eps) {
      rec.add(n, J, Fnorm, delta, eps, 0.0, K);
      eps *= cfg.mu_eps;
      delta *= cfg.mu_delta;
      continue;
    }

    const MatrixXd Fhat = F / Fnorm;
    const double t_min = std::min(cfg.t_floor, cfg.kappa * delta / 3.0);
    double t = delta;
    double Jt = detail::kInf;
    for (;;) {
      Jt = detail::cost_or_inf(plant, o.cost, K - t * Fhat);
      if (Jt <= J - cfg.beta * t * Fnorm) break;
      if (cfg.kappa * t < t_min) {
        t = 0.0;
        break;
      }
      t *= cfg.kappa;
    }
    rec.add(n, J, Fnorm, delta, eps, t, K);
    if (t > 0.0) {
      K = K - t * Fhat;
      J = Jt;
    }
  }
  rec.add(static_cast<int>(rec.trace.records.size()), J, NAN, delta, eps, 0.0,
          K);
  if (rec.reached_target(J) && rec.trace.status == TraceStatus::iteration_cap) {
    rec.trace.status = TraceStatus::converged;
  }
  return {Policy{K}, std::move(rec.trace)};
}

}  // namespace hinfsearch
