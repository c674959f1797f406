#include <cmath>

#include "hinfsearch/errors.hpp"
#include "hinfsearch/solvers.hpp"
#include "solver_common.hpp"

namespace hinfsearch {

SolveResult solve_goldstein(const Plant& plant, const Policy& K0,
                            const GoldsteinConfig& cfg, const Oracles& oracles,
                            const RunOptions& run) {
  check_policy_shape(plant, K0.K);
  validate(cfg, K0.K.size());
  if (!is_stabilizing(plant, K0)) {
    throw std::invalid_argument("solve_goldstein: K0 is not stabilizing");
  }
  detail::CountedOracles o(oracles);
  detail::TraceRecorder rec(run, o);
  Rng rng(run.seed);
  BundleOptions bopts;
  bopts.parallel = run.parallel;

  MatrixXd K = K0.K;
  double J = o.cost(K);
  double delta0_hat = cfg.delta0_hat;
  int infeasible = 0;
  rec.trace.status = TraceStatus::iteration_cap;

  for (int n = 0; n < cfg.max_iters; ++n) {
    if (rec.reached_target(J)) {
      rec.trace.status = TraceStatus::converged;
      break;
    }
    double delta = cfg.mode == StepMode::diminishing
                       ? cfg.c * delta0_hat / (n + 1)
                       : cfg.delta;
    double Fnorm = NAN;
    double step = 0.0;
    bool stop = false, abort = false;
    for (int attempt = 0; attempt <= cfg.max_guard_halvings; ++attempt) {
      Bundle b;
      try {
        b = sample_bundle(o.gradient, K, delta, cfg.m, rng, bopts);
      } catch (const InfeasibleBallError&) {
        if (++infeasible > cfg.max_infeasible) {
          abort = true;
          break;
        }
        delta *= 0.5;
        delta0_hat *= 0.5;
        continue;
      } catch (const OracleError& e) {
        rec.trace.metadata.emplace_back("abort_reason", e.what());
        abort = true;
        break;
      }
      const double fn = b.F.norm();
      if (attempt == 0) Fnorm = fn;
      if (fn <= cfg.tol_F) {
        Fnorm = fn;
        stop = true;
        break;
      }
      const MatrixXd Kn = K - (delta / fn) * b.F;
      const double Jn = detail::cost_or_inf(plant, o.cost, Kn);
      if (Jn <= J) {
        rec.add(n, J, fn, delta, cfg.tol_F, delta, K);
        K = Kn;
        J = Jn;
        step = delta;
        break;
      }
      delta *= 0.5;
    }
    if (abort) {
      rec.trace.status = TraceStatus::infeasible_abort;
      break;
    }
    if (step == 0.0) rec.add(n, J, Fnorm, delta, cfg.tol_F, 0.0, K);
    if (stop) {
      rec.trace.status = TraceStatus::stationary_target;
      break;
    }
  }
  rec.add(static_cast<int>(rec.trace.records.size()), J, NAN, NAN, cfg.tol_F,
          0.0, K);
  if (rec.reached_target(J) && rec.trace.status == TraceStatus::iteration_cap) {
    rec.trace.status = TraceStatus::converged;
  }
  return {Policy{K}, std::move(rec.trace)};
}

}  // namespace hinfsearch
