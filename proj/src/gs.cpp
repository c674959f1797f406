#include <cmath>
#include <vector>

#include "hinfsearch/errors.hpp"
#include "hinfsearch/solvers.hpp"
#include "solver_common.hpp"

namespace hinfsearch {
namespace {

// Gradient at K, or nothing if K is a nondifferentiable point.
std::optional<MatrixXd> try_gradient(const GradientOracle& grad,
                                     const MatrixXd& K) {
  try {
    return grad(K);
  } catch (const NondifferentiableError&) {
    return std::nullopt;
  }
}

}  // namespace

SolveResult solve_gs(const Plant& plant, const Policy& K0, const GsConfig& cfg,
                     const Oracles& oracles, const RunOptions& run) {
  check_policy_shape(plant, K0.K);
  validate(cfg, K0.K.size());
  if (!is_stabilizing(plant, K0)) {
    throw std::invalid_argument("solve_gs: K0 is not stabilizing");
  }
  detail::CountedOracles o(oracles);
  detail::TraceRecorder rec(run, o);
  Rng rng(run.seed);
  BundleOptions bopts;
  bopts.parallel = run.parallel;

  // The method starts from a point of differentiability; resample in a tiny
  // ball around K0 until one is found.
  MatrixXd K = K0.K;
  std::optional<MatrixXd> g_center = try_gradient(o.gradient, K);
  const double tiny = 1e-6 * (1.0 + K.norm());
  for (int i = 0; !g_center && i < cfg.max_perturb; ++i) {
    MatrixXd Kp = sample_ball(K0.K, tiny, rng);
    if (!is_stabilizing(plant, Kp)) continue;
    g_center = try_gradient(o.gradient, Kp);
    if (g_center) K = Kp;
  }
  if (!g_center) throw OracleError("solve_gs: no differentiable start near K0");

  double J = o.cost(K);
  double delta = cfg.delta0, eps = cfg.eps0;
  int infeasible = 0;
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
    Bundle b;
    try {
      b = sample_bundle(o.gradient, K, delta, cfg.m, rng, bopts);
    } catch (const OracleError& e) {
      rec.trace.metadata.emplace_back("abort_reason", e.what());
      rec.trace.status = TraceStatus::infeasible_abort;
      break;
    } catch (const InfeasibleBallError&) {
      if (++infeasible > cfg.max_infeasible) {
        rec.trace.status = TraceStatus::infeasible_abort;
        break;
      }
      rec.add(n, J, NAN, delta, eps, 0.0, K);
      delta *= 0.5;
      continue;
    }
    std::vector<MatrixXd> grads = std::move(b.gradients);
    if (g_center) grads.push_back(*g_center);
    const MatrixXd F = min_norm_point(grads).F;
    const double Fnorm = F.norm();

    if (Fnorm <= eps) {
      rec.add(n, J, Fnorm, delta, eps, 0.0, K);
      delta *= cfg.mu_delta;
      eps *= cfg.mu_eps;
      continue;
    }

    const MatrixXd Fhat = (delta / Fnorm) * F;
    double t = 1.0;
    double Jt = detail::kInf;
    bool found = false;
    for (int k = 0; k < cfg.max_line_search; ++k) {
      Jt = detail::cost_or_inf(plant, o.cost, K - t * Fhat);
      if (Jt < J - cfg.beta * t * delta * Fnorm) {
        found = true;
        break;
      }
      t *= cfg.theta;
    }
    rec.add(n, J, Fnorm, delta, eps, found ? t : 0.0, K);
    if (!found) continue;

    const MatrixXd Kt = K - t * Fhat;
    std::optional<MatrixXd> g_new = try_gradient(o.gradient, Kt);
    MatrixXd K_next = Kt;
    double J_next = Jt;
    if (!g_new) {
      // Landed on a kink: look for a nearby differentiable point that keeps
      // the sufficient decrease.
      const double radius = std::min(t, delta) * Fhat.norm();
      const double bound = J - cfg.beta * t * delta * Fnorm;
      for (int k = 0; k < cfg.max_perturb; ++k) {
        const MatrixXd Kp = sample_ball(Kt, radius, rng);
        const double Jp = detail::cost_or_inf(plant, o.cost, Kp);
        if (!(Jp < bound)) continue;
        g_new = try_gradient(o.gradient, Kp);
        if (g_new) {
          K_next = Kp;
          J_next = Jp;
          break;
        }
      }
    }
    K = K_next;
    J = J_next;
    g_center = std::move(g_new);
  }
  rec.add(static_cast<int>(rec.trace.records.size()), J, NAN, delta, eps, 0.0,
          K);
  if (rec.reached_target(J) && rec.trace.status == TraceStatus::iteration_cap) {
    rec.trace.status = TraceStatus::converged;
  }
  return {Policy{K}, std::move(rec.trace)};
}

}  // namespace hinfsearch
