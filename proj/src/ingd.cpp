#include <algorithm>
#include <cmath>
#include <sstream>

#include "hinfsearch/errors.hpp"
#include "hinfsearch/solvers.hpp"
#include "solver_common.hpp"

namespace hinfsearch {
namespace {

constexpr int kMaxResample = 100;

// Gradient at a point produced by `draw`, redrawing on kinks and unstable
// points.
template <class Draw>
MatrixXd sampled_gradient(const Plant& plant, const GradientOracle& grad,
                          Draw&& draw) {
  bool unstable = false;
  for (int k = 0; k < kMaxResample; ++k) {
    const MatrixXd Xi = draw();
    if (!is_stabilizing(plant, Xi)) {
      unstable = true;
      continue;
    }
    try {
      return grad(Xi);
    } catch (const NondifferentiableError&) {
    } catch (const InstabilityError&) {
      unstable = true;
    }
  }
  if (!unstable) throw OracleError("ingd: every gradient sample hit a kink");
  throw InfeasibleBallError("ingd: no admissible gradient sample");
}

}  // namespace

MatrixXd segment_min_norm(const MatrixXd& F, const MatrixXd& g) {
  const MatrixXd d = F - g;
  const double dd = d.squaredNorm();
  if (dd == 0.0) return g;
  const double lam = std::clamp((F.array() * d.array()).sum() / dd, 0.0, 1.0);
  return (1.0 - lam) * F + lam * g;
}

double estimate_lipschitz(const MatrixXd& K0, double delta,
                          const GradientOracle& grad, Rng& rng, int samples) {
  double best = 0.0;
  int got = 0;
  for (int k = 0; k < 20 * samples && got < samples; ++k) {
    const MatrixXd Xi = sample_ball(K0, delta, rng);
    try {
      best = std::max(best, grad(Xi).norm());
      ++got;
    } catch (const NondifferentiableError&) {
    } catch (const InstabilityError&) {
    }
  }
  if (got == 0) throw OracleError("estimate_lipschitz: no admissible sample");
  return 1.5 * best;
}

IngdDirection ingd_min_norm(const Plant& plant, const MatrixXd& K,
                            double delta, double eps, double lipschitz,
                            int max_inner, const Oracles& oracles, Rng& rng) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("ingd: L must be > 0");
  detail::CountedOracles o(oracles);
  IngdDirection out;
  out.J_center = o.cost(K);
  out.F = sampled_gradient(plant, o.gradient,
                           [&] { return sample_ball(K, delta, rng); });
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto trial = [&](const MatrixXd& F) {
    return detail::cost_or_inf(plant, o.cost, K - (delta / F.norm()) * F);
  };
  for (;;) {
    const double fn = out.F.norm();
    if (fn <= eps) break;
    out.J_trial = trial(out.F);
    if (out.J_center - out.J_trial > 0.25 * delta * fn) break;
    if (out.inner_iters >= max_inner) {
      out.capped = true;
      break;
    }
    ++out.inner_iters;
    const double x = std::min(1.0, fn * fn / (128.0 * lipschitz * lipschitz));
    const double r = 0.5 * fn * std::sqrt(1.0 - (1.0 - x) * (1.0 - x));
    const MatrixXd Y = sample_ball(out.F, r, rng);
    const MatrixXd dir = Y / Y.norm();
    const MatrixXd g = sampled_gradient(plant, o.gradient, [&] {
      return MatrixXd(K - unif(rng) * delta * dir);
    });
    out.F = segment_min_norm(out.F, g);
  }
  out.oracle_calls = o.count();
  return out;
}

SolveResult solve_ingd(const Plant& plant, const Policy& K0,
                       const IngdConfig& cfg, const Oracles& oracles,
                       const RunOptions& run) {
  check_policy_shape(plant, K0.K);
  validate(cfg);
  if (!is_stabilizing(plant, K0)) {
    throw std::invalid_argument("solve_ingd: K0 is not stabilizing");
  }
  detail::CountedOracles o(oracles);
  detail::TraceRecorder rec(run, o);
  Rng rng(run.seed);
  const Oracles counted{o.cost, o.gradient};

  double L = cfg.lipschitz;
  if (!(L > 0.0)) {
    L = estimate_lipschitz(K0.K, cfg.delta, o.gradient, rng);
    std::ostringstream os;
    os.precision(17);
    os << L;
    rec.trace.metadata.emplace_back("lipschitz_estimate", os.str());
  }

  MatrixXd K = K0.K;
  double J = o.cost(K);
  double delta = cfg.delta;
  rec.trace.status = TraceStatus::iteration_cap;

  for (int n = 0; n < cfg.max_iters; ++n) {
    if (rec.reached_target(J)) {
      rec.trace.status = TraceStatus::converged;
      break;
    }
    IngdDirection dir;
    try {
      dir = ingd_min_norm(plant, K, delta, cfg.eps, L, cfg.max_inner, counted,
                          rng);
    } catch (const InfeasibleBallError& e) {
      rec.trace.metadata.emplace_back("abort_reason", e.what());
      rec.trace.status = TraceStatus::infeasible_abort;
      break;
    } catch (const OracleError& e) {
      rec.trace.metadata.emplace_back("abort_reason", e.what());
      rec.trace.status = TraceStatus::infeasible_abort;
      break;
    }
    const double fn = dir.F.norm();
    if (fn <= cfg.eps) {
      rec.add(n, J, fn, delta, cfg.eps, 0.0, K);
      if (!cfg.anneal) {
        rec.trace.status = TraceStatus::stationary_target;
        break;
      }
      delta *= cfg.anneal_factor;
      if (delta < cfg.min_delta) {
        rec.trace.status = TraceStatus::stationary_target;
        break;
      }
      continue;
    }
    const bool descent = dir.J_center - dir.J_trial > 0.25 * delta * fn;
    rec.add(n, J, fn, delta, cfg.eps, descent ? delta : 0.0, K);
    if (descent) {
      K = K - (delta / fn) * dir.F;
      J = dir.J_trial;
    }
  }
  rec.add(static_cast<int>(rec.trace.records.size()), J, NAN, delta, cfg.eps,
          0.0, K);
  if (rec.reached_target(J) && rec.trace.status == TraceStatus::iteration_cap) {
    rec.trace.status = TraceStatus::converged;
  }
  return {Policy{K}, std::move(rec.trace)};
}

}  // namespace hinfsearch
